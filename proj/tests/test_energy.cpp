// Copyright 2026 The rlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <numbers>

#include "rlab/energy.hpp"
#include "rlab/rng.hpp"

using namespace rlab;

namespace
{
const double kPi = std::numbers::pi;

Vec v1(double a)
{
    Vec x(1);
    x << a;
    return x;
}
Vec v2(double a, double b)
{
    Vec x(2);
    x << a, b;
    return x;
}

Configuration line(std::initializer_list<double> xs)
{
    Configuration c;
    c.d = 1;
    for (double x : xs) c.points.push_back(v1(x));
    return c;
}

// i.i.d. uniform points in a disk, by an independent stream
Configuration disk_points(std::size_t n, double R, std::uint64_t seed)
{
    CounterRng rng(seed);
    Configuration c;
    c.d = 2;
    while (c.size() < n)
    {
        const double x = rng.uniform(-R, R), y = rng.uniform(-R, R);
        if (x * x + y * y < R * R) c.points.push_back(v2(x, y));
    }
    return c;
}

double g_of(double s, double r) { return s == 0.0 ? -std::log(r) : std::pow(r, -s) / s; }

}  // namespace

TEST(Energy, TwoPointsOnUnitIntervalLog)
{
    // uniform [0,1], s = 0: potential and self energy by direct 1D quadrature
    const RieszKernel K = make_kernel(1, 0.0);
    const BackgroundMeasure mu = BackgroundMeasure::uniform_box(v1(0.0), v1(1.0));
    boost::math::quadrature::tanh_sinh<double> ts;
    // U(x) = -\int_0^1 log|x - y| dy in closed form
    auto U = [&](double x) {
        auto xl = [](double t) { return t > 0.0 ? t * std::log(t) : 0.0; };
        return 1.0 - xl(x) - xl(1.0 - x);
    };
    EXPECT_NEAR(U(0.25), ts.integrate([](double y) { return -std::log(0.25 - y); }, 0.0, 0.25) +
                             ts.integrate([](double y) { return -std::log(y - 0.25); }, 0.25, 1.0),
                1e-12);
    const double self = 0.5 * ts.integrate([&](double x) { return U(x); }, 0.0, 1.0);
    const double expected = std::log(2.0) / 4.0 - 0.5 * (U(0.25) + U(0.75)) + self;
    const EnergyReport r = modulated_energy(line({0.25, 0.75}), mu, K);
    EXPECT_NEAR(r.F_N, expected, 1e-10);
    EXPECT_NEAR(r.self_term, 0.75, 1e-10);
    EXPECT_LT(r.reconstruction_error(), 1e-12);
}

TEST(Energy, SinglePoint)
{
    const RieszKernel K = make_kernel(2, 1.5);
    const BackgroundMeasure mu = BackgroundMeasure::uniform_ball(v2(0, 0), 1.0);
    Configuration c;
    c.d = 2;
    c.points.push_back(v2(0.3, -0.2));
    const EnergyReport r = modulated_energy(c, mu, K);
    EXPECT_EQ(r.pair_sum, 0.0);
    EXPECT_NEAR(r.F_N, -mu.potential(K, c.points[0]) + mu.self_energy(K), 1e-14);
}

TEST(Energy, DilationCovariance)
{
    for (double s : {1.0, 1.5, 0.5})
    {
        const RieszKernel K = make_kernel(2, s);
        const BackgroundMeasure mu1 = BackgroundMeasure::uniform_ball(v2(0, 0), 1.0);
        const BackgroundMeasure mu2 = BackgroundMeasure::uniform_ball(v2(0, 0), 2.0);
        Configuration c = disk_points(12, 1.0, 7);
        Configuration c2 = c;
        for (Vec& p : c2.points) p *= 2.0;
        const double F1 = modulated_energy(c, mu1, K).F_N, F2 = modulated_energy(c2, mu2, K).F_N;
        EXPECT_NEAR(F2, std::pow(2.0, -s) * F1, 1e-7 * std::abs(F1)) << "s=" << s;
    }
}

TEST(Energy, ParallelSerialAndReference)
{
    const RieszKernel K = make_kernel(2, 1.0);
    const Configuration c = disk_points(700, 1.0, 11);
    const double par = pair_term(c, K, true), ser = pair_term(c, K, false);
    EXPECT_EQ(par, ser);  // bit-identical
    EXPECT_NEAR(pair_term_reference(c, K), par, 1e-12 * std::abs(par));
}

TEST(Energy, ReportJson)
{
    const RieszKernel K = make_kernel(2, 0.0);
    const BackgroundMeasure mu = BackgroundMeasure::uniform_ball(v2(0, 0), 1.0);
    const EnergyReport r = energy_report(disk_points(20, 1.0, 3), mu, K, Region::whole(2), 1.0);
    const nlohmann::json j = r.to_json();
    for (const char* key : {"F_N", "F_N_local", "xi", "log_term", "error_term", "components", "lambda", "C"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_DOUBLE_EQ(j["components"]["pair_sum"].get<double>(), r.pair_sum);
    EXPECT_DOUBLE_EQ(r.F_N_local, r.F_N);
}

TEST(Energy, TruncatedEqualsEnergyForSmallRadii)
{
    for (auto [d, s] : {std::pair{2, 0.0}, std::pair{2, 1.5}, std::pair{1, 0.5}, std::pair{1, -0.5}})
    {
        const RieszKernel K = make_kernel(d, s);
        const BackgroundMeasure mu = d == 2 ? BackgroundMeasure::uniform_ball(v2(0, 0), 1.0)
                                            : BackgroundMeasure::uniform_box(v1(0.0), v1(1.0));
        Configuration c;
        if (d == 2)
            c = disk_points(30, 1.0, 5);
        else
            c = line({0.05, 0.2, 0.21, 0.5, 0.77, 0.9});
        const double F = modulated_energy(c, mu, K).F_N;
        std::vector<double> r = nn_radii(c, mu);
        EXPECT_NEAR(truncated_functional(c, mu, K, r, Region::whole(d)), F, 1e-10 * std::max(1.0, std::abs(F)));
        for (double& a : r) a *= 1e-3;
        EXPECT_NEAR(truncated_functional(c, mu, K, r, Region::whole(d)), F, 1e-10 * std::max(1.0, std::abs(F)));
    }
}

TEST(Energy, TruncatedMonotone)
{
    const RieszKernel K = make_kernel(2, 1.0);
    const BackgroundMeasure mu = BackgroundMeasure::uniform_ball(v2(0, 0), 1.0);
    CounterRng rng(99);
    for (int trial = 0; trial < 10; ++trial)
    {
        const Configuration c = disk_points(16, 1.0, 1000 + trial);
        std::vector<double> a = nn_radii(c, mu);
        std::vector<double> b = a;
        for (double& x : b) x *= 1.0 + 6.0 * rng.uniform();
        const double Fa = truncated_functional(c, mu, K, a, Region::whole(2));
        const double Fb = truncated_functional(c, mu, K, b, Region::whole(2));
        EXPECT_LE(Fb, Fa + 1e-10);
    }
}

TEST(Energy, LocalOnLargeSetMatchesWholeSpace)
{
    // When Omega holds every charge well inside, the energy outside Omega x R^k
    // is minus the boundary flux, so value - flux/(2c) is F_N; the flux itself
    // shrinks as Omega grows.
    struct Case
    {
        int d;
        double s;
    };
    for (Case cs : {Case{1, 0.5}, Case{1, 0.0}, Case{1, -0.5}, Case{1, -1.0}, Case{2, 0.0}})
    {
        const RieszKernel K = make_kernel(cs.d, cs.s);
        BackgroundMeasure mu = cs.d == 1 ? BackgroundMeasure::uniform_box(v1(0.0), v1(1.0))
                                         : BackgroundMeasure::uniform_ball(v2(0, 0), 1.0);
        const Configuration c = cs.d == 1 ? line({0.1, 0.3, 0.35, 0.6, 0.85}) : disk_points(12, 1.0, 21);
        const double F = modulated_energy(c, mu, K).F_N;
        double prev = std::numeric_limits<double>::infinity();
        for (double L : {3.0, 6.0, 12.0})
        {
            const Region omega = cs.d == 1 ? Region::box(v1(-L), v1(L)) : Region::box(v2(-L, -L), v2(L, L));
            const LocalEnergy le = local_modulated_energy(c, mu, K, omega);
            EXPECT_NEAR(le.value - le.flux / (2.0 * K.c_ds), F, 1e-9 * std::max(1.0, std::abs(F)))
                << "d=" << cs.d << " s=" << cs.s << " L=" << L;
            EXPECT_LE(le.flux, 1e-15);
            EXPECT_LE(std::abs(le.value - F), prev);
            prev = std::abs(le.value - F);
        }
    }
}

TEST(Energy, LocalVanishesWhereFieldIsFlat)
{
    // d = 1, s = -1: h is constant beyond the hull of all charges
    const RieszKernel K = make_kernel(1, -1.0);
    const BackgroundMeasure mu = BackgroundMeasure::uniform_box(v1(0.0), v1(1.0));
    const LocalEnergy le = local_modulated_energy(line({0.2, 0.5, 0.9}), mu, K, Region::box(v1(5.0), v1(6.0)));
    EXPECT_NEAR(le.value, 0.0, 1e-13);
}

namespace
{
// Independent volume oracle for d = 1, uniform [0,1], k = 1:
// (1/2c)(\int_{Omega x R} |z|^gamma |grad h|^2 - c/N^2 sum_I g(r_i)) - N^{-1} sum_I \int f dmu
double local_volume_oracle(const Configuration& c, double s, const std::vector<double>& eta, double w0, double w1)
{
    const double gam = s;  // d = 1, k = 1
    const double cds = 2.0 * boost::math::beta((gam + 1.0) / 2.0, 0.5);
    const double N = static_cast<double>(c.size());
    // closed forms of the background field for the uniform unit interval
    auto dUx = [&](double x, double z) {
        const double r0 = std::hypot(x, z), r1 = std::hypot(x - 1.0, z);
        if (s == 0.0) return -(std::log(r0) - std::log(r1));
        return (std::pow(r0, -s) - std::pow(r1, -s)) / s;
    };
    auto G = [&](double T) {
        const double th = std::atan(std::abs(T));
        const double v = std::sin(th) * std::sin(th);
        const double val = 0.5 * boost::math::beta(0.5, (s + 1.0) / 2.0, v);
        return T < 0 ? -val : val;
    };
    auto dUz = [&](double x, double z) { return -std::pow(z, -s) * (G(x / z) - G((x - 1.0) / z)); };
    auto grad2 = [&](double x, double z) {
        double gx = 0.0, gz = 0.0;
        for (std::size_t j = 0; j < c.size(); ++j)
        {
            const double u = x - c.points[j][0], r = std::hypot(u, z);
            if (r <= eta[j]) continue;
            const double dg = -std::pow(r, -s - 1.0);
            gx += dg * u / r / N;
            gz += dg * z / r / N;
        }
        gx -= dUx(x, z);
        gz -= dUz(x, z);
        return gx * gx + gz * gz;
    };
    boost::math::quadrature::tanh_sinh<double> ts;
    auto inner = [&](double z) {
        std::vector<double> br{w0, w1};
        for (std::size_t j = 0; j < c.size(); ++j)
            if (z < eta[j])
            {
                const double h = std::sqrt(eta[j] * eta[j] - z * z);
                br.push_back(c.points[j][0] - h);
                br.push_back(c.points[j][0] + h);
            }
        std::sort(br.begin(), br.end());
        double acc = 0.0;
        for (std::size_t m = 0; m + 1 < br.size(); ++m)
        {
            const double a = std::max(br[m], w0), b = std::min(br[m + 1], w1);
            if (b > a)
                acc += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                    [&](double x) { return grad2(x, z); }, a, b, 5, 1e-10);
        }
        return std::pow(z, gam) * acc;
    };
    std::vector<double> zb{0.0};
    for (double e : eta) zb.push_back(e);
    std::sort(zb.begin(), zb.end());
    zb.push_back(4.0);
    double E = 0.0;
    for (std::size_t m = 0; m + 1 < zb.size(); ++m)
        if (zb[m + 1] > zb[m]) E += ts.integrate(inner, zb[m], zb[m + 1]);
    boost::math::quadrature::exp_sinh<double> es;
    E += es.integrate([&](double t) { return inner(4.0 + t); }, 0.0, std::numeric_limits<double>::infinity());
    E *= 2.0;  // z < 0
    double self = 0.0, exc = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i)
    {
        const double x = c.points[i][0];
        if (x < w0 || x > w1) continue;
        self += g_of(s, eta[i]);
        auto f = [&](double y) {
            const double r = std::abs(y - x);
            return r >= eta[i] ? 0.0 : g_of(s, r) - g_of(s, eta[i]);
        };
        exc += ts.integrate(f, std::max(0.0, x - eta[i]), x) + ts.integrate(f, x, std::min(1.0, x + eta[i]));
    }
    return E / (2.0 * cds) - self / (2.0 * N * N) - exc / N;
}
}  // namespace

TEST(Energy, LocalMatchesVolumeOracle)
{
    const RieszKernel K = make_kernel(1, 0.5);
    const BackgroundMeasure mu = BackgroundMeasure::uniform_box(v1(0.0), v1(1.0));
    const Configuration c = line({0.12, 0.37, 0.55, 0.86});
    const Region omega = Region::box(v1(0.3), v1(0.8));
    const LocalScales ls = local_scales(c, mu, omega);
    const LocalEnergy le = local_modulated_energy(c, mu, K, omega);
    const double oracle = local_volume_oracle(c, 0.5, ls.rtilde, 0.3, 0.8);
    EXPECT_NEAR(le.value, oracle, 1e-6 * std::abs(oracle)) << "oracle " << oracle;
    EXPECT_LT(le.error_estimate, 1e-3 * std::abs(le.value));
    // grid refinement changes the value by < 1e-3 relative
    LocalEnergyOptions fine;
    fine.panel_nodes = 32;
    fine.de_level = 6;
    const LocalEnergy le2 = local_modulated_energy(c, mu, K, omega, fine);
    EXPECT_LT(std::abs(le2.value - le.value), 1e-3 * std::abs(le.value));
}

TEST(Energy, XiBracketTerms)
{
    const BackgroundMeasure mu = BackgroundMeasure::uniform_ball(v2(0, 0), 1.0);
    const Configuration c = disk_points(64, 1.0, 8);
    {
        const RieszKernel K = make_kernel(2, 1.0);
        const XiParts x = xi_bracket(c, mu, K, Region::whole(2), 2.0);
        EXPECT_EQ(x.log_term, 0.0);
    }
    {
        const RieszKernel K = make_kernel(2, 0.0);
        const XiParts x = xi_bracket(c, mu, K, Region::whole(2), 2.0);
        const double N = 64.0, sup = 1.0 / kPi;
        EXPECT_NEAR(x.log_term, std::log(N * sup) / (2.0 * N * 2.0), 1e-14);
        EXPECT_NEAR(x.unit_error, sup * std::pow(N * sup, -1.0), 1e-14);
        EXPECT_NEAR(x.xi, x.F_local + x.log_term + 2.0 * x.unit_error, 1e-14);
    }
}

TEST(Energy, CalibratedConstantMakesBracketNonnegative)
{
    const RieszKernel K = make_kernel(2, 0.0);
    const BackgroundMeasure mu = BackgroundMeasure::uniform_ball(v2(0, 0), 1.0);
    std::vector<XiParts> xs;
    std::vector<Configuration> cs;
    for (int t = 0; t < 8; ++t)
    {
        cs.push_back(disk_points(32, 1.0, 300 + t));
        xs.push_back(xi_bracket(cs.back(), mu, K, Region::whole(2), 1.0));
    }
    const double C = calibrate_xi_constant(xs);
    for (const XiParts& x : xs) EXPECT_GE(x.F_local + x.log_term + C * x.unit_error, -1e-15);
}

TEST(Energy, ScaleSums)
{
    const RieszKernel K = make_kernel(1, 0.5);
    const std::size_t N = 40;
    const Configuration c = equispaced_interval(N, 0.0, 1.0);
    const double gap = 1.0 / N;
    // all gaps above lambda: no microscale pairs
    EXPECT_EQ(scale_sums(c, K, Region::whole(1), 0.5 * gap, 1.0, {0.0}).micro, 0.0);
    // brute-force oracle for the mesoscale sum with a = 0
    const double lambda = gap, ell = 0.3;
    double brute = 0.0;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j)
        {
            if (i == j) continue;
            const double r = std::abs(c.points[i][0] - c.points[j][0]);
            if (r >= lambda * (1 - 1e-12) && r <= ell) brute += std::pow(r, -0.5);
        }
    brute /= double(N * N);
    const ScaleSums ss = scale_sums(c, K, Region::whole(1), lambda * (1 - 1e-12), ell, {0.0, 1.0});
    EXPECT_NEAR(ss.meso[0], brute, 1e-12 * brute);
    EXPECT_EQ(ss.meso_points, N);
    // boundary restriction: dist >= 4 ell excludes every point of [0,1] in Omega = [0,1]
    const ScaleSums sb = scale_sums(c, K, Region::box(v1(0.0), v1(1.0)), lambda, 0.1, {0.0});
    std::size_t expect = 0;
    for (const Vec& p : c.points) expect += (std::min(p[0], 1.0 - p[0]) >= 0.4) ? 1 : 0;
    EXPECT_EQ(sb.meso_points, expect);
    std::size_t expect_micro = 0;
    for (const Vec& p : c.points) expect_micro += (std::min(p[0], 1.0 - p[0]) >= 2.0 * lambda) ? 1 : 0;
    EXPECT_EQ(sb.micro_points, expect_micro);
}
