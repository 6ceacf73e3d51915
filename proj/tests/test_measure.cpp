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

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <fstream>
#include <numbers>

#include "rlab/measure.hpp"

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

// Newton potential of the uniform unit disk by iterated quadrature about its
// centre: (1/pi) \int_0^1 r \int_0^{2pi} -log|p - r e^{i t}| dt dr
double disk_log_potential_oracle(double px)
{
    boost::math::quadrature::tanh_sinh<double> ts;
    auto inner = [&](double r) {
        const int n = 2048;
        double acc = 0.0;
        for (int k = 0; k < n; ++k)
        {
            const double t = 2.0 * kPi * (k + 0.5) / n;
            const double dx = px - r * std::cos(t), dy = -r * std::sin(t);
            acc += -std::log(std::hypot(dx, dy));
        }
        return acc * 2.0 * kPi / n * r;
    };
    return ts.integrate(inner, 0.0, 1.0) / kPi;
}

ExtendedPoint ep(const Vec& x, double z)
{
    Vec zz(1);
    zz << z;
    return {x, zz};
}
}  // namespace

TEST(Measure, DiskLogPotentialExamples)
{
    auto mu = BackgroundMeasure::uniform_ball(v2(0, 0), 1.0);
    RieszKernel K = make_kernel(2, 0.0);
    EXPECT_NEAR(mu.potential(K, v2(0, 0)), 0.5, 1e-14);
    EXPECT_NEAR(mu.potential(K, v2(2, 0)), -std::log(2.0), 1e-14);
    EXPECT_NEAR(disk_log_potential_oracle(0.0), 0.5, 1e-8);
    EXPECT_NEAR(disk_log_potential_oracle(2.0), -std::log(2.0), 1e-8);
    for (double x : {0.0, 0.3, 0.999, 1.0, 1.001, 2.0})
    {
        EXPECT_NEAR(mu.potential_quadrature(K, {v2(x, 0), Vec()}), mu.potential(K, v2(x, 0)), 1e-10) << x;
        EXPECT_NEAR(mu.force_quadrature(K, {v2(x, 0.0), Vec()})[0], mu.force(K, v2(x, 0.0))[0], 1e-9) << x;
    }
    EXPECT_LT(mu.force(K, v2(0, 0)).norm(), 1e-15);
}

TEST(Measure, BallCoulomb3D)
{
    Vec c(3);
    c << 0.0, 0.0, 0.0;
    auto mu = BackgroundMeasure::uniform_ball(c, 1.0);
    RieszKernel K = make_kernel(3, 1.0);
    for (double x : {0.0, 0.5, 0.9999, 1.5})
    {
        Vec p(3);
        p << x, 0.0, 0.0;
        EXPECT_NEAR(mu.potential_quadrature(K, {p, Vec()}), mu.potential(K, p), 1e-10) << x;
        EXPECT_NEAR((mu.force_quadrature(K, {p, Vec()}) - mu.force(K, p)).norm(), 0.0, 1e-9) << x;
    }
}

TEST(Measure, ForceIsGradientOfPotential)
{
    struct Case
    {
        BackgroundMeasure mu;
        double s;
        double z;
    };
    std::vector<Case> cases = {
        {BackgroundMeasure::uniform_ball(v2(0, 0), 1.0), 1.5, 0.0},
        {BackgroundMeasure::uniform_ball(v2(0, 0), 1.0), 1.5, 0.2},
        {BackgroundMeasure::uniform_ball(v2(0, 0), 1.0), 0.5, 0.05},
        {BackgroundMeasure::uniform_box(v2(0, 0), v2(1, 2)), 0.5, 0.0},
        {BackgroundMeasure::uniform_box(v2(0, 0), v2(1, 2)), 1.2, 0.3},
        {BackgroundMeasure::uniform_box(v1(0), v1(1)), 0.5, 0.1},
        {BackgroundMeasure::semicircle(), 0.3, 0.0},
        {BackgroundMeasure::semicircle(), 0.3, 0.2},
        {BackgroundMeasure::semicircle(), 0.0, 0.0},
    };
    for (auto& cs : cases)
    {
        const int d = cs.mu.d();
        RieszKernel K = make_kernel(d, cs.s);
        std::vector<Vec> pts = d == 1 ? std::vector<Vec>{v1(0.3), v1(1.7), v1(2.5)}
                                      : std::vector<Vec>{v2(0.3, 0.4), v2(0.95, 0.1), v2(1.4, -0.3)};
        for (const Vec& x : pts)
        {
            auto P = [&](const Vec& y, double z) {
                return K.k == 1 ? cs.mu.potential(K, ep(y, z)) : cs.mu.potential(K, y);
            };
            const Vec F = K.k == 1 ? cs.mu.force(K, ep(x, cs.z)) : cs.mu.force(K, x);
            const double h = 1e-4;
            for (int i = 0; i < d; ++i)
            {
                Vec a = x, b = x;
                a[i] += h;
                b[i] -= h;
                const double fd = (P(a, cs.z) - P(b, cs.z)) / (2 * h);
                EXPECT_NEAR(F[i], fd, 1e-5 * std::max(1.0, std::abs(fd))) << cs.mu.family_name() << " s=" << cs.s;
            }
            if (K.k == 1 && cs.z != 0.0)
            {
                const double fd = (P(x, cs.z + h) - P(x, cs.z - h)) / (2 * h);
                EXPECT_NEAR(F[d], fd, 1e-5 * std::max(1.0, std::abs(fd))) << cs.mu.family_name();
            }
        }
    }
}

TEST(Measure, CoulombLaplacian)
{
    auto mu = BackgroundMeasure::uniform_box(v2(0, 0), v2(1, 1));
    RieszKernel K = make_kernel(2, 0.0);
    const Vec x = v2(0.4, 0.55);
    const double h = 1e-3;
    double lap = -4.0 * mu.potential(K, x);
    for (int i = 0; i < 2; ++i)
        for (int sg = -1; sg <= 1; sg += 2)
        {
            Vec y = x;
            y[i] += sg * h;
            lap += mu.potential(K, y);
        }
    lap /= h * h;
    EXPECT_NEAR(-lap, K.c_ds * 1.0, 1e-4);
}

TEST(Measure, SelfEnergyValues)
{
    // unit disk, log kernel: (1/2) \int U dmu with U = (1 - r^2)/2 gives 1/8
    auto disk = BackgroundMeasure::uniform_ball(v2(0, 0), 1.0);
    EXPECT_NEAR(disk.self_energy(make_kernel(2, 0.0)), 0.125, 1e-10);
    // unit interval: 1/(s(1-s)(2-s))
    auto I = BackgroundMeasure::uniform_box(v1(0), v1(1));
    for (double s : {0.25, 0.5, 0.75})
        EXPECT_NEAR(I.self_energy(make_kernel(1, s)), 1.0 / (s * (1 - s) * (2 - s)), 1e-12);
    // semicircle of radius 2: 1/8 as well
    EXPECT_NEAR(BackgroundMeasure::semicircle().self_energy(make_kernel(1, 0.0)), 0.125, 1e-8);
    // 3D ball Coulomb: 3/(5R)
    Vec c(3);
    c.setZero();
    EXPECT_NEAR(BackgroundMeasure::uniform_ball(c, 2.0).self_energy(make_kernel(3, 1.0)), 3.0 / (5.0 * 2.0), 1e-10);
}

TEST(Measure, SelfEnergyDilationAndTranslation)
{
    for (double s : {0.0, 0.7, 1.5})
    {
        RieszKernel K = make_kernel(2, s);
        for (bool box : {false, true})
        {
            auto a = box ? BackgroundMeasure::uniform_box(v2(0, 0), v2(1, 0.5))
                         : BackgroundMeasure::uniform_ball(v2(0, 0), 1.0);
            auto b = box ? BackgroundMeasure::uniform_box(v2(0, 0), v2(3, 1.5))
                         : BackgroundMeasure::uniform_ball(v2(0, 0), 3.0);
            auto t = box ? BackgroundMeasure::uniform_box(v2(5, -2), v2(6, -1.5))
                         : BackgroundMeasure::uniform_ball(v2(5, -2), 1.0);
            const double ea = a.self_energy(K), eb = b.self_energy(K);
            // the self energy carries the factor 1/2, so the log shift is halved
            if (s == 0.0)
                EXPECT_NEAR(eb, ea - 0.5 * std::log(3.0), 1e-10);
            else
                EXPECT_NEAR(eb, std::pow(3.0, -s) * ea, 1e-10 * std::abs(ea));
            EXPECT_EQ(t.self_energy(K), ea);
        }
    }
}

TEST(Measure, SelfEnergyBoxMatchesGenericRoute)
{
    // (1/2) \int U dmu with U from the polar potential quadrature
    auto box = BackgroundMeasure::uniform_box(v2(0, 0), v2(1, 0.5));
    RieszKernel K = make_kernel(2, 0.6);
    const VolumeRule vr = box.outer_rule(16, 3);
    double acc = 0.0;
    for (std::size_t q = 0; q < vr.nodes.size(); ++q) acc += vr.weights[q] * box.potential(K, vr.nodes[q]);
    EXPECT_NEAR(box.self_energy(K), 0.5 * acc, 1e-7);
}

TEST(Measure, TabulatedMatchesUniform)
{
    auto box = BackgroundMeasure::uniform_box(v2(0, 0), v2(1, 1));
    auto tab = BackgroundMeasure::tabulated(v2(0, 0), v2(0.5, 0.5), {2, 2}, {1.0, 1.0, 1.0, 1.0});
    EXPECT_NEAR(tab.mass(), 1.0, 1e-15);
    RieszKernel K = make_kernel(2, 0.8);
    for (const Vec& x : {v2(0.3, 0.3), v2(0.5, 0.5), v2(2, 0.1)})
    {
        EXPECT_NEAR(tab.potential(K, x), box.potential(K, x), 1e-10);
        EXPECT_NEAR((tab.force(K, x) - box.force(K, x)).norm(), 0.0, 1e-9);
    }
    EXPECT_NEAR(tab.self_energy(K), box.self_energy(K), 1e-6);
}

TEST(Measure, SupDensity)
{
    auto disk = BackgroundMeasure::uniform_ball(v2(0, 0), 2.0);
    EXPECT_NEAR(disk.sup_density(Region::whole(2)), 1.0 / (4.0 * kPi), 1e-15);
    EXPECT_EQ(disk.sup_density(Region::ball(v2(5, 0), 1.0)), 0.0);
    EXPECT_NEAR(disk.sup_density(Region::box(v2(1, 1), v2(3, 3))), 1.0 / (4.0 * kPi), 1e-15);
    auto sc = BackgroundMeasure::semicircle();
    EXPECT_NEAR(sc.sup_density(Region::box(v1(1.0), v1(3.0))), std::sqrt(3.0) / (2.0 * kPi), 1e-15);
}

TEST(Measure, SamplingDeterministicAndUnbiased)
{
    auto disk = BackgroundMeasure::uniform_ball(v2(0.5, -1.0), 1.0);
    Configuration a = disk.sample(100, 42), b = disk.sample(100, 42), c = disk.sample(100, 43);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
    EXPECT_NE(a[0], c[0]);
    Configuration big = disk.sample(100000, 7);
    Vec m = Vec::Zero(2);
    for (const Vec& p : big.points) m += p;
    m /= static_cast<double>(big.size());
    const double se = std::sqrt(0.25 / big.size());  // per-coordinate variance R^2/4
    EXPECT_LT(std::abs(m[0] - 0.5), 4 * se);
    EXPECT_LT(std::abs(m[1] + 1.0), 4 * se);
    auto sc = BackgroundMeasure::semicircle();
    Configuration s = sc.sample(100000, 3);
    double mean = 0.0, var = 0.0;
    for (const Vec& p : s.points) mean += p[0];
    mean /= s.size();
    for (const Vec& p : s.points) var += (p[0] - mean) * (p[0] - mean);
    var /= s.size();
    EXPECT_LT(std::abs(mean), 4 * std::sqrt(1.0 / s.size()));
    EXPECT_NEAR(var, 1.0, 0.02);
}

TEST(Measure, CsvRoundTrip)
{
    const std::string path = ::testing::TempDir() + "/density.csv";
    {
        std::ofstream out(path);
        out << "x,y,density\n";
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) out << 0.25 + 0.5 * i << "," << 0.25 + 0.5 * j << "," << 1.0 << "\n";
    }
    auto m = BackgroundMeasure::from_csv(path);
    EXPECT_EQ(m.d(), 2);
    EXPECT_NEAR(m.mass(), 1.0, 1e-14);
    EXPECT_NEAR(m.density(v2(0.9, 0.1)), 1.0, 0.0);
    EXPECT_EQ(m.density(v2(1.1, 0.1)), 0.0);
}
