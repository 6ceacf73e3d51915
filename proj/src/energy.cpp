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

#include "rlab/energy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rlab/quadrature.hpp"
#include "rlab/summation.hpp"

namespace rlab
{
double EnergyReport::reconstruction_error() const
{
    const double rebuilt = pair_sum - cross_term + self_term;
    const double scale = std::max({std::abs(F_N), std::abs(pair_sum), std::abs(cross_term), std::abs(self_term)});
    return std::abs(rebuilt - F_N) / std::max(scale, 1e-300);
}

nlohmann::json EnergyReport::to_json() const
{
    nlohmann::json j;
    j["N"] = N;
    j["d"] = d;
    j["s"] = s;
    j["F_N"] = F_N;
    j["components"] = {{"pair_sum", pair_sum}, {"cross_term", cross_term}, {"self_term", self_term}};
    j["region"] = region;
    j["F_N_local"] = F_N_local;
    j["xi"] = xi;
    j["log_term"] = log_term;
    j["error_term"] = error_term;
    j["C"] = C;
    j["lambda"] = lambda;
    j["sup_hat"] = sup_hat;
    j["n_inside"] = n_inside;
    return j;
}

namespace
{
// Deterministic (1/2N^2) sum_{i != j} F(i, j): compensated row sums, then a
// compensated sum of the rows in index order.
template <class F>
double ordered_pair_sum(std::size_t n, bool parallel, F&& term)
{
    std::vector<double> row(n, 0.0);
#pragma omp parallel for schedule(dynamic, 16) if (parallel)
    for (std::size_t i = 0; i < n; ++i)
    {
        Neumaier acc;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) acc.add(term(i, j));
        row[i] = acc.value();
    }
    const double N = static_cast<double>(n);
    return ordered_sum(row) / (2.0 * N * N);
}

double sphere_area(int d)
{
    return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

// \int_0^T f_eta(r) r^{d-1} dr for T <= eta
double excess_antiderivative(const RieszKernel& K, double eta, double T)
{
    if (T <= 0.0) return 0.0;
    const int d = K.d;
    const double Td = std::pow(T, d);
    if (K.s == 0.0) return Td / d * (std::log(eta) - std::log(T)) + Td / (d * d);
    const double s = K.s;
    return std::pow(T, d - s) / (s * (d - s)) - std::pow(eta, -s) * Td / (s * d);
}
}  // namespace

double pair_term(const Configuration& c, const RieszKernel& K, bool parallel)
{
    if (c.size() < 2) return 0.0;
    return ordered_pair_sum(c.size(), parallel,
                            [&](std::size_t i, std::size_t j) { return K.g_r2((c.points[i] - c.points[j]).squaredNorm()); });
}

double pair_term_reference(const Configuration& c, const RieszKernel& K)
{
    const std::size_t n = c.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) acc += K.g((c.points[i] - c.points[j]).norm());
    const double N = static_cast<double>(n);
    return acc / (N * N);
}

std::vector<double> point_potentials(const Configuration& c, const BackgroundMeasure& mu, const RieszKernel& K,
                                     bool parallel)
{
    std::vector<double> u(c.size());
#pragma omp parallel for schedule(dynamic, 4) if (parallel)
    for (std::size_t i = 0; i < c.size(); ++i) u[i] = mu.potential(K, c.points[i]);
    return u;
}

EnergyReport modulated_energy(const Configuration& c, const BackgroundMeasure& mu, const RieszKernel& K,
                              bool parallel)
{
    if (c.size() == 0) throw ConfigurationError("modulated energy of an empty configuration");
    if (c.d != K.d || mu.d() != K.d) throw ParameterError("dimension mismatch between configuration, measure and kernel");
    validate(c);
    EnergyReport r;
    r.N = c.size();
    r.d = K.d;
    r.s = K.s;
    r.pair_sum = pair_term(c, K, parallel);
    r.cross_term = ordered_sum(point_potentials(c, mu, K, parallel)) / static_cast<double>(c.size());
    r.self_term = mu.self_energy(K);
    r.F_N = r.pair_sum - r.cross_term + r.self_term;
    return r;
}

double excess_cross(const BackgroundMeasure& mu, const RieszKernel& K, const Vec& p, double eta)
{
    if (!(eta > 0.0)) return 0.0;
    const Region& S = mu.support();
    if (S.distance_to(p) >= eta) return 0.0;
    const int d = K.d;
    if (d == 1)
    {
        // split at p, the support ends and any density jumps
        std::vector<double> br{p[0] - eta, p[0], p[0] + eta};
        auto add_edge = [&](double e) {
            if (e > p[0] - eta && e < p[0] + eta) br.push_back(e);
        };
        add_edge(mu.bbox_lo()[0]);
        add_edge(mu.bbox_hi()[0]);
        if (mu.family() == BackgroundMeasure::Family::Tabulated)
            for (const auto& [cell, v] : mu.cells())
            {
                add_edge(cell.lo[0]);
                add_edge(cell.hi[0]);
            }
        std::sort(br.begin(), br.end());
        br.erase(std::unique(br.begin(), br.end()), br.end());
        const double lo = mu.bbox_lo()[0], hi = mu.bbox_hi()[0];
        Neumaier acc;
        for (std::size_t k = 0; k + 1 < br.size(); ++k)
        {
            const double a = std::max(br[k], lo), b = std::min(br[k + 1], hi);
            if (!(b > a)) continue;
            const bool right = a >= p[0];
            auto f = [&](double x, double dl, double dr) {
                const double r = right ? (a == p[0] ? dl : x - p[0]) : (b == p[0] ? dr : p[0] - x);
                if (!(r > 0.0)) return 0.0;
                Vec y(1);
                y << x;
                return K.f_eta(r, eta) * mu.density(y);
            };
            acc.add(de_integrate(f, a, b, 6));
        }
        return acc.value();
    }
    auto A = [&](double t) { return excess_antiderivative(K, eta, std::min(t, eta)); };
    PolarOptions opt;
    opt.n_ang = 128;
    using F = BackgroundMeasure::Family;
    if (mu.family() == F::UniformBall || mu.family() == F::UniformBox)
    {
        const double rho = mu.density(S.kind == Region::Kind::Ball ? S.center : Vec(0.5 * (S.lo + S.hi)));
        if (S.contains(p) && S.dist_to_boundary(p) >= eta) return rho * sphere_area(d) * A(eta);
        return rho * polar_radial(S, p, A, opt);
    }
    if (mu.family() == F::Tabulated)
    {
        Neumaier acc;
        for (const auto& [cell, v] : mu.cells())
        {
            if (cell.distance_to(p) >= eta) continue;
            acc.add(v * polar_radial(cell, p, A, opt));
        }
        return acc.value();
    }
    throw CapabilityError("excess integral: unsupported measure family " + mu.family_name());
}

double truncated_functional(const Configuration& c, const BackgroundMeasure& mu, const RieszKernel& K,
                            const std::vector<double>& alpha, const Region& omega, bool parallel)
{
    if (alpha.size() != c.size()) throw ParameterError("truncated functional: one radius per point required");
    for (double a : alpha)
        if (!(a > 0.0)) throw ParameterError("truncated functional: radii must be positive");
    if (!omega.is_whole()) return local_electric(c, mu, K, alpha, omega).value;
    validate(c);
    const double pair = c.size() < 2 ? 0.0 : ordered_pair_sum(c.size(), parallel, [&](std::size_t i, std::size_t j) {
        return smeared_pair(K, (c.points[i] - c.points[j]).norm(), alpha[i], alpha[j]);
    });
    const double cross = ordered_sum(point_potentials(c, mu, K, parallel)) / static_cast<double>(c.size());
    return pair - cross + mu.self_energy(K);
}

Region hat_region(const Region& omega, double lambda)
{
    const double e = 0.25 * lambda;
    switch (omega.kind)
    {
    case Region::Kind::Whole: return omega;
    case Region::Kind::Ball: return Region::ball(omega.center, omega.radius + e);
    case Region::Kind::Box: return Region::box(Vec(omega.lo.array() - e), Vec(omega.hi.array() + e));
    }
    return omega;
}

XiParts xi_from(double F_local, const Configuration& c, const BackgroundMeasure& mu, const RieszKernel& K,
                const Region& omega, double C)
{
    const LocalScales ls = local_scales(c, mu, omega);
    XiParts x;
    x.F_local = F_local;
    x.lambda = ls.lambda;
    x.n_inside = omega.is_whole() ? c.size() : ls.inside.size();
    x.sup_hat = mu.sup_density(hat_region(omega, ls.lambda));
    const double N = static_cast<double>(c.size());
    const double nI = static_cast<double>(x.n_inside);
    x.log_term = K.s == 0.0 ? -nI * std::log(ls.lambda) / (2.0 * N * N) : 0.0;
    x.unit_error = nI * x.sup_hat * std::pow(ls.lambda, K.d - K.s) / N;
    x.xi = F_local + x.log_term + C * x.unit_error;
    return x;
}

XiParts xi_bracket(const Configuration& c, const BackgroundMeasure& mu, const RieszKernel& K, const Region& omega,
                   double C)
{
    if (!(C > 0.0)) throw ParameterError("xi bracket: the constant C must be positive");
    const double F = omega.is_whole() ? modulated_energy(c, mu, K).F_N : local_modulated_energy(c, mu, K, omega).value;
    return xi_from(F, c, mu, K, omega, C);
}

EnergyReport energy_report(const Configuration& c, const BackgroundMeasure& mu, const RieszKernel& K,
                           const Region& omega, double C, bool parallel)
{
    EnergyReport r = modulated_energy(c, mu, K, parallel);
    const double F = omega.is_whole() ? r.F_N : local_modulated_energy(c, mu, K, omega).value;
    const XiParts x = xi_from(F, c, mu, K, omega, C);
    r.region = omega.is_whole() ? "whole" : (omega.kind == Region::Kind::Ball ? "ball" : "box");
    r.F_N_local = F;
    r.xi = x.xi;
    r.log_term = x.log_term;
    r.error_term = C * x.unit_error;
    r.C = C;
    r.lambda = x.lambda;
    r.sup_hat = x.sup_hat;
    r.n_inside = x.n_inside;
    return r;
}

double calibrate_xi_constant(const std::vector<XiParts>& samples)
{
    double C = 0.0;
    for (const XiParts& x : samples)
    {
        if (!(x.unit_error > 0.0)) continue;
        C = std::max(C, -(x.F_local + x.log_term) / x.unit_error);
    }
    return C;
}

ScaleSums scale_sums(const Configuration& c, const RieszKernel& K, const Region& omega, double lambda, double ell,
                     const std::vector<double>& a_values)
{
    if (!(lambda > 0.0) || !(ell >= lambda)) throw ParameterError("scale sums need 0 < lambda <= ell");
    const std::size_t n = c.size();
    const std::size_t na = a_values.size();
    std::vector<char> in(n), micro_ok(n), meso_ok(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        in[i] = omega.contains(c.points[i]);
        const double dist = omega.dist_to_boundary(c.points[i]);
        micro_ok[i] = in[i] && dist >= 2.0 * lambda;
        meso_ok[i] = in[i] && dist >= 4.0 * ell;
    }
    std::vector<double> micro_row(n, 0.0), meso_row(n * na, 0.0);
    std::vector<std::size_t> micro_cnt(n, 0), meso_cnt(n * na, 0);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t i = 0; i < n; ++i)
    {
        if (!micro_ok[i] && !meso_ok[i]) continue;
        Neumaier mic;
        std::vector<Neumaier> mes(na);
        for (std::size_t j = 0; j < n; ++j)
        {
            if (j == i || !in[j]) continue;
            const double r = (c.points[i] - c.points[j]).norm();
            if (micro_ok[i] && r <= lambda)
            {
                mic.add(K.s == 0.0 ? K.g(r / lambda) : K.g(r));
                ++micro_cnt[i];
            }
            if (meso_ok[i] && r >= lambda && r <= ell)
                for (std::size_t a = 0; a < na; ++a)
                {
                    mes[a].add(std::pow(r, -K.s - a_values[a]));
                    ++meso_cnt[i * na + a];
                }
        }
        micro_row[i] = mic.value();
        for (std::size_t a = 0; a < na; ++a) meso_row[i * na + a] = mes[a].value();
    }
    const double N2 = static_cast<double>(n) * static_cast<double>(n);
    ScaleSums out;
    out.micro = ordered_sum(micro_row) / N2;
    out.meso.assign(na, 0.0);
    out.meso_pairs.assign(na, 0);
    for (std::size_t a = 0; a < na; ++a)
    {
        Neumaier acc;
        for (std::size_t i = 0; i < n; ++i)
        {
            acc.add(meso_row[i * na + a]);
            out.meso_pairs[a] += meso_cnt[i * na + a];
        }
        out.meso[a] = acc.value() / N2;
    }
    for (std::size_t i = 0; i < n; ++i)
    {
        out.micro_pairs += micro_cnt[i];
        out.micro_points += micro_ok[i] ? 1 : 0;
        out.meso_points += meso_ok[i] ? 1 : 0;
    }
    return out;
}

}  // namespace rlab
