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

#include "rlab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "rlab/quadrature.hpp"
#include "rlab/rng.hpp"

namespace rlab
{
namespace
{
constexpr double kPi = std::numbers::pi;

double z_of(const RieszKernel& K, const ExtendedPoint& p)
{
    if (p.z.size() == 0) return 0.0;
    if (K.k == 0) throw ParameterError("extension coordinate given for a kernel with k = 0");
    return p.z[0];
}

// \int_0^R g(r) r^k dr at z = 0
double monomial_moment(const RieszKernel& K, int k, double R)
{
    if (R <= 0.0) return 0.0;
    const double e = k + 1.0;
    if (K.log_case()) return -std::pow(R, e) * (std::log(R) / e - 1.0 / (e * e));
    return std::pow(R, e - K.s) / (K.s * (e - K.s));
}
// \int_a^b f(|y - x|, y - a, b - y) dy, split at x when x is interior and
// split is set; all three distances keep full relative precision
double semicircle_integrate(double a, double b, double x, bool split,
                            const std::function<double(double, double, double)>& f)
{
    if (split && x > a && x < b)
        return de_integrate([&](double, double dl, double dr) { return f(dr, dl, (b - x) + dr); }, a, x, 5) +
               de_integrate([&](double, double dl, double dr) { return f(dl, (x - a) + dl, dr); }, x, b, 5);
    return de_integrate([&](double y, double dl, double dr) { return f(std::abs(y - x), dl, dr); }, a, b, 5);
}
}  // namespace

double radial_power_integral(int p, double q, double z, double R)
{
    if (R <= 0.0) return 0.0;
    const double az = std::abs(z);
    const double e = p + 2.0 * q + 1.0;
    if (az == 0.0)
    {
        if (std::abs(e) < 1e-14) return std::log(R);
        return std::pow(R, e) / e;
    }
    if (p == 1)
    {
        if (std::abs(q + 1.0) < 1e-14) return 0.5 * std::log1p((R / az) * (R / az));
        return (std::pow(R * R + az * az, q + 1.0) - std::pow(az, 2.0 * q + 2.0)) / (2.0 * (q + 1.0));
    }
    // r = |z| sinh(tau)
    const double T = std::asinh(R / az);
    const int panels = std::max(1, static_cast<int>(std::ceil(T / 2.0)));
    const Rule& gl = gauss_legendre(16);
    double acc = 0.0;
    for (int k = 0; k < panels; ++k)
    {
        const double a = T * k / panels, b = T * (k + 1) / panels;
        const double hw = 0.5 * (b - a), mid = 0.5 * (a + b);
        for (std::size_t j = 0; j < gl.size(); ++j)
        {
            const double tau = mid + hw * gl.x[j];
            acc += hw * gl.w[j] * std::pow(std::sinh(tau), p) * std::pow(std::cosh(tau), 2.0 * q + 1.0);
        }
    }
    return std::pow(az, e) * acc;
}

double radial_potential_antiderivative(const RieszKernel& K, double z, double R)
{
    if (R <= 0.0) return 0.0;
    const int d = K.d;
    if (z == 0.0) return monomial_moment(K, d - 1, R);
    if (!K.log_case()) return radial_power_integral(d - 1, -0.5 * K.s, z, R) / K.s;
    const double az = std::abs(z);
    if (d == 1) return -(0.5 * R * std::log(R * R + az * az) - R + az * std::atan(R / az));
    if (d == 2)
    {
        // \int_0^R -(1/2) log(r^2 + z^2) r dr
        const double u = R * R + az * az;
        return -0.25 * (u * std::log(u) - u - (az * az * std::log(az * az) - az * az));
    }
    throw CapabilityError("log kernel with extension is only defined for d = 1");
}

BackgroundMeasure BackgroundMeasure::uniform_ball(const Vec& c, double R, double mass)
{
    BackgroundMeasure m;
    m.d_ = static_cast<int>(c.size());
    if (m.d_ < 1 || m.d_ > 3) throw ParameterError("uniform ball needs 1 <= d <= 3");
    m.family_ = Family::UniformBall;
    m.mass_ = mass;
    m.support_ = Region::ball(c, R);
    m.rho0_ = mass / m.support_.volume();
    return m;
}

BackgroundMeasure BackgroundMeasure::uniform_box(const Vec& lo, const Vec& hi, double mass)
{
    BackgroundMeasure m;
    m.d_ = static_cast<int>(lo.size());
    if (m.d_ < 1 || m.d_ > 2) throw ParameterError("uniform box needs d = 1 or 2");
    m.family_ = Family::UniformBox;
    m.mass_ = mass;
    m.support_ = Region::box(lo, hi);
    m.rho0_ = mass / m.support_.volume();
    return m;
}

BackgroundMeasure BackgroundMeasure::semicircle(double center, double radius)
{
    BackgroundMeasure m;
    m.d_ = 1;
    m.family_ = Family::Semicircle;
    m.mass_ = 1.0;
    Vec c(1);
    c << center;
    m.support_ = Region::ball(c, radius);
    m.rho0_ = 2.0 / (kPi * radius * radius);
    return m;
}

BackgroundMeasure BackgroundMeasure::tabulated(const Vec& lo, const Vec& h, const std::vector<int>& n,
                                               std::vector<double> values)
{
    BackgroundMeasure m;
    m.d_ = static_cast<int>(lo.size());
    if (m.d_ < 1 || m.d_ > 2) throw ParameterError("tabulated densities support d = 1 or 2");
    if (static_cast<int>(n.size()) != m.d_ || h.size() != m.d_) throw ParameterError("grid shape mismatch");
    std::size_t total = 1;
    for (int a : n) total *= static_cast<std::size_t>(a);
    if (values.size() != total) throw ParameterError("tabulated density has wrong number of values");
    double cellvol = h.prod();
    double mass = 0.0;
    for (double v : values)
    {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError("density must be finite and nonnegative");
        mass += v * cellvol;
    }
    m.family_ = Family::Tabulated;
    m.mass_ = mass;
    m.lo_ = lo;
    m.h_ = h;
    m.n_ = n;
    m.values_ = std::move(values);
    Vec hi = lo;
    for (int i = 0; i < m.d_; ++i) hi[i] += h[i] * n[i];
    m.support_ = Region::box(lo, hi);
    return m;
}

BackgroundMeasure BackgroundMeasure::from_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ParameterError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line))
    {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        std::vector<double> v;
        double x;
        while (ss >> x) v.push_back(x);
        if (!v.empty()) rows.push_back(v);
    }
    if (rows.empty()) throw ParameterError("empty density table " + path);
    const int d = static_cast<int>(rows[0].size()) - 1;
    if (d < 1 || d > 2) throw ParameterError("density table must have 2 or 3 columns");
    std::vector<std::vector<double>> axes(d);
    for (const auto& r : rows)
    {
        if (static_cast<int>(r.size()) != d + 1) throw ParameterError("ragged density table");
        for (int a = 0; a < d; ++a) axes[a].push_back(r[a]);
    }
    Vec lo(d), h(d);
    std::vector<int> n(d);
    for (int a = 0; a < d; ++a)
    {
        std::sort(axes[a].begin(), axes[a].end());
        axes[a].erase(std::unique(axes[a].begin(), axes[a].end(),
                                  [](double x, double y) { return std::abs(x - y) < 1e-12 * (1 + std::abs(x)); }),
                      axes[a].end());
        n[a] = static_cast<int>(axes[a].size());
        h[a] = n[a] > 1 ? (axes[a].back() - axes[a].front()) / (n[a] - 1) : 1.0;
        lo[a] = axes[a].front() - 0.5 * h[a];
    }
    std::size_t total = 1;
    for (int a : n) total *= static_cast<std::size_t>(a);
    if (total != rows.size()) throw ParameterError("density table is not a full regular grid");
    std::vector<double> vals(total, 0.0);
    for (const auto& r : rows)
    {
        std::size_t idx = 0;
        for (int a = 0; a < d; ++a)
            idx = idx * n[a] + static_cast<std::size_t>(std::lround((r[a] - lo[a]) / h[a] - 0.5));
        vals[idx] = r[d];
    }
    return tabulated(lo, h, n, std::move(vals));
}

std::string BackgroundMeasure::family_name() const
{
    switch (family_)
    {
    case Family::UniformBall: return "uniform-ball";
    case Family::UniformBox: return "uniform-box";
    case Family::Semicircle: return "semicircle";
    case Family::Tabulated: return "tabulated";
    }
    return "unknown";
}

double BackgroundMeasure::density(const Vec& x) const
{
    switch (family_)
    {
    case Family::UniformBall:
    case Family::UniformBox: return support_.contains(x) ? rho0_ : 0.0;
    case Family::Semicircle:
    {
        const double R = support_.radius;
        const double u = x[0] - support_.center[0];
        if (std::abs(u) >= R) return 0.0;
        return rho0_ * std::sqrt((R - u) * (R + u));
    }
    case Family::Tabulated:
    {
        std::size_t idx = 0;
        for (int a = 0; a < d_; ++a)
        {
            const double t = (x[a] - lo_[a]) / h_[a];
            if (t < 0.0 || t > n_[a]) return 0.0;
            const int i = std::min(n_[a] - 1, static_cast<int>(std::floor(t)));
            idx = idx * n_[a] + i;
        }
        return values_[idx];
    }
    }
    return 0.0;
}

double BackgroundMeasure::max_density() const
{
    switch (family_)
    {
    case Family::UniformBall:
    case Family::UniformBox: return rho0_;
    case Family::Semicircle: return rho0_ * support_.radius;
    case Family::Tabulated: return *std::max_element(values_.begin(), values_.end());
    }
    return 0.0;
}

Vec BackgroundMeasure::bbox_lo() const
{
    if (support_.kind == Region::Kind::Ball) return Vec(support_.center.array() - support_.radius);
    return support_.lo;
}

Vec BackgroundMeasure::bbox_hi() const
{
    if (support_.kind == Region::Kind::Ball) return Vec(support_.center.array() + support_.radius);
    return support_.hi;
}

bool BackgroundMeasure::closed_form(const RieszKernel& K) const
{
    if (family_ == Family::UniformBall && d_ == 2 && K.s == 0.0) return true;
    if (family_ == Family::UniformBall && d_ == 3 && K.s == 1.0) return true;
    if (family_ == Family::Semicircle && K.s == 0.0) return true;
    if ((family_ == Family::UniformBall || family_ == Family::UniformBox) && d_ == 1) return true;
    return false;
}

std::vector<std::pair<Region, double>> BackgroundMeasure::cells() const
{
    std::vector<std::pair<Region, double>> out;
    std::size_t total = values_.size();
    for (std::size_t idx = 0; idx < total; ++idx)
    {
        if (values_[idx] == 0.0) continue;
        std::size_t r = idx;
        Vec lo(d_), hi(d_);
        for (int a = d_ - 1; a >= 0; --a)
        {
            const int i = static_cast<int>(r % n_[a]);
            r /= n_[a];
            lo[a] = lo_[a] + h_[a] * i;
            hi[a] = lo[a] + h_[a];
        }
        out.emplace_back(Region::box(lo, hi), values_[idx]);
    }
    return out;
}

double BackgroundMeasure::potential(const RieszKernel& K, const ExtendedPoint& p) const
{
    if (p.x.size() != d_ || K.d != d_) throw ParameterError("dimension mismatch in potential");
    const double z = z_of(K, p);
    if (z == 0.0)
    {
        const Vec q = support_.kind == Region::Kind::Ball ? Vec(p.x - support_.center) : p.x;
        if (family_ == Family::UniformBall && d_ == 2 && K.s == 0.0)
        {
            const double r = q.norm(), R = support_.radius;
            if (r <= R) return mass_ * (-std::log(R) + 0.5 * (1.0 - r * r / (R * R)));
            return -mass_ * std::log(r);
        }
        if (family_ == Family::UniformBall && d_ == 3 && K.s == 1.0)
        {
            const double r = q.norm(), R = support_.radius;
            if (r <= R) return mass_ * (3.0 * R * R - r * r) / (2.0 * R * R * R);
            return mass_ / r;
        }
        if (family_ == Family::Semicircle && K.s == 0.0)
        {
            const double R = support_.radius;
            const double u = std::abs(q[0]) / R * 2.0;  // rescale to radius 2
            double U;
            if (u <= 2.0)
                U = -u * u / 4.0 + 0.5;
            else
            {
                const double w = std::sqrt(u * u - 4.0);
                U = -u * u / 4.0 + 0.5 + u * w / 4.0 - std::log(0.5 * (u + w));
            }
            return U - std::log(R / 2.0);
        }
    }
    return potential_quadrature(K, p);
}

double BackgroundMeasure::potential_quadrature(const RieszKernel& K, const ExtendedPoint& p) const
{
    const double z = z_of(K, p);
    auto A = [&](double R) { return radial_potential_antiderivative(K, z, R); };
    switch (family_)
    {
    case Family::UniformBall:
    case Family::UniformBox: return rho0_ * polar_radial(support_, p.x, A, PolarOptions{});
    case Family::Tabulated:
    {
        double acc = 0.0;
        for (const auto& [cell, v] : cells()) acc += v * polar_radial(cell, p.x, A, PolarOptions{});
        return acc;
    }
    case Family::Semicircle:
    {
        const double c = support_.center[0], R = support_.radius;
        const double a = c - R, b = c + R, x = p.x[0];
        auto f = [&](double dist, double ya, double yb) {
            return K.g(std::sqrt(dist * dist + z * z)) * rho0_ * std::sqrt(ya * yb);
        };
        return semicircle_integrate(a, b, x, z == 0.0, f);
    }
    }
    return 0.0;
}

Vec BackgroundMeasure::force(const RieszKernel& K, const ExtendedPoint& p) const
{
    if (p.x.size() != d_ || K.d != d_) throw ParameterError("dimension mismatch in force");
    const double z = z_of(K, p);
    if (z == 0.0)
    {
        Vec out = Vec::Zero(K.D());
        const Vec q = support_.kind == Region::Kind::Ball ? Vec(p.x - support_.center) : p.x;
        if (family_ == Family::UniformBall && d_ == 2 && K.s == 0.0)
        {
            const double r2 = q.squaredNorm(), R = support_.radius;
            out.head(2) = (r2 <= R * R) ? Vec(-mass_ * q / (R * R)) : Vec(-mass_ * q / r2);
            return out;
        }
        if (family_ == Family::UniformBall && d_ == 3 && K.s == 1.0)
        {
            const double r = q.norm(), R = support_.radius;
            out.head(3) = (r <= R) ? Vec(-mass_ * q / (R * R * R)) : Vec(-mass_ * q / (r * r * r));
            return out;
        }
        if (family_ == Family::Semicircle && K.s == 0.0)
        {
            const double R = support_.radius;
            const double u = q[0] / R * 2.0;
            double F;
            if (std::abs(u) <= 2.0)
                F = -u / 2.0;
            else
                F = (-u + std::copysign(std::sqrt(u * u - 4.0), u)) / 2.0;
            out[0] = F * 2.0 / R;
            return out;
        }
    }
    return force_quadrature(K, p);
}

Vec BackgroundMeasure::force_quadrature(const RieszKernel& K, const ExtendedPoint& p) const
{
    const double z = z_of(K, p);
    const double q = -0.5 * (K.s + 2.0);
    Vec out = Vec::Zero(K.D());
    auto B = [&](double R) { return radial_power_integral(d_, q, z, R); };
    auto C = [&](double R) { return radial_power_integral(d_ - 1, q, z, R); };
    auto add_region = [&](const Region& S, double rho) {
        out.head(d_) += rho * polar_radial_dir(S, p.x, B, PolarOptions{});
        if (K.k == 1 && z != 0.0) out[d_] += -z * rho * polar_radial(S, p.x, C, PolarOptions{});
    };
    switch (family_)
    {
    case Family::UniformBall:
    case Family::UniformBox: add_region(support_, rho0_); break;
    case Family::Tabulated:
        for (const auto& [cell, v] : cells()) add_region(cell, v);
        break;
    case Family::Semicircle:
    {
        // x-derivative moved onto the density: \int g(x - y, z) rho'(y) dy
        const double c = support_.center[0], R = support_.radius;
        const double a = c - R, b = c + R, x = p.x[0];
        auto fx = [&](double dist, double ya, double yb) {
            const double drho = rho0_ * (yb - ya) / (2.0 * std::sqrt(ya * yb));
            return K.g(std::sqrt(dist * dist + z * z)) * drho;
        };
        out[0] = semicircle_integrate(a, b, x, z == 0.0, fx);
        if (K.k == 1 && z != 0.0)
        {
            auto fz = [&](double dist, double ya, double yb) {
                const double dist2 = dist * dist + z * z;
                return -z * std::pow(dist2, q) * rho0_ * std::sqrt(ya * yb);
            };
            out[1] = semicircle_integrate(a, b, x, true, fz);
        }
        break;
    }
    }
    return out;
}

double BackgroundMeasure::self_energy(const RieszKernel& K) const
{
    {
        std::lock_guard<std::mutex> lock(cache_->m);
        auto it = cache_->self.find(K.s);
        if (it != cache_->self.end()) return it->second;
    }
    const double v = self_energy_compute(K);
    std::lock_guard<std::mutex> lock(cache_->m);
    cache_->self[K.s] = v;
    return v;
}

double BackgroundMeasure::self_energy_compute(const RieszKernel& K) const
{
    if (K.d != d_) throw ParameterError("dimension mismatch in self energy");
    const double m2 = mass_ * mass_;
    const bool interval = (family_ == Family::UniformBall || family_ == Family::UniformBox) && d_ == 1;
    if (interval)
    {
        const double L = support_.kind == Region::Kind::Ball ? 2.0 * support_.radius : support_.hi[0] - support_.lo[0];
        // (1/L^2) \int_0^L g(u) (L - u) du
        const double I = L * monomial_moment(K, 0, L) - monomial_moment(K, 1, L);
        return m2 / (L * L) * I;
    }
    if (family_ == Family::UniformBall && d_ == 2)
    {
        const double R = support_.radius;
        auto f = [&](double u, double, double dr) {
            const double lens = 2.0 * R * R * std::acos(std::min(1.0, u / (2.0 * R))) -
                                0.5 * u * std::sqrt(std::max(0.0, dr * (4.0 * R - dr)));
            return K.g(u) * lens * 2.0 * kPi * u;
        };
        const double area = kPi * R * R;
        return 0.5 * m2 / (area * area) * de_integrate(f, 0.0, 2.0 * R, 6);
    }
    if (family_ == Family::UniformBall && d_ == 3)
    {
        const double R = support_.radius;
        auto f = [&](double u, double, double dr) {
            const double lens = kPi * (4.0 * R + u) * dr * dr / 12.0;
            return K.g(u) * lens * 4.0 * kPi * u * u;
        };
        const double vol = support_.volume();
        return 0.5 * m2 / (vol * vol) * de_integrate(f, 0.0, 2.0 * R, 6);
    }
    if (family_ == Family::UniformBox && d_ == 2)
    {
        const double a = support_.hi[0] - support_.lo[0], b = support_.hi[1] - support_.lo[1];
        const double ts = std::atan2(b, a);
        auto M = [&](double R, double th) {
            const double sn = std::sin(th), cs = std::cos(th);
            return a * b * monomial_moment(K, 1, R) - (a * sn + b * cs) * monomial_moment(K, 2, R) +
                   sn * cs * monomial_moment(K, 3, R);
        };
        double I = 0.0;
        const Rule r1 = legendre_on(48, 0.0, ts), r2 = legendre_on(48, ts, 0.5 * kPi);
        for (std::size_t j = 0; j < r1.size(); ++j) I += r1.w[j] * M(a / std::cos(r1.x[j]), r1.x[j]);
        for (std::size_t j = 0; j < r2.size(); ++j) I += r2.w[j] * M(b / std::sin(r2.x[j]), r2.x[j]);
        const double area = a * b;
        return 0.5 * m2 / (area * area) * 4.0 * I;
    }
    // generic: (1/2) \int U dmu
    double acc = 0.0;
    const VolumeRule vr = outer_rule(24, 3);
    for (std::size_t q = 0; q < vr.nodes.size(); ++q) acc += vr.weights[q] * potential(K, vr.nodes[q]);
    return 0.5 * acc;
}

double BackgroundMeasure::sup_density(const Region& omega) const
{
    if (omega.is_whole()) return max_density();
    switch (family_)
    {
    case Family::UniformBall:
    case Family::UniformBox: return region_distance(support_, omega) == 0.0 ? rho0_ : 0.0;
    case Family::Semicircle:
    {
        const double dist = omega.distance_to(support_.center);
        const double R = support_.radius;
        if (dist >= R) return 0.0;
        return rho0_ * std::sqrt((R - dist) * (R + dist));
    }
    case Family::Tabulated:
    {
        double m = 0.0;
        for (const auto& [cell, v] : cells())
            if (region_distance(cell, omega) == 0.0) m = std::max(m, v);
        return m;
    }
    }
    return 0.0;
}

Configuration BackgroundMeasure::sample(std::size_t N, std::uint64_t seed) const
{
    CounterRng rng = CounterRng(seed).split("sample");
    Configuration c;
    c.d = d_;
    const Vec lo = bbox_lo(), hi = bbox_hi();
    const double top = max_density();
    while (c.points.size() < N)
    {
        Vec x(d_);
        for (int a = 0; a < d_; ++a) x[a] = rng.uniform(lo[a], hi[a]);
        const double u = rng.uniform() * top;
        if (u < density(x)) c.points.push_back(x);
    }
    return c;
}

double BackgroundMeasure::integrate_near(const Vec& p, double beta, const std::function<double(double, const Vec&)>& phi,
                                         const PolarOptions& opt) const
{
    switch (family_)
    {
    case Family::UniformBall:
    case Family::UniformBox: return rho0_ * polar_integrate(support_, p, beta, phi, opt);
    case Family::Tabulated:
    {
        double acc = 0.0;
        for (const auto& [cell, v] : cells()) acc += v * polar_integrate(cell, p, beta, phi, opt);
        return acc;
    }
    case Family::Semicircle:
    {
        const double c = support_.center[0], R = support_.radius;
        const double a = c - R, b = c + R;
        double acc = 0.0;
        angular_nodes(support_, p, opt, [&](const Vec& w, double aw, double t0, double t1) {
            auto f = [&](double r, double dl, double dr) {
                double ya, yb;
                if (w[0] > 0.0)
                {
                    yb = dr;
                    ya = t0 > 0.0 ? dl : (p[0] - a) + r;
                }
                else
                {
                    ya = dr;
                    yb = t0 > 0.0 ? dl : (b - p[0]) + r;
                }
                return std::pow(r, beta) * phi(r, w) * rho0_ * std::sqrt(ya * yb);
            };
            acc += aw * de_integrate(f, t0, t1, opt.de_level + 1);
        });
        return acc;
    }
    }
    return 0.0;
}

Eigen::VectorXd BackgroundMeasure::integrate_near_vec(const Vec& p, double beta, int m,
                                                      const std::function<void(double, const Vec&, Eigen::VectorXd&)>& phi,
                                                      const PolarOptions& opt) const
{
    switch (family_)
    {
    case Family::UniformBall:
    case Family::UniformBox: return rho0_ * polar_integrate_vec(support_, p, beta, m, phi, opt);
    case Family::Tabulated:
    {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(m);
        for (const auto& [cell, v] : cells()) acc += v * polar_integrate_vec(cell, p, beta, m, phi, opt);
        return acc;
    }
    case Family::Semicircle:
    {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(m);
        for (int comp = 0; comp < m; ++comp)
        {
            Eigen::VectorXd tmp(m);
            acc[comp] = integrate_near(
                p, beta,
                [&](double r, const Vec& w) {
                    phi(r, w, tmp);
                    return tmp[comp];
                },
                opt);
        }
        return acc;
    }
    }
    return Eigen::VectorXd::Zero(m);
}

VolumeRule BackgroundMeasure::outer_rule(int n_ang, int de_level) const
{
    VolumeRule vr;
    switch (family_)
    {
    case Family::UniformBall:
    case Family::UniformBox:
        vr = volume_rule(support_, n_ang, de_level);
        for (double& w : vr.weights) w *= rho0_;
        return vr;
    case Family::Semicircle:
        vr = volume_rule(support_, n_ang, de_level);
        for (std::size_t q = 0; q < vr.nodes.size(); ++q) vr.weights[q] *= density(vr.nodes[q]);
        return vr;
    case Family::Tabulated:
        for (const auto& [cell, v] : cells())
        {
            VolumeRule c = volume_rule(cell, n_ang, de_level);
            for (std::size_t q = 0; q < c.nodes.size(); ++q)
            {
                vr.nodes.push_back(c.nodes[q]);
                vr.weights.push_back(v * c.weights[q]);
            }
        }
        return vr;
    }
    return vr;
}

Vec BackgroundMeasure::mean() const
{
    const VolumeRule vr = outer_rule(16, 3);
    Vec m = Vec::Zero(d_);
    double w = 0.0;
    for (std::size_t q = 0; q < vr.nodes.size(); ++q)
    {
        m += vr.weights[q] * vr.nodes[q];
        w += vr.weights[q];
    }
    return m / w;
}

}  // namespace rlab
