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

#include "rlab/commutator.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>

#include "rlab/quadrature.hpp"
#include "rlab/sphere.hpp"
#include "rlab/summation.hpp"

namespace rlab
{
namespace
{
double ipow(double x, int e)
{
    double r = 1.0;
    for (int k = 0; k < e; ++k) r *= x;
    return r;
}

// (v(x + r w) - v(x)) / r
Vec difference_quotient(const TransportField& v, const Vec& x, const Vec& vx, double r, const Vec& w)
{
    if (r < 1e-12) return v.jacobian(x).transpose() * w;
    return (v.value(x + r * w) - vx) / r;
}

// g(|u + tV|) - g(|u|), without cancellation for small t
double g_increment(const RieszKernel& K, const Vec& u, const Vec& V, double t)
{
    const double u2 = u.squaredNorm();
    const double delta = (2.0 * t * u.dot(V) + t * t * V.squaredNorm()) / u2;
    const double l = std::log1p(delta);
    if (K.s == 0.0) return -0.5 * l;
    return std::pow(u2, -0.5 * K.s) * std::expm1(-0.5 * K.s * l) / K.s;
}

// Deterministic sum of f(i) over i < n, optionally in parallel.
template <class F>
double ordered_parallel_sum(std::size_t n, bool parallel, F&& f)
{
    std::vector<double> part(n);
#pragma omp parallel for schedule(dynamic, 4) if (parallel)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) part[i] = f(static_cast<std::size_t>(i));
    return ordered_sum(part);
}

struct TermParts
{
    double pp, pm, mm;
};

// The three parts of \int\int_{off-diagonal} k(x, y) d(mu_N - mu)^2 for a kernel
// given in polar form around x: k(x, x + r w) r^{d-1} = r^{d-1-s} phi(x, v(x), r, w, D)
// with D the difference quotient of v.  pair(i, j) gives the particle term.
template <class Pair, class Phi>
TermParts three_parts(const Configuration& c, const BackgroundMeasure& mu, const RieszKernel& K,
                      const TransportField& v, const TransportFormOptions& opt, Pair&& pair, Phi&& phi)
{
    const std::size_t N = c.size();
    const double Nd = static_cast<double>(N);
    std::vector<Vec> vx(N);
    for (std::size_t i = 0; i < N; ++i) vx[i] = v.value(c[i]);
    const double beta = c.d - 1.0 - K.s;

    TermParts out{};
    out.pp = ordered_parallel_sum(N, opt.parallel, [&](std::size_t i) {
                 Neumaier row;
                 for (std::size_t j = 0; j < N; ++j)
                     if (j != i) row.add(pair(c[i] - c[j], vx[i] - vx[j]));
                 return row.value();
             }) /
             (Nd * Nd);

    auto inner = [&](const Vec& x, const Vec& v0) {
        return mu.integrate_near(
            x, beta,
            [&](double r, const Vec& w) { return phi(w, difference_quotient(v, x, v0, r, w)); }, opt.inner);
    };
    out.pm = ordered_parallel_sum(N, opt.parallel, [&](std::size_t i) { return inner(c[i], vx[i]); }) / Nd;

    if (opt.measure_term)
    {
        out.mm = *opt.measure_term;
        return out;
    }
    const VolumeRule vr = mu.outer_rule(opt.outer_n_ang, opt.outer_de_level);
    out.mm = ordered_parallel_sum(vr.nodes.size(), opt.parallel, [&](std::size_t q) {
        const Vec& x = vr.nodes[q];
        return vr.weights[q] * inner(x, v.value(x));
    });
    return out;
}
}  // namespace

nlohmann::json TransportForm::to_json() const
{
    return {{"n", n}, {"value", value}, {"particle_particle", pp}, {"particle_measure", pm}, {"measure_measure", mm}};
}

TransportForm transport_form(int n, const Configuration& c, const BackgroundMeasure& mu, const RieszKernel& K,
                             const TransportField& v, const TransportFormOptions& opt)
{
    if (n < 1) throw ParameterError("transport_form: n must be at least 1");
    if (n > 6) throw CapabilityError("transport_form: n <= 6");
    validate(c);
    // grad^n g(-r w) : (-r D)^n = r^{-s} grad^n g(-w) : (-D)^n
    const TermParts tp = three_parts(
        c, mu, K, v, opt, [&](const Vec& X, const Vec& a) { return K.contract(n, X, a); },
        [&](const Vec& w, const Vec& D) { return K.contract(n, -w, -D); });
    TransportForm tf;
    tf.n = n;
    tf.pp = tp.pp;
    tf.pm = tp.pm;
    tf.mm = tp.mm;
    tf.value = tp.pp - 2.0 * tp.pm + tp.mm;
    return tf;
}

double energy_increment(double t, const Configuration& c, const BackgroundMeasure& mu, const RieszKernel& K,
                        const TransportField& v, const TransportFormOptions& opt)
{
    if (t == 0.0) return 0.0;
    TransportFormOptions o = opt;
    o.measure_term.reset();  // depends on t
    // x - y + t(v(x) - v(y)) = r(-w - tD) for y = x + r w
    const TermParts tp = three_parts(
        c, mu, K, v, o, [&](const Vec& X, const Vec& a) { return g_increment(K, X, a, t); },
        [&](const Vec& w, const Vec& D) { return g_increment(K, -w, -D, t); });
    return 0.5 * tp.pp - tp.pm + 0.5 * tp.mm;
}

std::vector<FdDerivative> fd_energy_derivatives(int max_n, const Configuration& c, const BackgroundMeasure& mu,
                                                const RieszKernel& K, const TransportField& v, double h,
                                                const TransportFormOptions& opt)
{
    if (max_n < 1 || max_n > 3) throw ParameterError("fd_energy_derivative: 1 <= n <= 3");
    const double lip = v.sup_norm(1);
    if (h == 0.0) h = lip > 0.0 ? 1e-3 / lip : 1e-3;
    const double reach = max_n == 3 ? 2.0 * h : h;
    if (lip > 0.0 && reach * lip >= 0.5) throw ParameterError("fd_energy_derivative: step too large for invertibility");
    std::map<double, double> memo;
    auto E = [&](double t) {
        auto it = memo.find(t);
        if (it != memo.end()) return it->second;
        return memo[t] = energy_increment(t, c, mu, K, v, opt);
    };
    auto central = [&](int n, double s) {
        switch (n)
        {
        case 1: return (E(s) - E(-s)) / (2.0 * s);
        case 2: return (E(s) + E(-s)) / (s * s);  // E(0) = 0
        default: return (E(2 * s) - 2.0 * E(s) + 2.0 * E(-s) - E(-2 * s)) / (2.0 * s * s * s);
        }
    };
    std::vector<FdDerivative> out(max_n);
    for (int n = 1; n <= max_n; ++n)
    {
        FdDerivative& o = out[n - 1];
        o.h = h;
        o.coarse = central(n, h);
        o.value = (4.0 * central(n, 0.5 * h) - o.coarse) / 3.0;
    }
    return out;
}

FdDerivative fd_energy_derivative(int n, const Configuration& c, const BackgroundMeasure& mu, const RieszKernel& K,
                                  const TransportField& v, double h, const TransportFormOptions& opt)
{
    if (n < 1 || n > 3) throw ParameterError("fd_energy_derivative: 1 <= n <= 3");
    return fd_energy_derivatives(n, c, mu, K, v, h, opt)[n - 1];
}

// ---------------------------------------------------------------------------
// Sources

namespace
{
double binom(int n, int k)
{
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

double sphere_area(int d) { return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d); }

// \int_0^rho (1 - u^2)^6 u^{d-1} du
double bump_radial_mass(int d, double rho)
{
    constexpr int m = SignedSource::kBumpPower;
    double acc = 0.0;
    for (int j = 0; j <= m; ++j) acc += binom(m, j) * ((j % 2) ? -1.0 : 1.0) * std::pow(rho, 2 * j + d) / (2 * j + d);
    return acc;
}

// \int_rho^1 g_unit(u) (1 - u^2)^6 u^{d-1} du for the Coulomb kernel with s = d - 2,
// where g_unit(u) = u^{-s}/s (or -log u)
double bump_radial_potential(int d, double rho)
{
    constexpr int m = SignedSource::kBumpPower;
    const double s = d - 2.0;
    double acc = 0.0;
    for (int j = 0; j <= m; ++j)
    {
        const double c = binom(m, j) * ((j % 2) ? -1.0 : 1.0);
        const double p = 2.0 * j + 2.0;  // exponent after integrating u^{2j + d - 1 - s}
        if (s == 0.0)
        {
            // \int -log u u^{p-1} = -u^p (log u - 1/p) / p
            auto A = [p](double u) { return u == 0.0 ? 0.0 : -std::pow(u, p) * (std::log(u) - 1.0 / p) / p; };
            acc += c * (A(1.0) - A(rho));
        }
        else
            acc += c * (1.0 - std::pow(rho, p)) / (s * p);
    }
    return acc;
}
}  // namespace

SignedSource SignedSource::atoms(int d, std::vector<Vec> points, std::vector<double> weights)
{
    if (points.size() != weights.size()) throw ParameterError("source: points and weights differ in length");
    for (const Vec& p : points)
        if (p.size() != d) throw ParameterError("source: point of wrong dimension");
    SignedSource f;
    f.d_ = d;
    f.pts_ = std::move(points);
    f.wts_ = std::move(weights);
    return f;
}

SignedSource SignedSource::empirical_minus(const Configuration& c, const BackgroundMeasure& mu, int n_ang, int de_level)
{
    std::vector<Vec> p = c.points;
    std::vector<double> w(c.size(), 1.0 / static_cast<double>(c.size()));
    const VolumeRule vr = mu.outer_rule(n_ang, de_level);
    for (std::size_t q = 0; q < vr.nodes.size(); ++q)
    {
        p.push_back(vr.nodes[q]);
        w.push_back(-vr.weights[q]);
    }
    return atoms(c.d, std::move(p), std::move(w));
}

SignedSource SignedSource::bumps(int d, std::vector<Vec> centers, std::vector<double> radii, std::vector<double> masses)
{
    if (centers.size() != radii.size() || centers.size() != masses.size())
        throw ParameterError("source: centres, radii and masses differ in length");
    for (double R : radii)
        if (!(R > 0.0)) throw ParameterError("source: bump radius must be positive");
    SignedSource f = atoms(d, std::move(centers), std::move(masses));
    f.radii_ = std::move(radii);
    f.smooth_ = true;
    for (double R : f.radii_) f.norm_.push_back(sphere_area(d) * std::pow(R, d) * bump_radial_mass(d, 1.0));
    return f;
}

double SignedSource::total_weight() const
{
    Neumaier acc;
    for (double w : wts_) acc.add(w);
    return acc.value();
}

SignedSource SignedSource::scaled(double a) const
{
    SignedSource f = *this;
    for (double& w : f.wts_) w *= a;
    return f;
}

double SignedSource::bump_density(std::size_t b, const Vec& y) const
{
    const double R = radii_[b];
    const double u = (y - pts_[b]).squaredNorm() / (R * R);
    if (u >= 1.0) return 0.0;
    const double w = 1.0 - u, w2 = w * w;
    return wts_[b] * w2 * w2 * w2 / norm_[b];
}

double SignedSource::density(const Vec& y) const
{
    if (!smooth_) throw CapabilityError("atomic source has no density");
    double acc = 0.0;
    for (std::size_t b = 0; b < pts_.size(); ++b) acc += bump_density(b, y);
    return acc;
}

double SignedSource::distance_to_support(const Vec& x) const
{
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < pts_.size(); ++b)
        best = std::min(best, std::max(0.0, (x - pts_[b]).norm() - (smooth_ ? radii_[b] : 0.0)));
    return best;
}

namespace
{
void require_coulomb(const RieszKernel& K, int d)
{
    if (K.k != 0 || d < 2) throw CapabilityError("closed-form source fields need the Coulomb kernel in d >= 2");
}
}  // namespace

double SignedSource::coulomb_potential(const RieszKernel& K, const Vec& x) const
{
    if (!smooth_) throw CapabilityError("closed-form potential needs a bump source");
    require_coulomb(K, d_);
    const double full = bump_radial_mass(d_, 1.0);
    double acc = 0.0;
    for (std::size_t b = 0; b < pts_.size(); ++b)
    {
        const double R = radii_[b], r = (x - pts_[b]).norm();
        if (r >= R)
        {
            acc += wts_[b] * K.g(r);
            continue;
        }
        const double rho = r / R;
        // mass inside times g(r), plus the shell outside with g(R u) = R^{-s} g(u) (or g(u) - log R)
        const double inside = bump_radial_mass(d_, rho) / full;
        double shell = bump_radial_potential(d_, rho) / full;
        if (K.s == 0.0)
            shell += -std::log(R) * (1.0 - inside);
        else
            shell *= std::pow(R, -K.s);
        acc += wts_[b] * (inside * (r > 0.0 ? K.g(r) : 0.0) + shell);
    }
    return acc;
}

Vec SignedSource::coulomb_gradient(const RieszKernel& K, const Vec& x) const
{
    if (!smooth_) throw CapabilityError("closed-form gradient needs a bump source");
    require_coulomb(K, d_);
    const double full = bump_radial_mass(d_, 1.0);
    Vec g = Vec::Zero(d_);
    for (std::size_t b = 0; b < pts_.size(); ++b)
    {
        const Vec X = x - pts_[b];
        const double r = X.norm();
        if (r == 0.0) continue;
        const double m = r >= radii_[b] ? 1.0 : bump_radial_mass(d_, r / radii_[b]) / full;
        g -= wts_[b] * m * std::pow(r, -double(d_)) * X;
    }
    return g;
}

double SignedSource::integrate(const std::function<double(const Vec&)>& F, int n_ang, int de_level) const
{
    Neumaier acc;
    if (!smooth_)
    {
        for (std::size_t i = 0; i < pts_.size(); ++i) acc.add(wts_[i] * F(pts_[i]));
        return acc.value();
    }
    for (std::size_t b = 0; b < pts_.size(); ++b)
    {
        const VolumeRule vr = volume_rule(Region::ball(pts_[b], radii_[b]), n_ang, de_level);
        for (std::size_t q = 0; q < vr.nodes.size(); ++q)
        {
            const double rho = bump_density(b, vr.nodes[q]);
            if (rho != 0.0) acc.add(vr.weights[q] * rho * F(vr.nodes[q]));
        }
    }
    return acc.value();
}

// ---------------------------------------------------------------------------
// Commutator fields

namespace
{
// order j of extra derivatives: 0 kappa, 1 nu, 2 mu; result flattened
void kernel_term(const RieszKernel& K, int n, int j, const Vec& X, const Vec& a, Eigen::VectorXd& out)
{
    switch (j)
    {
    case 0: out[0] = K.contract(n, X, a); break;
    case 1: out = K.contract1(n, X, a); break;
    default:
    {
        const Mat M = K.contract2(n, X, a);
        const int D = static_cast<int>(X.size());
        for (int r = 0; r < D; ++r)
            for (int c = 0; c < D; ++c) out[r * D + c] = M(r, c);
    }
    }
}

Vec embed(const Vec& x, int D)
{
    Vec y = Vec::Zero(D);
    y.head(x.size()) = x;
    return y;
}

Eigen::VectorXd field_eval(int n, int j, const SignedSource& f, const ExtendedField& vt, const RieszKernel& K,
                           const ExtendedPoint& p, double t, const CommutatorOptions& opt)
{
    const int d = f.d(), D = vt.D();
    if (D != K.D() || p.x.size() != d || p.z.size() != K.k) throw ParameterError("commutator: dimension mismatch");
    const int m = j == 0 ? 1 : (j == 1 ? D : D * D);
    const Vec P = p.joined();
    const Vec vP = vt.value(P);
    const TransportField& v = vt.base();
    Eigen::VectorXd total = Eigen::VectorXd::Zero(m), term(m);

    if (!f.smooth())
    {
        for (std::size_t i = 0; i < f.points().size(); ++i)
        {
            const Vec& y = f.points()[i];
            const Vec vy = v.value(y);
            const Vec X = P - embed(y + t * vy, D);
            if (X.squaredNorm() == 0.0) throw SingularityError("commutator evaluated at an atom");
            kernel_term(K, n, j, X, vP - embed(vy, D), term);
            total += f.weights()[i] * term;
        }
        return total;
    }

    const double z = K.k ? std::abs(p.z[0]) : 0.0;
    const double dist = f.distance_to_support(p.x);
    const double beta = d - 1.0 - K.s - j;
    const bool singular = (t == 0.0 && z == 0.0 && dist == 0.0);
    if (singular && (beta <= -1.0 || (n == 0 && j == 0 && K.s == 0.0)))
    {
        if (n == 0 && j == 0) return Eigen::VectorXd::Constant(1, f.coulomb_potential(K, p.x));
        throw SingularityError("commutator: this field is not integrable at a point of the source support");
    }
    if (!singular && t != 0.0 && dist <= 2.0 * std::abs(t) * v.sup_norm(0))
        throw SingularityError("commutator: transported evaluation too close to the source support");

    const Vec vx = v.value(p.x);
    for (std::size_t b = 0; b < f.points().size(); ++b)
    {
        const Vec& c = f.points()[b];
        const double R = f.radii()[b];
        const Region ball = Region::ball(c, R);
        const double dist_b = std::max(0.0, (p.x - c).norm() - R);
        const bool far = dist_b >= opt.far_factor * R && dist_b > 2.0 * std::abs(t) * v.sup_norm(0);
        angular_nodes(ball, p.x, far ? opt.far : opt.polar, [&](const Vec& w, double aw, double t0, double t1) {
            if (!(t1 > t0)) return;
            Eigen::VectorXd s = Eigen::VectorXd::Zero(m);
            auto smooth_panel = [&](double a, double bb, int nr) {
                const Rule rr = legendre_on(nr, a, bb);
                for (std::size_t q = 0; q < rr.size(); ++q)
                {
                    const double r = rr.x[q];
                    const Vec y = p.x + r * w;
                    const double rho = f.bump_density(b, y);
                    if (rho == 0.0) continue;
                    const Vec vy = v.value(y);
                    kernel_term(K, n, j, P - embed(y + t * vy, D), vP - embed(vy, D), term);
                    s += rr.w[q] * ipow(r, d - 1) * rho * term;
                }
            };
            if (far)
                smooth_panel(t0, t1, opt.far.n_rad);
            else if (singular && t0 == 0.0)
            {
                // grad^{n+j} g(-r w) : (-r D)^n = r^{-s-j} (same at r = 1)
                const Rule rr = left_singular(opt.polar.n_rad, 0.0, t1, beta);
                const Vec W = embed(w, D);
                for (std::size_t q = 0; q < rr.size(); ++q)
                {
                    const double r = rr.x[q];
                    const Vec Dq = embed(difference_quotient(v, p.x, vx, r, w), D);
                    kernel_term(K, n, j, -W, -Dq, term);
                    s += rr.w[q] * f.bump_density(b, p.x + r * w) * term;
                }
            }
            else
            {
                const double scale = std::max({std::min(dist, t1 - t0), z, 1e-3 * (t1 - t0)});
                const std::vector<double> br = graded_breaks(t0, t1, std::min(scale, (t1 - t0) / opt.radial_panels));
                for (std::size_t k = 0; k + 1 < br.size(); ++k) smooth_panel(br[k], br[k + 1], opt.polar.n_rad);
            }
            total += aw * s;
        });
    }
    return total;
}
}  // namespace

double kappa_eval(int n, const SignedSource& f, const ExtendedField& vt, const RieszKernel& K, const ExtendedPoint& p,
                  double t, const CommutatorOptions& opt)
{
    return field_eval(n, 0, f, vt, K, p, t, opt)[0];
}

Vec nu_eval(int n, const SignedSource& f, const ExtendedField& vt, const RieszKernel& K, const ExtendedPoint& p,
            double t, const CommutatorOptions& opt)
{
    return Vec(field_eval(n, 1, f, vt, K, p, t, opt));
}

Mat mu_eval(int n, const SignedSource& f, const ExtendedField& vt, const RieszKernel& K, const ExtendedPoint& p,
            double t, const CommutatorOptions& opt)
{
    const Eigen::VectorXd e = field_eval(n, 2, f, vt, K, p, t, opt);
    const int D = vt.D();
    Mat M(D, D);
    for (int r = 0; r < D; ++r)
        for (int c = 0; c < D; ++c) M(r, c) = e[r * D + c];
    return M;
}

// ---------------------------------------------------------------------------
// Recursion residuals

double ResidualTable::max_relative(const std::string& identity) const
{
    double num = 0.0, den = 0.0;
    for (const ResidualRow& r : rows)
    {
        if (r.identity != identity) continue;
        num = std::max(num, std::abs(r.residual));
        den = std::max({den, std::abs(r.rhs), std::abs(r.lhs)});
    }
    return den == 0.0 ? num : num / den;
}

void ResidualTable::save_csv(const std::string& path) const
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "point,order,identity,lhs,rhs,residual\n";
    os.precision(17);
    for (const ResidualRow& r : rows)
        os << r.point << ',' << r.order << ',' << r.identity << ',' << r.lhs << ',' << r.rhs << ',' << r.residual << '\n';
}

namespace
{
// Richardson-extrapolated central first derivative of a vector-valued F
template <class F>
Eigen::VectorXd richardson_first(F&& fn, double h)
{
    auto c = [&](double s) -> Eigen::VectorXd { return (fn(s) - fn(-s)) / (2.0 * s); };
    return (4.0 * c(0.5 * h) - c(h)) / 3.0;
}

ExtendedPoint shifted(const ExtendedPoint& p, int i, double h)
{
    ExtendedPoint q = p;
    const int d = static_cast<int>(p.x.size());
    if (i < d)
        q.x[i] += h;
    else
        q.z[i - d] += h;
    return q;
}
}  // namespace

ResidualTable recursion_residuals(int n, const SignedSource& f, const ExtendedField& vt, const RieszKernel& K,
                                  const std::vector<ExtendedPoint>& points, double h, const CommutatorOptions& opt)
{
    if (n < 0 || n > 3) throw ParameterError("recursion_residuals: 0 <= n <= 3");
    const int D = vt.D();
    const double lip = vt.base().sup_norm(1);
    const double ht = lip > 0.0 ? 1e-3 / lip : 1e-3;
    ResidualTable table;
    for (std::size_t ip = 0; ip < points.size(); ++ip)
    {
        const ExtendedPoint& p = points[ip];
        const Vec P = p.joined();
        double local = f.distance_to_support(p.x);
        if (K.k) local = std::hypot(local, p.z[0]);
        const double hs = h > 0.0 ? h : 1e-3 * local;
        const Mat J = vt.jacobian(P);
        const Vec vP = vt.value(P);
        for (int m = 0; m <= n; ++m)
        {
            const Vec nu = nu_eval(m, f, vt, K, p, 0.0, opt);
            const Mat mu = mu_eval(m, f, vt, K, p, 0.0, opt);
            Vec nu_prev = Vec::Zero(D);
            Mat mu_prev = Mat::Zero(D, D);
            if (m > 0)
            {
                nu_prev = nu_eval(m - 1, f, vt, K, p, 0.0, opt);
                mu_prev = mu_eval(m - 1, f, vt, K, p, 0.0, opt);
            }
            Vec grad_kappa(D);
            Mat grad_nu(D, D);  // (i, j) = d_i nu_j
            for (int i = 0; i < D; ++i)
            {
                grad_kappa[i] = richardson_first(
                    [&](double s) {
                        return Eigen::VectorXd::Constant(1, kappa_eval(m, f, vt, K, shifted(p, i, s), 0.0, opt));
                    },
                    hs)[0];
                const Eigen::VectorXd gn = richardson_first(
                    [&](double s) { return Eigen::VectorXd(nu_eval(m, f, vt, K, shifted(p, i, s), 0.0, opt)); }, hs);
                for (int jj = 0; jj < D; ++jj) grad_nu(i, jj) = gn[jj];
            }
            for (int i = 0; i < D; ++i)
            {
                const double rhs = grad_kappa[i] - m * J.row(i).dot(nu_prev);
                table.rows.push_back({ip, m, "nu", nu[i], rhs, nu[i] - rhs});
            }
            for (int i = 0; i < D; ++i)
                for (int jj = 0; jj < D; ++jj)
                {
                    double corr = 0.0;
                    for (int k = 0; k < D; ++k) corr += J(i, k) * mu_prev(jj, k);
                    const double rhs = grad_nu(i, jj) - m * corr;
                    table.rows.push_back({ip, m, "mu", mu(i, jj), rhs, mu(i, jj) - rhs});
                }
            const double dt = richardson_first(
                [&](double s) { return Eigen::VectorXd::Constant(1, kappa_eval(m, f, vt, K, p, s, opt)); }, ht)[0];
            const double next = kappa_eval(m + 1, f, vt, K, p, 0.0, opt);
            const double lhs = dt + vP.dot(nu);
            table.rows.push_back({ip, m, "hierarchy", lhs, next, lhs - next});
            const double lit = dt + vP.dot(grad_kappa);
            table.rows.push_back({ip, m, "hierarchy-literal", lit, next, lit - next});
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// Weighted L^2 quadrature

namespace
{
// nodes and weights on [0, inf) for a radial variable: core panels then r = rc/u
void radial_half_line(double rc, int n, int core_panels, std::vector<double>& x, std::vector<double>& w, double power)
{
    for (int p = 0; p < core_panels; ++p)
    {
        const Rule r = p == 0 && power != 0.0 ? left_singular(n, 0.0, rc / core_panels, power)
                                              : legendre_on(n, rc * p / core_panels, rc * (p + 1) / core_panels);
        for (std::size_t k = 0; k < r.size(); ++k)
        {
            x.push_back(r.x[k]);
            w.push_back(p == 0 && power != 0.0 ? r.w[k] : r.w[k] * std::pow(r.x[k], power));
        }
    }
    // tail: r = rc / u, u in (0, 1], geometric panels toward u = 0
    const std::vector<double> br = graded_breaks(0.0, 1.0, 1.0 / 64.0);
    for (std::size_t p = 0; p + 1 < br.size(); ++p)
    {
        const Rule r = legendre_on(n, br[p], br[p + 1]);
        for (std::size_t k = 0; k < r.size(); ++k)
        {
            const double u = r.x[k], rr = rc / u;
            x.push_back(rr);
            w.push_back(r.w[k] * rc / (u * u) * std::pow(rr, power));
        }
    }
}
}  // namespace

VolumeRule weighted_rule(const RieszKernel& K, const Region& omega, const WeightedRuleOptions& opt)
{
    const int d = K.d;
    VolumeRule xr;
    if (!omega.is_whole())
        xr = volume_rule(omega, opt.n_ang, opt.de_level);
    else
    {
        const Vec c = opt.center.size() == d ? opt.center : Vec(Vec::Zero(d));
        const double rc = opt.r_core > 0.0 ? opt.r_core : 4.0;
        std::vector<double> rx, rw;
        radial_half_line(rc, opt.n_rad, 4, rx, rw, d - 1.0);
        const SphereRule& sr = sphere_rule(d, opt.n_ang);
        for (std::size_t a = 0; a < sr.dirs.size(); ++a)
            for (std::size_t q = 0; q < rx.size(); ++q)
            {
                xr.nodes.push_back(c + rx[q] * sr.dirs[a]);
                xr.weights.push_back(sr.weights[a] * rw[q]);
            }
    }
    if (K.k == 0) return xr;
    // z in R with |z|^gamma: Jacobi panel at 0, geometric panels, mapped tail
    double L = opt.r_core > 0.0 ? opt.r_core : 4.0;
    if (!omega.is_whole())
    {
        const Vec lo = omega.kind == Region::Kind::Box ? omega.lo : Vec(omega.center.array() - omega.radius);
        const Vec hi = omega.kind == Region::Kind::Box ? omega.hi : Vec(omega.center.array() + omega.radius);
        L = (hi - lo).maxCoeff();
    }
    std::vector<double> zx, zw;
    double a = 0.0, b = L * std::pow(0.5, opt.z_panels);
    {
        const Rule r = left_singular(opt.n_rad, 0.0, b, K.gamma);
        zx.insert(zx.end(), r.x.begin(), r.x.end());
        zw.insert(zw.end(), r.w.begin(), r.w.end());
    }
    for (int p = 0; p < opt.z_panels; ++p)
    {
        a = b;
        b *= 2.0;
        const Rule r = legendre_on(opt.n_rad, a, b);
        for (std::size_t k = 0; k < r.size(); ++k)
        {
            zx.push_back(r.x[k]);
            zw.push_back(r.w[k] * std::pow(r.x[k], K.gamma));
        }
    }
    {
        std::vector<double> tx, tw;
        radial_half_line(b, opt.n_rad, 0, tx, tw, K.gamma);
        zx.insert(zx.end(), tx.begin(), tx.end());
        zw.insert(zw.end(), tw.begin(), tw.end());
    }
    VolumeRule out;
    for (std::size_t q = 0; q < xr.nodes.size(); ++q)
        for (std::size_t k = 0; k < zx.size(); ++k)
            for (double sg : {-1.0, 1.0})
            {
                Vec X(d + 1);
                X.head(d) = xr.nodes[q];
                X[d] = sg * zx[k];
                out.nodes.push_back(X);
                out.weights.push_back(xr.weights[q] * zw[k]);
            }
    return out;
}

Seminorm l2gamma_seminorm(const std::function<Vec(const Vec&)>& grad, const RieszKernel& K, const Region& omega,
                          const WeightedRuleOptions& opt)
{
    auto run = [&](const WeightedRuleOptions& o) {
        const VolumeRule vr = weighted_rule(K, omega, o);
        std::vector<double> part(vr.nodes.size());
        for (std::size_t q = 0; q < vr.nodes.size(); ++q) part[q] = vr.weights[q] * grad(vr.nodes[q]).squaredNorm();
        return std::sqrt(ordered_sum(part));
    };
    Seminorm s;
    s.value = run(opt);
    WeightedRuleOptions fine = opt;
    fine.n_ang *= 2;
    fine.n_rad *= 2;
    fine.de_level += 1;
    fine.z_panels += 2;
    s.refined = run(fine);
    return s;
}

// ---------------------------------------------------------------------------
// First-order identities and the commutator ratio

nlohmann::json FirstOrderIdentities::to_json() const
{
    return {{"stress_lhs", stress_lhs},     {"stress_rhs", stress_rhs}, {"pde_residual", pde_residual},
            {"pde_scale", pde_scale},       {"grid_points", grid_points}};
}

namespace
{
// J : [a, b] with J(i, j) = d_i v^j
double stress_contract(const Mat& J, const Vec& a, const Vec& b)
{
    return a.dot(J * b) + b.dot(J * a) - J.trace() * a.dot(b);
}

VolumeRule grad_v_rule(const TransportField& v, const SignedSource& f, const SignedSource& w, int n_ang, int de_level)
{
    if (v.family() == TransportField::Family::BumpShear)
        return volume_rule(Region::ball(v.center(), v.support_radius()), n_ang, de_level);
    // whole space, polar around the sources
    Vec c = Vec::Zero(f.d());
    double ext = 0.0;
    for (const SignedSource* s : {&f, &w})
        for (std::size_t b = 0; b < s->points().size(); ++b)
            ext = std::max(ext, s->points()[b].norm() + (s->smooth() ? s->radii()[b] : 0.0));
    WeightedRuleOptions o;
    o.n_ang = n_ang;
    o.n_rad = 24;
    o.r_core = 2.0 * std::max(ext, 1.0);
    o.center = c;
    RieszKernel K0;
    K0.d = f.d();
    K0.k = 0;
    return weighted_rule(K0, Region::whole(f.d()), o);
}
}  // namespace

FirstOrderIdentities first_order_identities(const SignedSource& f, const SignedSource& w, const TransportField& v,
                                            const RieszKernel& K, const IdentityGrid& grid,
                                            const CommutatorOptions& opt)
{
    if (!f.smooth() || !w.smooth()) throw CapabilityError("first-order identities need smooth sources");
    require_coulomb(K, f.d());
    FirstOrderIdentities out;
    out.stress_lhs = f.integrate([&](const Vec& x) { return v.value(x).dot(w.coulomb_gradient(K, x)); }, grid.n_ang,
                                 grid.de_level) +
                     w.integrate([&](const Vec& x) { return v.value(x).dot(f.coulomb_gradient(K, x)); }, grid.n_ang,
                                 grid.de_level);
    {
        const VolumeRule vr = grad_v_rule(v, f, w, grid.n_ang, grid.de_level);
        std::vector<double> part(vr.nodes.size());
        for (std::size_t q = 0; q < vr.nodes.size(); ++q)
        {
            const Vec& x = vr.nodes[q];
            part[q] = vr.weights[q] *
                      stress_contract(v.jacobian(x), f.coulomb_gradient(K, x), w.coulomb_gradient(K, x));
        }
        out.stress_rhs = ordered_sum(part) / K.c_ds;
    }

    // -Laplacian of kappa^(1) against the divergence of
    // E = -(J a) - (J^T a) + tr(J) a, a = grad h^f
    const int d = f.d();
    const ExtendedField vt(v, 0, 1.0);
    const double hg = grid.h > 0.0 ? grid.h : 1e-2 * (grid.hi - grid.lo).maxCoeff();
    auto kap = [&](const Vec& x) { return kappa_eval(1, f, vt, K, ExtendedPoint{x, Vec()}, 0.0, opt); };
    auto E = [&](const Vec& x) -> Vec {
        const Mat J = v.jacobian(x);
        const Vec a = f.coulomb_gradient(K, x);
        return -(J * a) - J.transpose() * a + J.trace() * a;
    };
    std::vector<int> idx(d, 0);
    double num = 0.0, den = 0.0;
    std::size_t count = 0;
    while (true)
    {
        Vec x(d);
        for (int a = 0; a < d; ++a)
            x[a] = grid.n == 1 ? 0.5 * (grid.lo[a] + grid.hi[a])
                               : grid.lo[a] + (grid.hi[a] - grid.lo[a]) * idx[a] / double(grid.n - 1);
        const double k0 = kap(x);
        auto lap = [&](double s) {
            double acc = 0.0;
            for (int a = 0; a < d; ++a)
            {
                Vec e = Vec::Zero(d);
                e[a] = s;
                acc += (kap(x + e) - 2.0 * k0 + kap(x - e)) / (s * s);
            }
            return acc;
        };
        auto div = [&](double s) {
            double acc = 0.0;
            for (int a = 0; a < d; ++a)
            {
                Vec e = Vec::Zero(d);
                e[a] = s;
                acc += (E(x + e)[a] - E(x - e)[a]) / (2.0 * s);
            }
            return acc;
        };
        const double lhs = -(4.0 * lap(0.5 * hg) - lap(hg)) / 3.0;
        const double rhs = (4.0 * div(0.5 * hg) - div(hg)) / 3.0;
        num = std::max(num, std::abs(lhs - rhs));
        den = std::max(den, std::abs(rhs));
        ++count;
        int a = 0;
        while (a < d && ++idx[a] >= grid.n) idx[a++] = 0;
        if (a == d) break;
    }
    out.pde_scale = den;
    out.pde_residual = den == 0.0 ? num : num / den;
    out.grid_points = count;
    return out;
}

CommutatorRatio commutator_ratio(const SignedSource& f, const TransportField& v, const RieszKernel& K,
                                 const WeightedRuleOptions& outer, const CommutatorOptions& opt)
{
    if (!f.smooth()) throw CapabilityError("commutator ratio needs a smooth source");
    if (v.family() != TransportField::Family::BumpShear)
        throw CapabilityError("commutator ratio needs a compactly supported field");
    require_coulomb(K, f.d());
    const ExtendedField vt(v, 0, 1.0);
    // grad kappa^(1) = nu^(1) + (grad v) grad h^f
    auto grad_kappa = [&](const Vec& x) -> Vec {
        const Vec nu = nu_eval(1, f, vt, K, ExtendedPoint{x, Vec()}, 0.0, opt);
        return nu + v.jacobian(x) * f.coulomb_gradient(K, x);
    };
    CommutatorRatio out;
    WeightedRuleOptions o = outer;
    if (o.center.size() != f.d()) o.center = v.center();
    if (o.r_core <= 0.0)
    {
        double ext = v.support_radius();
        for (std::size_t b = 0; b < f.points().size(); ++b)
            ext = std::max(ext, (f.points()[b] - o.center).norm() + f.radii()[b]);
        o.r_core = 1.25 * ext;
    }
    {
        const VolumeRule vr = weighted_rule(K, Region::whole(f.d()), o);
        std::vector<double> part(vr.nodes.size());
#pragma omp parallel for schedule(dynamic, 8)
        for (std::ptrdiff_t q = 0; q < static_cast<std::ptrdiff_t>(vr.nodes.size()); ++q)
            part[q] = vr.weights[q] * grad_kappa(vr.nodes[q]).squaredNorm();
        out.numerator = std::sqrt(ordered_sum(part));
    }
    {
        const VolumeRule vr = volume_rule(Region::ball(v.center(), v.support_radius()), o.n_ang, o.de_level + 1);
        std::vector<double> part(vr.nodes.size());
        for (std::size_t q = 0; q < vr.nodes.size(); ++q)
            part[q] = vr.weights[q] * f.coulomb_gradient(K, vr.nodes[q]).squaredNorm();
        out.denominator = v.sup_norm(1) * std::sqrt(ordered_sum(part));
    }
    out.ratio = out.numerator / out.denominator;
    return out;
}

}  // namespace rlab
