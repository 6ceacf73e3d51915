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

// Localized electric energy through Green's identity on U = Omega x R^k:
//   \int_U |z|^gamma |grad h|^2 = \int_{dU} |z|^gamma h d_n h + c V,
//   V = N^{-1} sum_j \int_U h d delta_j - \int_Omega h(., 0) dmu.
// Spheres inside U and the volume pieces are reduced exactly or to 1D/2D
// quadrature; only the boundary flux needs the field on dU.

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "rlab/energy.hpp"
#include "rlab/quadrature.hpp"
#include "rlab/summation.hpp"

namespace rlab
{
namespace
{
using V2 = Eigen::Vector2d;
constexpr double kPi = std::numbers::pi;

Vec to_vec(const V2& v)
{
    Vec x(2);
    x << v[0], v[1];
    return x;
}

// h and grad h (in R^{d+k}) of the truncated field at (x, z)
struct Field
{
    const Configuration& c;
    const BackgroundMeasure& mu;
    const RieszKernel& K;
    const std::vector<double>& eta;

    double value(const Vec& x, double z) const
    {
        Neumaier acc;
        for (std::size_t j = 0; j < c.size(); ++j)
        {
            const double r = std::sqrt((x - c.points[j]).squaredNorm() + z * z);
            acc.add(K.g_eta(r, eta[j]));
        }
        return acc.value() / static_cast<double>(c.size()) - mu.potential(K, point(x, z));
    }

    Vec grad(const Vec& x, double z) const
    {
        const int D = K.D();
        Vec gsum = Vec::Zero(D);
        for (std::size_t j = 0; j < c.size(); ++j)
        {
            Vec Y(D);
            Y.head(K.d) = x - c.points[j];
            if (K.k == 1) Y[K.d] = z;
            const double r = Y.norm();
            if (r <= eta[j]) continue;
            gsum += (K.dg(r) / r) * Y;
        }
        return gsum / static_cast<double>(c.size()) - mu.force(K, point(x, z));
    }

    ExtendedPoint point(const Vec& x, double z) const
    {
        ExtendedPoint p{x, Vec()};
        if (K.k == 1)
        {
            p.z.resize(1);
            p.z[0] = z;
        }
        return p;
    }
};

// ---------------------------------------------------------------------------
// planar curve toolkit (d = 2)

struct Curve
{
    bool circle = false;
    V2 a, b;        // segment ends
    V2 c;           // circle centre
    double r = 0.0;
};

std::vector<Curve> boundary_curves(const Region& R)
{
    std::vector<Curve> out;
    if (R.kind == Region::Kind::Ball)
    {
        Curve k;
        k.circle = true;
        k.c = V2(R.center[0], R.center[1]);
        k.r = R.radius;
        out.push_back(k);
    }
    else if (R.kind == Region::Kind::Box)
    {
        const V2 p[4] = {V2(R.lo[0], R.lo[1]), V2(R.hi[0], R.lo[1]), V2(R.hi[0], R.hi[1]), V2(R.lo[0], R.hi[1])};
        for (int i = 0; i < 4; ++i)
        {
            Curve k;
            k.a = p[i];
            k.b = p[(i + 1) % 4];
            out.push_back(k);
        }
    }
    return out;
}

Curve make_circle(const V2& c, double r)
{
    Curve k;
    k.circle = true;
    k.c = c;
    k.r = r;
    return k;
}

void intersect(const Curve& u, const Curve& v, std::vector<V2>& out)
{
    if (!u.circle && !v.circle)
    {
        const V2 e = u.b - u.a, f = v.b - v.a;
        const double den = e[0] * f[1] - e[1] * f[0];
        if (std::abs(den) < 1e-300) return;
        const V2 w = v.a - u.a;
        const double t = (w[0] * f[1] - w[1] * f[0]) / den;
        const double s = (w[0] * e[1] - w[1] * e[0]) / den;
        if (t >= 0.0 && t <= 1.0 && s >= 0.0 && s <= 1.0) out.push_back(u.a + t * e);
        return;
    }
    if (u.circle && v.circle)
    {
        const V2 dlt = v.c - u.c;
        const double L = dlt.norm();
        if (L == 0.0 || L > u.r + v.r || L < std::abs(u.r - v.r)) return;
        const double a = (u.r * u.r - v.r * v.r + L * L) / (2.0 * L);
        const double h = std::sqrt(std::max(0.0, u.r * u.r - a * a));
        const V2 m = u.c + (a / L) * dlt;
        const V2 perp(-dlt[1] / L, dlt[0] / L);
        out.push_back(m + h * perp);
        out.push_back(m - h * perp);
        return;
    }
    const Curve& s = u.circle ? v : u;
    const Curve& k = u.circle ? u : v;
    const V2 e = s.b - s.a, q = s.a - k.c;
    const double A = e.squaredNorm(), B = q.dot(e), C = q.squaredNorm() - k.r * k.r;
    const double disc = B * B - A * C;
    if (disc < 0.0) return;
    const double sq = std::sqrt(disc);
    for (double t : {(-B - sq) / A, (-B + sq) / A})
        if (t >= 0.0 && t <= 1.0) out.push_back(s.a + t * e);
}

// Angles (from p) where the ray structure of the curves changes.
std::vector<double> critical_angles(const std::vector<Curve>& curves, const V2& p)
{
    std::vector<V2> pts;
    for (std::size_t i = 0; i < curves.size(); ++i)
    {
        const Curve& k = curves[i];
        if (k.circle)
        {
            const V2 q = k.c - p;
            const double L = q.norm();
            if (L > 0.0)
            {
                pts.push_back(k.c);
                pts.push_back(p - q);
                if (L > k.r)
                {
                    const double th = std::atan2(q[1], q[0]), al = std::asin(k.r / L);
                    pts.push_back(p + V2(std::cos(th + al), std::sin(th + al)));
                    pts.push_back(p + V2(std::cos(th - al), std::sin(th - al)));
                }
            }
        }
        else
        {
            pts.push_back(k.a);
            const V2 e = k.b - k.a;
            const double t = std::clamp((p - k.a).dot(e) / e.squaredNorm(), 0.0, 1.0);
            pts.push_back(k.a + t * e);
        }
        for (std::size_t j = i + 1; j < curves.size(); ++j) intersect(curves[i], curves[j], pts);
    }
    std::vector<double> th;
    for (const V2& q : pts)
    {
        const V2 w = q - p;
        if (w.norm() > 1e-14 * (1.0 + p.norm())) th.push_back(std::atan2(w[1], w[0]));
    }
    std::sort(th.begin(), th.end());
    std::vector<double> out;
    for (double t : th)
        if (out.empty() || t - out.back() > 1e-13) out.push_back(t);
    if (out.size() > 1 && out.front() + 2.0 * kPi - out.back() <= 1e-13) out.pop_back();
    if (out.empty()) out.push_back(0.0);
    return out;
}

// Polar integral over the intersection of planar regions, seen from p:
// sum over directions of radial(w, t0, t1) with [t0, t1] the common ray
// interval.  Panels between critical directions use tanh-sinh.
double polar_intersection(const std::vector<Region>& regs, const V2& p, const std::vector<double>& circle_radii,
                          const std::function<double(const Vec&, double, double)>& radial, int level)
{
    std::vector<Curve> curves;
    for (const Region& R : regs)
    {
        auto b = boundary_curves(R);
        curves.insert(curves.end(), b.begin(), b.end());
    }
    for (double r : circle_radii) curves.push_back(make_circle(p, r));
    const std::vector<double> th = critical_angles(curves, p);
    const DERule& de = tanh_sinh(level);
    const Vec pv = to_vec(p);
    Neumaier acc;
    for (std::size_t m = 0; m < th.size(); ++m)
    {
        const double a = th[m];
        const double b = (m + 1 < th.size()) ? th[m + 1] : th[0] + 2.0 * kPi;
        const double L = b - a;
        // long panels are split so each piece stays well resolved
        const int pieces = std::max(1, static_cast<int>(std::ceil(L / (0.25 * kPi))));
        for (int q = 0; q < pieces; ++q)
        {
            const double pa = a + L * q / pieces, pl = L / pieces;
            for (std::size_t k = 0; k < de.t.size(); ++k)
            {
                const double t = pa + pl * de.t[k];
                Vec w(2);
                w << std::cos(t), std::sin(t);
                double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
                bool hit = true;
                for (const Region& R : regs)
                {
                    auto iv = R.ray(pv, w);
                    if (!iv)
                    {
                        hit = false;
                        break;
                    }
                    t0 = std::max(t0, iv->first);
                    t1 = std::min(t1, iv->second);
                }
                if (!hit || !(t1 > t0)) continue;
                acc.add(pl * de.w[k] * radial(w, t0, t1));
            }
        }
    }
    return acc.value();
}

// ---------------------------------------------------------------------------

// \int_a^b f(psi) |sin psi|^p dpsi for 0 <= a < b <= pi, graded toward the
// zeros of sin so that |z|^{1-gamma} terms in f are resolved.
double sin_weighted(const std::function<double(double)>& f, double a, double b, double p, int n)
{
    auto half = [&](const std::function<double(double)>& g, double lo, double hi) {
        // lo in [0, pi/2]
        if (!(hi > lo)) return 0.0;
        Neumaier acc;
        std::vector<double> br;
        if (lo == 0.0)
        {
            const double first = hi * std::ldexp(1.0, -14);
            const Rule r = left_singular(n, 0.0, first, p);
            for (std::size_t k = 0; k < r.size(); ++k)
                acc.add(r.w[k] * g(r.x[k]) * std::pow(std::sin(r.x[k]) / r.x[k], p));
            for (double x = first; x < 0.75 * hi; x *= 2.0) br.push_back(x);
            br.push_back(hi);
        }
        else
        {
            br = {lo, hi};
        }
        const Rule r = composite_legendre(br, n);
        for (std::size_t k = 0; k < r.size(); ++k) acc.add(r.w[k] * g(r.x[k]) * std::pow(std::sin(r.x[k]), p));
        return acc.value();
    };
    const double h = 0.5 * kPi;
    double total = 0.0;
    if (a < h) total += half(f, a, std::min(b, h));
    if (b > h)
    {
        auto g = [&](double u) { return f(kPi - u); };
        total += half(g, kPi - b, kPi - std::max(a, h));
    }
    return total;
}

std::vector<double> unique_sorted(std::vector<double> v, double tol)
{
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double x : v)
        if (out.empty() || x - out.back() > tol) out.push_back(x);
    return out;
}

// 1D breakpoints of the measure: support ends and cell edges
std::vector<double> measure_edges_1d(const BackgroundMeasure& mu)
{
    std::vector<double> e{mu.bbox_lo()[0], mu.bbox_hi()[0]};
    if (mu.family() == BackgroundMeasure::Family::Tabulated)
        for (const auto& [cell, v] : mu.cells())
        {
            e.push_back(cell.lo[0]);
            e.push_back(cell.hi[0]);
        }
    return e;
}

// \int_{[a,b] cut at breaks} f(x) rho(x) dx by tanh-sinh pieces
double integrate_1d(const BackgroundMeasure& mu, double a, double b, std::vector<double> breaks,
                    const std::function<double(double)>& f, int level)
{
    if (!(b > a)) return 0.0;
    breaks.push_back(a);
    breaks.push_back(b);
    std::vector<double> br;
    for (double x : unique_sorted(breaks, 0.0))
        if (x >= a && x <= b) br.push_back(x);
    Neumaier acc;
    Vec y(1);
    for (std::size_t m = 0; m + 1 < br.size(); ++m)
    {
        const double lo = br[m], hi = br[m + 1];
        if (!(hi > lo)) continue;
        auto g = [&](double x, double, double) {
            y[0] = x;
            const double rho = mu.density(y);
            return rho == 0.0 ? 0.0 : f(x) * rho;
        };
        acc.add(de_integrate(g, lo, hi, level));
    }
    return acc.value();
}

// \int_0^t g_eta(r) r dr for d = 2, s = 0
double log_eta_antiderivative(double eta, double t)
{
    const double ge = -std::log(eta);
    if (t <= eta) return ge * 0.5 * t * t;
    auto A = [](double r) { return -0.5 * r * r * std::log(r) + 0.25 * r * r; };
    return ge * 0.5 * eta * eta + A(t) - A(eta);
}

struct Ctx
{
    const Configuration& c;
    const BackgroundMeasure& mu;
    const RieszKernel& K;
    const std::vector<double>& eta;
    const Region& omega;
    const LocalEnergyOptions& opt;
    Field field;
    double N;
};

// ------------------------------ d = 1 -------------------------------------

double flux_1d(const Ctx& X, int n)
{
    const RieszKernel& K = X.K;
    const double w0 = X.omega.kind == Region::Kind::Ball ? X.omega.center[0] - X.omega.radius : X.omega.lo[0];
    const double w1 = X.omega.kind == Region::Kind::Ball ? X.omega.center[0] + X.omega.radius : X.omega.hi[0];
    Neumaier total;
    for (int side = 0; side < 2; ++side)
    {
        const double w = side == 0 ? w0 : w1;
        const double sgn = side == 0 ? -1.0 : 1.0;
        Vec x(1);
        x << w;
        if (K.k == 0)
        {
            total.add(sgn * X.field.value(x, 0.0) * X.field.grad(x, 0.0)[0]);
            continue;
        }
        auto F = [&](double z) { return X.field.value(x, z) * X.field.grad(x, z)[0]; };
        double emin = *std::min_element(X.eta.begin(), X.eta.end());
        double extent = std::max(std::abs(X.mu.bbox_hi()[0] - w), std::abs(X.mu.bbox_lo()[0] - w));
        std::vector<double> br;
        for (std::size_t j = 0; j < X.c.size(); ++j)
        {
            const double dx = std::abs(w - X.c.points[j][0]);
            extent = std::max(extent, dx);
            if (dx < X.eta[j]) br.push_back(std::sqrt(X.eta[j] * X.eta[j] - dx * dx));
        }
        const double zmin = 1e-3 * emin, zfar = 64.0 * std::max(extent, X.eta.empty() ? 1.0 : emin);
        for (double z = zmin; z < zfar; z *= 2.0) br.push_back(z);
        br.push_back(zfar);
        br = unique_sorted(br, 1e-14 * zfar);
        const double gam = K.gamma;
        Neumaier acc;
        {
            const Rule r = left_singular(n, 0.0, br.front(), gam);
            for (std::size_t k = 0; k < r.size(); ++k) acc.add(r.w[k] * F(r.x[k]));
        }
        const Rule r = composite_legendre(br, n);
        for (std::size_t k = 0; k < r.size(); ++k) acc.add(r.w[k] * std::pow(r.x[k], gam) * F(r.x[k]));
        // tail z = zfar / u
        const Rule t = legendre_on(n, 0.0, 1.0);
        for (std::size_t k = 0; k < t.size(); ++k)
        {
            const double u = t.x[k], z = zfar / u;
            acc.add(t.w[k] * std::pow(z, gam) * F(z) * zfar / (u * u));
        }
        total.add(sgn * 2.0 * acc.value());
    }
    return total.value();
}

// \int_{S_i cap U} h d delta_i for a sphere that straddles the boundary
double partial_sphere_1d(const Ctx& X, std::size_t i, int n)
{
    const RieszKernel& K = X.K;
    const double xi = X.c.points[i][0], e = X.eta[i];
    const double w0 = X.omega.kind == Region::Kind::Ball ? X.omega.center[0] - X.omega.radius : X.omega.lo[0];
    const double w1 = X.omega.kind == Region::Kind::Ball ? X.omega.center[0] + X.omega.radius : X.omega.hi[0];
    Vec x(1);
    if (K.k == 0)
    {
        double acc = 0.0;
        for (double y : {xi - e, xi + e})
            if (y >= w0 && y <= w1)
            {
                x << y;
                acc += 0.5 * X.field.value(x, 0.0);
            }
        return acc;
    }
    // psi in [0, pi], point (xi + e cos psi, e sin psi); lower half by symmetry
    const double ca = std::clamp((w1 - xi) / e, -1.0, 1.0), cb = std::clamp((w0 - xi) / e, -1.0, 1.0);
    const double a = std::acos(ca), b = std::acos(cb);
    if (!(b > a)) return 0.0;
    std::vector<double> br{a, b};
    for (std::size_t j = 0; j < X.c.size(); ++j)
    {
        if (j == i) continue;
        const double dl = X.c.points[j][0] - xi;
        if (dl == 0.0) continue;
        const double cs = (e * e + dl * dl - X.eta[j] * X.eta[j]) / (2.0 * e * dl);
        if (cs > -1.0 && cs < 1.0) br.push_back(std::acos(cs));
    }
    br = unique_sorted(br, 1e-15);
    auto f = [&](double psi) {
        x << xi + e * std::cos(psi);
        return X.field.value(x, e * std::sin(psi));
    };
    Neumaier acc;
    for (std::size_t m = 0; m + 1 < br.size(); ++m)
    {
        if (br[m] < a || br[m + 1] > b) continue;
        acc.add(sin_weighted(f, br[m], br[m + 1], K.gamma, n));
    }
    return 2.0 * acc.value() / K.c_ds;
}

// \int_Omega h(x, 0) dmu(x)
double volume_measure_1d(const Ctx& X)
{
    const double w0 = X.omega.kind == Region::Kind::Ball ? X.omega.center[0] - X.omega.radius : X.omega.lo[0];
    const double w1 = X.omega.kind == Region::Kind::Ball ? X.omega.center[0] + X.omega.radius : X.omega.hi[0];
    const double a = std::max(w0, X.mu.bbox_lo()[0]), b = std::min(w1, X.mu.bbox_hi()[0]);
    if (!(b > a)) return 0.0;
    const std::vector<double> edges = measure_edges_1d(X.mu);
    std::vector<double> rows(X.c.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (std::size_t j = 0; j < X.c.size(); ++j)
    {
        const double xj = X.c.points[j][0], e = X.eta[j];
        std::vector<double> br = edges;
        br.insert(br.end(), {xj - e, xj, xj + e});
        rows[j] = integrate_1d(X.mu, a, b, br, [&](double x) { return X.K.g_eta(std::abs(x - xj), e); }, X.opt.de_level);
    }
    const double P = ordered_sum(rows) / X.N;
    Vec y(1);
    const double Q = integrate_1d(X.mu, a, b, edges, [&](double x) {
        y[0] = x;
        return X.mu.potential(X.K, y);
    }, X.opt.de_level);
    return P - Q;
}

// ------------------------------ d = 2 -------------------------------------

// Breakpoints (as parameters) along a boundary curve of Omega.
std::vector<double> curve_breaks(const Curve& k, const Ctx& X, double hmax)
{
    std::vector<V2> pts;
    for (std::size_t j = 0; j < X.c.size(); ++j)
    {
        const V2 xj(X.c.points[j][0], X.c.points[j][1]);
        intersect(k, make_circle(xj, X.eta[j]), pts);
    }
    for (const Curve& s : boundary_curves(X.mu.support())) intersect(k, s, pts);
    std::vector<double> par;
    double len;
    if (k.circle)
    {
        len = 2.0 * kPi;
        for (const V2& q : pts)
        {
            double t = std::atan2(q[1] - k.c[1], q[0] - k.c[0]);
            if (t < 0.0) t += 2.0 * kPi;
            par.push_back(t);
        }
        for (std::size_t j = 0; j < X.c.size(); ++j)
        {
            const V2 q(X.c.points[j][0] - k.c[0], X.c.points[j][1] - k.c[1]);
            if (q.norm() > 0.0 && std::abs(q.norm() - k.r) < 4.0 * X.eta[j])
            {
                double t = std::atan2(q[1], q[0]);
                if (t < 0.0) t += 2.0 * kPi;
                par.push_back(t);
            }
        }
        hmax /= k.r;
    }
    else
    {
        const V2 e = k.b - k.a;
        len = e.norm();
        for (const V2& q : pts) par.push_back((q - k.a).dot(e) / len);
        for (std::size_t j = 0; j < X.c.size(); ++j)
        {
            const V2 q(X.c.points[j][0], X.c.points[j][1]);
            const double t = (q - k.a).dot(e) / len;
            const double dist = std::abs((q - k.a)[0] * e[1] - (q - k.a)[1] * e[0]) / len;
            if (t > 0.0 && t < len && dist < 4.0 * X.eta[j]) par.push_back(t);
        }
    }
    par.push_back(0.0);
    par.push_back(len);
    std::vector<double> br;
    for (double t : unique_sorted(par, 1e-14 * len))
        if (t >= 0.0 && t <= len) br.push_back(t);
    // cap panel length
    std::vector<double> out{br.front()};
    for (std::size_t m = 1; m < br.size(); ++m)
    {
        const double L = br[m] - br[m - 1];
        const int pieces = std::max(1, static_cast<int>(std::ceil(L / hmax)));
        for (int q = 1; q <= pieces; ++q) out.push_back(br[m - 1] + L * q / pieces);
    }
    return out;
}

double flux_2d(const Ctx& X, int n, double hmax)
{
    Neumaier total;
    for (const Curve& k : boundary_curves(X.omega))
    {
        const std::vector<double> br = curve_breaks(k, X, hmax);
        const Rule r = composite_legendre(br, n);
        std::vector<double> vals(r.size());
#pragma omp parallel for schedule(dynamic, 8)
        for (std::size_t q = 0; q < r.size(); ++q)
        {
            V2 p, nrm;
            double ds;
            if (k.circle)
            {
                nrm = V2(std::cos(r.x[q]), std::sin(r.x[q]));
                p = k.c + k.r * nrm;
                ds = k.r;
            }
            else
            {
                const V2 e = (k.b - k.a).normalized();
                p = k.a + r.x[q] * e;
                nrm = V2(e[1], -e[0]);
                ds = 1.0;
            }
            const Vec x = to_vec(p);
            const Vec g = X.field.grad(x, 0.0);
            vals[q] = r.w[q] * ds * X.field.value(x, 0.0) * (g[0] * nrm[0] + g[1] * nrm[1]);
        }
        total.add(ordered_sum(vals));
    }
    return total.value();
}

double partial_sphere_2d(const Ctx& X, std::size_t i, int n)
{
    const V2 xi(X.c.points[i][0], X.c.points[i][1]);
    const double e = X.eta[i];
    const Curve me = make_circle(xi, e);
    std::vector<V2> pts;
    for (const Curve& k : boundary_curves(X.omega)) intersect(me, k, pts);
    for (const Curve& k : boundary_curves(X.mu.support())) intersect(me, k, pts);
    for (std::size_t j = 0; j < X.c.size(); ++j)
        if (j != i) intersect(me, make_circle(V2(X.c.points[j][0], X.c.points[j][1]), X.eta[j]), pts);
    std::vector<double> th{0.0, 2.0 * kPi};
    for (const V2& q : pts)
    {
        double t = std::atan2(q[1] - xi[1], q[0] - xi[0]);
        if (t < 0.0) t += 2.0 * kPi;
        th.push_back(t);
    }
    th = unique_sorted(th, 1e-15);
    Neumaier acc;
    for (std::size_t m = 0; m + 1 < th.size(); ++m)
    {
        const double a = th[m], b = th[m + 1];
        const double mid = 0.5 * (a + b);
        if (!X.omega.contains(to_vec(xi + e * V2(std::cos(mid), std::sin(mid))))) continue;
        const int pieces = std::max(1, static_cast<int>(std::ceil((b - a) / (0.25 * kPi))));
        const Rule r = composite_legendre([&] {
            std::vector<double> br;
            for (int q = 0; q <= pieces; ++q) br.push_back(a + (b - a) * q / pieces);
            return br;
        }(), n);
        for (std::size_t k = 0; k < r.size(); ++k)
            acc.add(r.w[k] * X.field.value(to_vec(xi + e * V2(std::cos(r.x[k]), std::sin(r.x[k]))), 0.0));
    }
    return acc.value() / (2.0 * kPi);
}

double volume_measure_2d(const Ctx& X)
{
    using Fam = BackgroundMeasure::Family;
    std::vector<std::pair<Region, double>> pieces;
    if (X.mu.family() == Fam::Tabulated)
        pieces = X.mu.cells();
    else
    {
        const Region& S = X.mu.support();
        const Vec probe = S.kind == Region::Kind::Ball ? S.center : Vec(0.5 * (S.lo + S.hi));
        pieces.emplace_back(S, X.mu.density(probe));
    }
    const int level = X.opt.de_level - 1;
    std::vector<double> rows(X.c.size(), 0.0);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::size_t j = 0; j < X.c.size(); ++j)
    {
        const V2 xj(X.c.points[j][0], X.c.points[j][1]);
        const double e = X.eta[j];
        Neumaier acc;
        for (const auto& [R, rho] : pieces)
        {
            if (region_distance(R, X.omega) > 0.0) continue;
            auto radial = [&](const Vec&, double t0, double t1) {
                return log_eta_antiderivative(e, t1) - log_eta_antiderivative(e, t0);
            };
            acc.add(rho * polar_intersection({X.omega, R}, xj, {e}, radial, level));
        }
        rows[j] = acc.value();
    }
    const double P = ordered_sum(rows) / X.N;
    // \int_{Omega cap S} U dmu from the centre of Omega
    const V2 p0 = X.omega.kind == Region::Kind::Ball ? V2(X.omega.center[0], X.omega.center[1])
                                                     : V2(0.5 * (X.omega.lo[0] + X.omega.hi[0]), 0.5 * (X.omega.lo[1] + X.omega.hi[1]));
    const Vec p0v = to_vec(p0);
    const int nr = X.opt.panel_nodes;
    Neumaier Q;
    for (const auto& [R, rho] : pieces)
    {
        if (region_distance(R, X.omega) > 0.0) continue;
        auto radial = [&](const Vec& w, double t0, double t1) {
            const Rule r = legendre_on(nr, t0, t1);
            double acc = 0.0;
            for (std::size_t k = 0; k < r.size(); ++k)
            {
                const Vec y = p0v + r.x[k] * w;
                acc += r.w[k] * r.x[k] * X.mu.potential(X.K, y);
            }
            return acc;
        };
        Q.add(rho * polar_intersection({X.omega, R}, p0, {}, radial, level));
    }
    return P - Q.value();
}

}  // namespace

LocalEnergy local_electric(const Configuration& c, const BackgroundMeasure& mu, const RieszKernel& K,
                           const std::vector<double>& radii, const Region& omega, const LocalEnergyOptions& opt)
{
    if (omega.is_whole())
    {
        LocalEnergy le;
        le.value = truncated_functional(c, mu, K, radii, omega);
        return le;
    }
    if (K.D() > 2)
        throw CapabilityError("localized energy on bounded sets is implemented for d + k <= 2 (d = 1, or d = 2 with s = 0)");
    if (radii.size() != c.size()) throw ParameterError("localized energy: one radius per point required");
    if (c.d != K.d || mu.d() != K.d || omega.d != K.d) throw ParameterError("localized energy: dimension mismatch");
    if (K.k == 1 && std::abs(mu.mass() - 1.0) > 1e-8)
        throw ParameterError("localized energy needs a unit-mass background measure");
    validate(c);

    Ctx X{c, mu, K, radii, omega, opt, Field{c, mu, K, radii}, static_cast<double>(c.size())};
    const std::size_t n = c.size();
    const int nq = opt.panel_nodes;

    // flux, with a coarser companion for the error estimate
    double flux, flux_coarse;
    if (K.d == 1)
    {
        flux = flux_1d(X, nq);
        flux_coarse = flux_1d(X, std::max(4, nq / 2));
    }
    else
    {
        const double hmax = 2.0 * *std::max_element(radii.begin(), radii.end());
        flux = flux_2d(X, nq, hmax);
        flux_coarse = flux_2d(X, std::max(4, nq / 2), hmax);
    }

    // sphere terms
    std::vector<double> pot(n), exc(n, 0.0), sph(n, 0.0);
    std::vector<char> inside(n);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::size_t i = 0; i < n; ++i)
    {
        inside[i] = omega.contains(c.points[i]);
        const bool full = inside[i] && omega.dist_to_boundary(c.points[i]) >= radii[i];
        if (inside[i] || full) exc[i] = excess_cross(mu, K, c.points[i], radii[i]);
        if (full)
        {
            Neumaier acc;
            for (std::size_t j = 0; j < n; ++j)
                acc.add(j == i ? K.g(radii[i])
                               : smeared_pair(K, (c.points[i] - c.points[j]).norm(), radii[i], radii[j]));
            sph[i] = acc.value() / X.N - mu.potential(K, c.points[i]) + exc[i];
        }
        else if (omega.distance_to(c.points[i]) < radii[i])
        {
            sph[i] = K.d == 1 ? partial_sphere_1d(X, i, nq) : partial_sphere_2d(X, i, nq);
        }
    }
    const double M = K.d == 1 ? volume_measure_1d(X) : volume_measure_2d(X);
    const double V = ordered_sum(sph) / X.N - M;

    Neumaier self, excess;
    for (std::size_t i = 0; i < n; ++i)
        if (inside[i])
        {
            self.add(K.g(radii[i]));
            excess.add(exc[i]);
        }

    LocalEnergy le;
    le.flux = flux;
    le.volume = K.c_ds * V;
    le.self = self.value() / (2.0 * X.N * X.N);
    le.excess = excess.value() / X.N;
    le.value = flux / (2.0 * K.c_ds) + 0.5 * V - le.self - le.excess;
    le.error_estimate = std::abs(flux - flux_coarse) / (2.0 * K.c_ds);
    return le;
}

LocalEnergy local_modulated_energy(const Configuration& c, const BackgroundMeasure& mu, const RieszKernel& K,
                                   const Region& omega, const LocalEnergyOptions& opt)
{
    const LocalScales ls = local_scales(c, mu, omega);
    if (omega.is_whole())
    {
        LocalEnergy le;
        le.value = modulated_energy(c, mu, K).F_N;
        return le;
    }
    return local_electric(c, mu, K, ls.rtilde, omega, opt);
}

}  // namespace rlab
