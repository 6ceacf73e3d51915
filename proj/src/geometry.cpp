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

#include "rlab/geometry.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "rlab/quadrature.hpp"
#include "rlab/sphere.hpp"

namespace rlab
{
Region Region::whole(int d)
{
    Region r;
    r.d = d;
    return r;
}

Region Region::ball(const Vec& c, double rad)
{
    if (!(rad > 0.0)) throw ParameterError("ball radius must be positive");
    Region r;
    r.kind = Kind::Ball;
    r.d = static_cast<int>(c.size());
    r.center = c;
    r.radius = rad;
    return r;
}

Region Region::box(const Vec& lo, const Vec& hi)
{
    if (lo.size() != hi.size()) throw ParameterError("box corners differ in dimension");
    for (int i = 0; i < lo.size(); ++i)
        if (!(hi[i] > lo[i])) throw ParameterError("box must have positive extent");
    Region r;
    r.kind = Kind::Box;
    r.d = static_cast<int>(lo.size());
    r.lo = lo;
    r.hi = hi;
    return r;
}

bool Region::contains(const Vec& x, double slack) const
{
    switch (kind)
    {
    case Kind::Whole: return true;
    case Kind::Ball: return (x - center).norm() <= radius + slack;
    case Kind::Box:
        for (int i = 0; i < d; ++i)
            if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) return false;
        return true;
    }
    return false;
}

double Region::dist_to_boundary(const Vec& x) const
{
    switch (kind)
    {
    case Kind::Whole: return std::numeric_limits<double>::infinity();
    case Kind::Ball: return std::abs(radius - (x - center).norm());
    case Kind::Box:
        if (contains(x))
        {
            double m = std::numeric_limits<double>::infinity();
            for (int i = 0; i < d; ++i) m = std::min({m, x[i] - lo[i], hi[i] - x[i]});
            return m;
        }
        return distance_to(x);
    }
    return 0.0;
}

double Region::distance_to(const Vec& x) const
{
    switch (kind)
    {
    case Kind::Whole: return 0.0;
    case Kind::Ball: return std::max(0.0, (x - center).norm() - radius);
    case Kind::Box:
    {
        double s = 0.0;
        for (int i = 0; i < d; ++i)
        {
            const double g = std::max({lo[i] - x[i], 0.0, x[i] - hi[i]});
            s += g * g;
        }
        return std::sqrt(s);
    }
    }
    return 0.0;
}

std::optional<std::pair<double, double>> Region::ray(const Vec& p, const Vec& w) const
{
    const double inf = std::numeric_limits<double>::infinity();
    switch (kind)
    {
    case Kind::Whole: return std::make_pair(0.0, inf);
    case Kind::Ball:
    {
        const Vec q = p - center;
        const double b = q.dot(w);
        const double c = q.squaredNorm() - radius * radius;
        const double disc = b * b - c;
        if (disc < 0.0) return std::nullopt;
        const double sq = std::sqrt(disc);
        if (c <= 0.0)
        {
            // inside: one nonnegative root, evaluated without cancellation
            const double t1 = (b > 0.0) ? -c / (b + sq) : sq - b;
            return std::make_pair(0.0, t1);
        }
        if (b >= 0.0) return std::nullopt;
        return std::make_pair(c / (sq - b), sq - b);
    }
    case Kind::Box:
    {
        double t0 = 0.0, t1 = inf;
        for (int i = 0; i < d; ++i)
        {
            if (w[i] == 0.0)
            {
                if (p[i] < lo[i] || p[i] > hi[i]) return std::nullopt;
                continue;
            }
            double a = (lo[i] - p[i]) / w[i], b = (hi[i] - p[i]) / w[i];
            if (a > b) std::swap(a, b);
            t0 = std::max(t0, a);
            t1 = std::min(t1, b);
        }
        if (t1 < t0) return std::nullopt;
        return std::make_pair(t0, t1);
    }
    }
    return std::nullopt;
}

double Region::volume() const
{
    switch (kind)
    {
    case Kind::Whole: return std::numeric_limits<double>::infinity();
    case Kind::Ball:
    {
        const double pi = std::numbers::pi;
        if (d == 1) return 2.0 * radius;
        if (d == 2) return pi * radius * radius;
        return 4.0 / 3.0 * pi * radius * radius * radius;
    }
    case Kind::Box: return (hi - lo).prod();
    }
    return 0.0;
}

double region_distance(const Region& a, const Region& b)
{
    using K = Region::Kind;
    if (a.kind == K::Whole || b.kind == K::Whole) return 0.0;
    if (a.kind == K::Ball && b.kind == K::Ball)
        return std::max(0.0, (a.center - b.center).norm() - a.radius - b.radius);
    if (a.kind == K::Ball) return std::max(0.0, b.distance_to(a.center) - a.radius);
    if (b.kind == K::Ball) return std::max(0.0, a.distance_to(b.center) - b.radius);
    double s = 0.0;
    for (int i = 0; i < a.d; ++i)
    {
        const double g = std::max({a.lo[i] - b.hi[i], 0.0, b.lo[i] - a.hi[i]});
        s += g * g;
    }
    return std::sqrt(s);
}

namespace
{
constexpr double kPi = std::numbers::pi;

// breaks on [a, b] refined toward b
std::vector<double> graded_to_right(double a, double b, double first)
{
    std::vector<double> br = graded_breaks(0.0, b - a, first);
    std::vector<double> out(br.size());
    for (std::size_t i = 0; i < br.size(); ++i) out[br.size() - 1 - i] = b - br[i];
    out.front() = a;
    return out;
}

// symmetric panels on [-L, L] refined toward -c and +c (0 < c < L)
Rule graded_about(double L, double c, double first, int n)
{
    std::vector<double> pos;
    if (c > first)
    {
        pos = graded_to_right(0.0, c, first);
        for (double x : graded_breaks(c, L, first))
            if (x > pos.back() + 1e-15) pos.push_back(x);
    }
    else
        pos = graded_breaks(0.0, L, first);
    std::vector<double> br;
    for (auto it = pos.rbegin(); it != pos.rend(); ++it)
        if (*it > 0.0) br.push_back(-*it);
    for (double x : pos) br.push_back(x);
    return composite_legendre(br, n);
}

void visit_interval(double a, double b, double p, const AngularVisitor& visit)
{
    Vec plus(1), minus(1);
    plus << 1.0;
    minus << -1.0;
    if (p >= a && p <= b)
    {
        if (b > p) visit(plus, 1.0, 0.0, b - p);
        if (p > a) visit(minus, 1.0, 0.0, p - a);
    }
    else if (p < a)
        visit(plus, 1.0, a - p, b - p);
    else
        visit(minus, 1.0, p - b, p - a);
}

Vec unit2(double th)
{
    Vec w(2);
    w << std::cos(th), std::sin(th);
    return w;
}

void visit_disk(const Region& S, const Vec& p, const PolarOptions& opt, const AngularVisitor& visit)
{
    const Vec q = p - S.center;
    const double L = q.norm();
    const double R = S.radius;
    const double th0 = (L > 0.0) ? std::atan2(q[1], q[0]) : 0.0;
    if (L < R)
    {
        // exit distance is analytic in the angle with branch points at
        // +-pi/2 +- i acosh(R/L) relative to the outward direction
        const double delta = R - L;
        const double c2 = R * R - L * L;
        Rule ang;
        if (L < 0.5 * R)
            ang = [&] {
                Rule t = trapezoid_periodic(std::max(opt.n_ang, 32));
                for (double& x : t.x) x -= kPi;
                return t;
            }();
        else
        {
            const double first = std::min(0.25 * kPi, std::sqrt(2.0 * delta / R));
            ang = graded_about(kPi, 0.5 * kPi, first, std::max(8, opt.n_ang / 3));
        }
        for (std::size_t j = 0; j < ang.size(); ++j)
        {
            const Vec w = unit2(th0 + ang.x[j]);
            const double b = q.dot(w);
            const double sq = std::sqrt(b * b + c2);
            const double t1 = (b > 0.0) ? c2 / (b + sq) : sq - b;
            visit(w, ang.w[j], 0.0, t1);
        }
        return;
    }
    // exterior or boundary point: the cone of directions hitting the disk
    const double beta = std::asin(std::min(1.0, R / L));
    const double thc = th0 + kPi;
    const double c = L * L - R * R;
    for (int side = -1; side <= 1; side += 2)
    {
        const DERule& r = tanh_sinh(opt.de_level);
        for (std::size_t j = 0; j < r.t.size(); ++j)
        {
            const double off = side * beta * r.t[j];
            const Vec w = unit2(thc + off);
            const double b = -q.dot(w);  // > 0
            // distance to the tangent direction, computed without cancellation
            const double dr = beta * r.hi[j];
            const double disc = std::max(0.0, L * L * std::sin(dr) * std::sin(2.0 * beta - dr));
            const double sq = std::sqrt(disc);
            const double t0 = (c > 0.0) ? c / (b + sq) : 0.0;
            const double t1 = b + sq;
            visit(w, beta * r.w[j], t0, t1);
        }
    }
}

void visit_box2(const Region& S, const Vec& p, const PolarOptions& opt, const AngularVisitor& visit)
{
    // corners counter-clockwise
    const double x0 = S.lo[0], x1 = S.hi[0], y0 = S.lo[1], y1 = S.hi[1];
    const double cx[5] = {x0, x1, x1, x0, x0};
    const double cy[5] = {y0, y0, y1, y1, y0};
    for (int e = 0; e < 4; ++e)
    {
        Vec A(2), B(2);
        A << cx[e], cy[e];
        B << cx[e + 1], cy[e + 1];
        Vec t = (B - A).normalized();
        Vec n(2);
        n << t[1], -t[0];  // outward for counter-clockwise order
        const double h = n.dot(A - p);
        if (std::abs(h) < 1e-14 * (1.0 + p.norm())) continue;
        const double ah = std::abs(h);
        const double sgn = h > 0.0 ? 1.0 : -1.0;
        const Vec F = p + h * n;
        const double uA = t.dot(A - F), uB = t.dot(B - F);
        const double ta = std::asinh(uA / ah), tb = std::asinh(uB / ah);
        const int panels = std::max(1, static_cast<int>(std::ceil((tb - ta) / 1.5)));
        std::vector<double> br(panels + 1);
        for (int k = 0; k <= panels; ++k) br[k] = ta + (tb - ta) * k / panels;
        const Rule r = composite_legendre(br, std::max(6, opt.n_ang / 4));
        for (std::size_t j = 0; j < r.size(); ++j)
        {
            const double ch = std::cosh(r.x[j]);
            const double u = ah * std::sinh(r.x[j]);
            Vec w = (h * n + u * t) / (ah * ch);
            visit(w, sgn * r.w[j] / ch, 0.0, ah * ch);
        }
    }
}

Vec from_axis(const Vec& e, double u, double phi)
{
    // orthonormal frame around e
    Vec a(3);
    if (std::abs(e[0]) < 0.9)
        a << 1.0, 0.0, 0.0;
    else
        a << 0.0, 1.0, 0.0;
    Eigen::Vector3d e3 = e.head<3>();
    Eigen::Vector3d f1 = (a.head<3>() - a.head<3>().dot(e3) * e3).normalized();
    Eigen::Vector3d f2 = e3.cross(f1);
    const double sn = std::sqrt(std::max(0.0, 1.0 - u * u));
    Eigen::Vector3d w = u * e3 + sn * (std::cos(phi) * f1 + std::sin(phi) * f2);
    return Vec(w);
}

void visit_ball3(const Region& S, const Vec& p, const PolarOptions& opt, const AngularVisitor& visit)
{
    const Vec q = p - S.center;
    const double L = q.norm();
    const double R = S.radius;
    Vec e(3);
    if (L > 0.0)
        e = q / L;
    else
        e << 0.0, 0.0, 1.0;
    const Rule az = trapezoid_periodic(std::max(8, opt.n_ang / 2));
    if (L < R)
    {
        const double c2 = R * R - L * L;
        Rule ur;
        if (L < 0.5 * R)
            ur = legendre_on(std::max(12, opt.n_ang / 2), -1.0, 1.0);
        else
        {
            const double first = std::min(0.5, std::sqrt(2.0 * (R - L) / R));
            ur = graded_about(1.0, 0.0, first, std::max(8, opt.n_ang / 4));
        }
        for (std::size_t i = 0; i < ur.size(); ++i)
        {
            const double u = ur.x[i];
            const double b = L * u;
            const double sq = std::sqrt(b * b + c2);
            const double t1 = (b > 0.0) ? c2 / (b + sq) : sq - b;
            for (std::size_t j = 0; j < az.size(); ++j) visit(from_axis(e, u, az.x[j]), ur.w[i] * az.w[j], 0.0, t1);
        }
        return;
    }
    const double cb = std::sqrt(std::max(0.0, 1.0 - (R / L) * (R / L)));
    const double c = L * L - R * R;
    const DERule& r = tanh_sinh(opt.de_level);
    const double span = 1.0 - cb;
    for (std::size_t i = 0; i < r.t.size(); ++i)
    {
        const double u = cb + span * r.t[i];
        const double b = L * u;
        // b^2 - c = L^2 (u^2 - cb^2)
        const double disc = std::max(0.0, L * L * (span * r.lo[i]) * (u + cb));
        const double sq = std::sqrt(disc);
        const double t0 = (c > 0.0) ? c / (b + sq) : 0.0;
        const double t1 = b + sq;
        for (std::size_t j = 0; j < az.size(); ++j)
            visit(from_axis(Vec(-e), u, az.x[j]), span * r.w[i] * az.w[j], t0, t1);
    }
}

}  // namespace

void angular_nodes(const Region& S, const Vec& p, const PolarOptions& opt, const AngularVisitor& visit)
{
    using K = Region::Kind;
    if (S.kind == K::Whole) throw CapabilityError("polar integration needs a bounded region");
    if (S.d == 1)
    {
        const double a = S.kind == K::Ball ? S.center[0] - S.radius : S.lo[0];
        const double b = S.kind == K::Ball ? S.center[0] + S.radius : S.hi[0];
        visit_interval(a, b, p[0], visit);
        return;
    }
    if (S.d == 2)
    {
        if (S.kind == K::Ball)
            visit_disk(S, p, opt, visit);
        else
            visit_box2(S, p, opt, visit);
        return;
    }
    if (S.d == 3 && S.kind == K::Ball)
    {
        visit_ball3(S, p, opt, visit);
        return;
    }
    throw CapabilityError("polar integration supports intervals, disks, rectangles and 3D balls");
}

namespace
{
// \int_{t0}^{t1} r^beta phi(r) dr
template <class F>
void radial_piece(double t0, double t1, double beta, int n, F&& acc)
{
    if (!(t1 > t0)) return;
    if (t0 >= t1 - t0)
    {
        const Rule r = legendre_on(n, t0, t1);
        for (std::size_t i = 0; i < r.size(); ++i) acc(r.x[i], r.w[i] * std::pow(r.x[i], beta));
        return;
    }
    const Rule r1 = left_singular(n, 0.0, t1, beta);
    for (std::size_t i = 0; i < r1.size(); ++i) acc(r1.x[i], r1.w[i]);
    if (t0 > 0.0)
    {
        const Rule r0 = left_singular(n, 0.0, t0, beta);
        for (std::size_t i = 0; i < r0.size(); ++i) acc(r0.x[i], -r0.w[i]);
    }
}
}  // namespace

double polar_integrate(const Region& S, const Vec& p, double beta,
                       const std::function<double(double, const Vec&)>& phi, const PolarOptions& opt)
{
    double total = 0.0;
    angular_nodes(S, p, opt, [&](const Vec& w, double aw, double t0, double t1) {
        double s = 0.0;
        radial_piece(t0, t1, beta, opt.n_rad, [&](double r, double rw) { s += rw * phi(r, w); });
        total += aw * s;
    });
    return total;
}

Eigen::VectorXd polar_integrate_vec(const Region& S, const Vec& p, double beta, int m,
                                    const std::function<void(double, const Vec&, Eigen::VectorXd&)>& phi,
                                    const PolarOptions& opt)
{
    Eigen::VectorXd total = Eigen::VectorXd::Zero(m), v(m), s(m);
    angular_nodes(S, p, opt, [&](const Vec& w, double aw, double t0, double t1) {
        s.setZero();
        radial_piece(t0, t1, beta, opt.n_rad, [&](double r, double rw) {
            phi(r, w, v);
            s += rw * v;
        });
        total += aw * s;
    });
    return total;
}

double polar_radial(const Region& S, const Vec& p, const std::function<double(double)>& A, const PolarOptions& opt)
{
    double total = 0.0;
    angular_nodes(S, p, opt, [&](const Vec&, double aw, double t0, double t1) {
        total += aw * (A(t1) - (t0 > 0.0 ? A(t0) : A(0.0)));
    });
    return total;
}

Vec polar_radial_dir(const Region& S, const Vec& p, const std::function<double(double)>& B, const PolarOptions& opt)
{
    Vec total = Vec::Zero(S.d);
    angular_nodes(S, p, opt, [&](const Vec& w, double aw, double t0, double t1) {
        const double v = (t0 > 0.0) ? B(t1) - B(t0) : B(t1);
        total += aw * v * w;
    });
    return total;
}

VolumeRule volume_rule(const Region& S, int n_ang, int de_level)
{
    using K = Region::Kind;
    VolumeRule vr;
    const DERule& r = tanh_sinh(de_level);
    if (S.kind == K::Whole) throw CapabilityError("volume rule needs a bounded region");
    if (S.d == 1 || S.kind == K::Box)
    {
        // tensor product of tanh-sinh rules
        const int d = S.d;
        Vec lo = S.kind == K::Box ? S.lo : Vec(S.center.array() - S.radius);
        Vec hi = S.kind == K::Box ? S.hi : Vec(S.center.array() + S.radius);
        const std::size_t n = r.t.size();
        std::vector<std::size_t> idx(d, 0);
        while (true)
        {
            Vec y(d);
            double w = 1.0;
            for (int i = 0; i < d; ++i)
            {
                const double L = hi[i] - lo[i];
                y[i] = (r.lo[idx[i]] <= 0.5) ? lo[i] + L * r.lo[idx[i]] : hi[i] - L * r.hi[idx[i]];
                w *= L * r.w[idx[i]];
            }
            vr.nodes.push_back(y);
            vr.weights.push_back(w);
            int i = 0;
            while (i < d && ++idx[i] == n) idx[i++] = 0;
            if (i == d) break;
        }
        return vr;
    }
    // ball: tanh-sinh radius times sphere rule
    const SphereRule& sr = sphere_rule(S.d, n_ang);
    const double R = S.radius;
    for (std::size_t i = 0; i < r.t.size(); ++i)
    {
        const double rad = (r.lo[i] <= 0.5) ? R * r.lo[i] : R - R * r.hi[i];
        const double jac = R * r.w[i] * std::pow(rad, S.d - 1);
        for (std::size_t j = 0; j < sr.dirs.size(); ++j)
        {
            vr.nodes.push_back(Vec(S.center + rad * sr.dirs[j]));
            vr.weights.push_back(jac * sr.weights[j]);
        }
    }
    return vr;
}

}  // namespace rlab
