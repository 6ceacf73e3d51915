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

#include "rlab/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <tuple>

namespace rlab
{
namespace
{
Rule build_gauss_jacobi(int n, double a, double b)
{
    if (n < 1) throw std::invalid_argument("gauss_jacobi: n must be positive");
    if (a <= -1.0 || b <= -1.0) throw std::invalid_argument("gauss_jacobi: exponents must exceed -1");
    Eigen::VectorXd diag(n);
    Eigen::VectorXd sub(std::max(n - 1, 1));
    const double ab = a + b;
    for (int k = 0; k < n; ++k)
    {
        const double t = 2.0 * k + ab;
        if (k == 0)
            diag(k) = (b - a) / (ab + 2.0);
        else
            diag(k) = (b * b - a * a) / (t * (t + 2.0));
    }
    for (int k = 0; k + 1 < n; ++k)
    {
        const double kk = k + 1.0;
        const double t = 2.0 * kk + ab;
        double v;
        if (k == 0)
            v = 4.0 * (a + 1.0) * (b + 1.0) / ((ab + 2.0) * (ab + 2.0) * (ab + 3.0));
        else
            v = 4.0 * kk * (kk + a) * (kk + b) * (kk + ab) / ((t - 1.0) * t * t * (t + 1.0));
        sub(k) = std::sqrt(v);
    }
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) + std::lgamma(b + 1.0) -
                                std::lgamma(ab + 2.0));
    if (n == 1)
    {
        r.x[0] = diag(0);
        r.w[0] = mu0;
        return r;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub.head(n - 1), Eigen::ComputeEigenvectors);
    for (int k = 0; k < n; ++k)
    {
        r.x[k] = es.eigenvalues()(k);
        const double v0 = es.eigenvectors()(0, k);
        r.w[k] = mu0 * v0 * v0;
    }
    // Newton polish of the nodes on the Jacobi polynomial keeps endpoint
    // clustered nodes accurate for larger n.
    for (int k = 0; k < n; ++k)
    {
        double x = r.x[k];
        for (int it = 0; it < 3; ++it)
        {
            // three-term recurrence for P_n^{(a,b)} and its derivative
            double p0 = 1.0, p1 = 0.5 * (a - b + (ab + 2.0) * x);
            if (n == 1) p0 = p1;
            for (int m = 2; m <= n; ++m)
            {
                const double c = 2.0 * m + ab;
                const double a1 = 2.0 * m * (m + ab) * (c - 2.0);
                const double a2 = (c - 1.0) * (a * a - b * b);
                const double a3 = (c - 2.0) * (c - 1.0) * c;
                const double a4 = 2.0 * (m + a - 1.0) * (m + b - 1.0) * c;
                const double p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
                p0 = p1;
                p1 = p2;
            }
            // derivative via d/dx P_n = (n+ab+1)/2 P_{n-1}^{(a+1,b+1)}; use the
            // identity (2n+ab)(1-x^2) P_n' = n[(a-b) - (2n+ab) x] P_n + 2(n+a)(n+b) P_{n-1}
            const double c = 2.0 * n + ab;
            const double dp = (n * ((a - b) - c * x) * p1 + 2.0 * (n + a) * (n + b) * p0) / (c * (1.0 - x * x));
            if (!std::isfinite(dp) || dp == 0.0) break;
            const double dx = p1 / dp;
            if (!std::isfinite(dx) || std::abs(dx) > 1e-6) break;
            x -= dx;
        }
        r.x[k] = x;
    }
    return r;
}
}  // namespace

const Rule& gauss_jacobi(int n, double alpha, double beta)
{
    static std::mutex m;
    static std::map<std::tuple<int, double, double>, Rule> cache;
    std::lock_guard<std::mutex> lock(m);
    auto key = std::make_tuple(n, alpha, beta);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    return cache.emplace(key, build_gauss_jacobi(n, alpha, beta)).first->second;
}

Rule jacobi01(int n, double a, double b)
{
    // weight t^a (1-t)^b with t = (1+x)/2 -> (1-x)^b (1+x)^a 2^{-a-b}
    const Rule& g = gauss_jacobi(n, b, a);
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    const double scale = std::pow(2.0, -(a + b + 1.0));
    for (int k = 0; k < n; ++k)
    {
        r.x[k] = 0.5 * (1.0 + g.x[k]);
        r.w[k] = g.w[k] * scale;
    }
    return r;
}

Rule left_singular(int n, double a, double b, double e)
{
    Rule r = jacobi01(n, e, 0.0);
    const double L = b - a;
    const double s = std::pow(L, e + 1.0);
    for (int k = 0; k < n; ++k)
    {
        r.x[k] = a + L * r.x[k];
        r.w[k] *= s;
    }
    return r;
}

Rule legendre_on(int n, double a, double b)
{
    const Rule& g = gauss_legendre(n);
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    const double h = 0.5 * (b - a), c = 0.5 * (a + b);
    for (int k = 0; k < n; ++k)
    {
        r.x[k] = c + h * g.x[k];
        r.w[k] = h * g.w[k];
    }
    return r;
}

const DERule& tanh_sinh(int level)
{
    static std::mutex m;
    static std::map<int, DERule> cache;
    std::lock_guard<std::mutex> lock(m);
    auto it = cache.find(level);
    if (it != cache.end()) return it->second;
    DERule r;
    const double h = std::ldexp(1.0, -level);
    const double hpi = 0.5 * std::numbers::pi;
    // run until the node distance to the endpoint underflows, so that
    // integrable endpoint singularities keep their tail
    for (int k = 0;; ++k)
    {
        const double tau = k * h;
        const double u = hpi * std::sinh(tau);
        const double wgt = h * hpi * std::cosh(tau) / (std::cosh(u) * std::cosh(u)) * 0.5;
        const double e = std::exp(-2.0 * u);
        const double hi = e / (1.0 + e);  // distance to 1
        const double lo = 1.0 / (1.0 + e);
        if (wgt < 1e-300 || hi < 1e-100) break;
        if (k == 0)
        {
            r.t.push_back(0.5);
            r.lo.push_back(0.5);
            r.hi.push_back(0.5);
            r.w.push_back(wgt);
            continue;
        }
        r.t.push_back(lo);
        r.lo.push_back(lo);
        r.hi.push_back(hi);
        r.w.push_back(wgt);
        r.t.push_back(hi);
        r.lo.push_back(hi);
        r.hi.push_back(lo);
        r.w.push_back(wgt);
    }
    return cache.emplace(level, std::move(r)).first->second;
}

double de_integrate(const std::function<double(double, double, double)>& f, double a, double b, int level)
{
    const DERule& r = tanh_sinh(level);
    const double L = b - a;
    double acc = 0.0;
    for (std::size_t k = 0; k < r.t.size(); ++k)
    {
        const double dl = L * r.lo[k], dr = L * r.hi[k];
        const double x = (r.lo[k] <= 0.5) ? a + dl : b - dr;
        acc += r.w[k] * f(x, dl, dr);
    }
    return acc * L;
}

Rule trapezoid_periodic(int n)
{
    Rule r;
    r.x.resize(n);
    r.w.assign(n, 2.0 * std::numbers::pi / n);
    for (int k = 0; k < n; ++k) r.x[k] = 2.0 * std::numbers::pi * k / n;
    return r;
}

std::vector<double> graded_breaks(double a, double b, double first, double ratio)
{
    std::vector<double> br{a};
    double h = first;
    double x = a;
    while (x + h < b - 0.5 * h)
    {
        x += h;
        br.push_back(x);
        h *= ratio;
    }
    br.push_back(b);
    return br;
}

Rule composite_legendre(const std::vector<double>& breaks, int n)
{
    Rule r;
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p)
    {
        Rule q = legendre_on(n, breaks[p], breaks[p + 1]);
        r.x.insert(r.x.end(), q.x.begin(), q.x.end());
        r.w.insert(r.w.end(), q.w.begin(), q.w.end());
    }
    return r;
}

namespace
{
// \int_a^b f(psi) sin^p(psi) on 0 <= a < b <= pi/2
double sin_power_half(const std::function<double(double)>& f, double a, double b, double p, int n)
{
    if (b <= a) return 0.0;
    double acc = 0.0;
    if (a == 0.0)
    {
        Rule r = left_singular(n, 0.0, b, p);
        for (std::size_t k = 0; k < r.size(); ++k)
        {
            const double x = r.x[k];
            acc += r.w[k] * f(x) * std::pow(std::sin(x) / x, p);
        }
        return acc;
    }
    std::vector<double> br = graded_breaks(a, b, a, 2.0);
    Rule r = composite_legendre(br, n);
    for (std::size_t k = 0; k < r.size(); ++k) acc += r.w[k] * f(r.x[k]) * std::pow(std::sin(r.x[k]), p);
    return acc;
}
}  // namespace

double integrate_sin_power(const std::function<double(double)>& f, double a, double b, double p, int n)
{
    const double pi = std::numbers::pi;
    const double h = 0.5 * pi;
    double acc = 0.0;
    if (a < h) acc += sin_power_half(f, a, std::min(b, h), p, n);
    if (b > h)
    {
        // mirror: psi = pi - u
        auto g = [&](double u) { return f(pi - u); };
        const double ua = pi - b, ub = pi - std::max(a, h);
        acc += sin_power_half(g, std::max(ua, 0.0), ub, p, n);
    }
    return acc;
}

}  // namespace rlab
