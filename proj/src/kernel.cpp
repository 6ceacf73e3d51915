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

#include "rlab/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rlab/quadrature.hpp"
#include "rlab/radial.hpp"
#include "rlab/sphere.hpp"

namespace rlab
{
double RieszKernel::g(double r) const
{
    if (s == 0.0) return -std::log(r);
    if (s == 1.0) return 1.0 / r;
    if (s == -1.0) return -r;
    return std::pow(r, -s) / s;
}

double RieszKernel::g_r2(double r2) const
{
    if (s == 0.0) return -0.5 * std::log(r2);
    if (s == 1.0) return 1.0 / std::sqrt(r2);
    if (s == -1.0) return -std::sqrt(r2);
    return std::pow(r2, -0.5 * s) / s;
}

double RieszKernel::dg(double r) const
{
    if (s == 0.0) return -1.0 / r;
    return -std::pow(r, -s - 1.0);
}

double RieszKernel::g_eta(double r, double eta) const { return r >= eta ? g(r) : g(eta); }

double RieszKernel::f_eta(double r, double eta) const { return r >= eta ? 0.0 : g(r) - g(eta); }

void RieszKernel::radial_derivs(double rho, int m, double* Gd) const
{
    if (s == 0.0)
    {
        Gd[0] = -0.5 * std::log(rho);
        double fact = 1.0;  // (j-1)!
        double inv = 1.0 / rho;
        double p = inv;
        for (int j = 1; j <= m; ++j)
        {
            Gd[j] = -0.5 * ((j % 2 == 1) ? 1.0 : -1.0) * fact * p;
            fact *= j;
            p *= inv;
        }
        return;
    }
    Gd[0] = g_r2(rho);
    const double inv = 1.0 / rho;
    for (int j = 1; j <= m; ++j) Gd[j] = Gd[j - 1] * (-0.5 * s - (j - 1)) * inv;
}

double RieszKernel::contract(int n, const Vec& X, const Vec& a) const
{
    double Gd[16];
    radial_derivs(X.squaredNorm(), n, Gd);
    return radial::contract(n, Gd, X.dot(a), a.squaredNorm());
}

Vec RieszKernel::contract1(int n, const Vec& X, const Vec& a) const
{
    double Gd[16];
    radial_derivs(X.squaredNorm(), n + 1, Gd);
    return radial::contract1(n + 1, Gd, X, a);
}

Mat RieszKernel::contract2(int n, const Vec& X, const Vec& a) const
{
    double Gd[16];
    radial_derivs(X.squaredNorm(), n + 2, Gd);
    return radial::contract2(n + 2, Gd, X, a);
}

Vec RieszKernel::gradient(const Vec& X) const
{
    const double rho = X.squaredNorm();
    const double d1 = (s == 0.0) ? -0.5 / rho : -0.5 * std::pow(rho, -0.5 * s - 1.0);
    return 2.0 * d1 * X;
}

RieszKernel make_kernel(int d, double s)
{
    if (d < 1) throw ParameterError("kernel: dimension d must be >= 1");
    if (!(s >= d - 2.0 && s < d))
    {
        std::ostringstream os;
        os << "kernel: s = " << s << " is outside the admissible interval [" << d - 2 << ", " << d
           << ") for d = " << d;
        throw ParameterError(os.str());
    }
    RieszKernel K;
    K.d = d;
    K.s = s;
    K.k = (std::abs(s - (d - 2.0)) < 1e-14) ? 0 : 1;
    if (K.k == 0) K.s = d - 2.0;
    K.gamma = K.s + 2.0 - d - K.k;
    K.c_ds = normalization_constant(d, K.s);
    return K;
}

double normalization_constant(int d, double s)
{
    const bool coulomb = std::abs(s - (d - 2.0)) < 1e-14;
    const SphereRule& om = sphere_rule(d, 16);
    double area = 0.0;
    for (double w : om.weights) area += w;
    if (coulomb)
    {
        // -\int_{dB_1} d_r g: the outward flux of -grad g through the unit sphere
        RieszKernel tmp;
        tmp.d = d;
        tmp.s = d - 2.0;
        double acc = 0.0;
        for (double w : om.weights) acc += -tmp.dg(1.0) * w;
        return acc;
    }
    const double gamma = s + 1.0 - d;
    const Rule r = jacobi01(48, gamma, 0.5 * (d - 2.0));
    double acc = 0.0;
    for (std::size_t q = 0; q < r.size(); ++q) acc += r.w[q] * std::pow(1.0 + r.x[q], 0.5 * (d - 2.0));
    return 2.0 * acc * area;
}

KernelValues evaluate(const RieszKernel& K, const ExtendedPoint& p, double eta, int n)
{
    if (n < 0 || n > 6) throw ParameterError("evaluate: derivative order must lie in [0, 6]");
    const Vec X = p.joined();
    if (X.size() != K.D()) throw ParameterError("evaluate: point dimension must equal d + k");
    const double r = X.norm();
    if (r == 0.0) throw SingularityError("evaluate: the kernel is singular at the origin");
    KernelValues out;
    out.g = K.g(r);
    out.g_eta = K.g_eta(r, eta);
    out.f_eta = K.f_eta(r, eta);
    double Gd[16];
    K.radial_derivs(r * r, n, Gd);
    out.tensor = radial::full_tensor(n, Gd, X);
    return out;
}

SmearNodes smear_nodes(const RieszKernel& K, const Vec& x, double eta, int M)
{
    if (M < 2) throw ResolutionError("smear_nodes: at least 2 nodes per direction are required");
    if (!(eta > 0.0)) throw ParameterError("smear_nodes: eta must be positive");
    const int d = K.d;
    SmearNodes out;
    const SphereRule& om = sphere_rule(d, M);
    if (K.k == 0)
    {
        double area = 0.0;
        for (double w : om.weights) area += w;
        for (std::size_t q = 0; q < om.dirs.size(); ++q)
        {
            out.points.push_back(x + eta * om.dirs[q]);
            out.weights.push_back(om.weights[q] / area);
        }
        return out;
    }
    const double half = 0.5 * (d - 2.0);
    const Rule t = jacobi01(M, K.gamma, half);
    for (std::size_t a = 0; a < t.size(); ++a)
    {
        const double tz = t.x[a];
        const double wt = t.w[a] * std::pow(1.0 + tz, half) / K.c_ds;
        const double rho = eta * std::sqrt((1.0 - tz) * (1.0 + tz));
        for (int sg = -1; sg <= 1; sg += 2)
        {
            for (std::size_t q = 0; q < om.dirs.size(); ++q)
            {
                Vec p(d + 1);
                p.head(d) = x + rho * om.dirs[q];
                p(d) = sg * eta * tz;
                out.points.push_back(p);
                out.weights.push_back(wt * om.weights[q]);
            }
        }
    }
    return out;
}

double smeared_pair(const RieszKernel& K, double dist, double ai, double aj)
{
    auto geta = [&](double r) { return r >= aj ? K.g(r) : K.g(aj); };
    if (K.D() == 1) return 0.5 * (geta(std::abs(dist - ai)) + geta(dist + ai));
    if (dist >= ai + aj) return K.g(dist);
    if (aj >= dist + ai) return K.g(aj);
    if (dist == 0.0) return geta(ai);
    const double pi = std::numbers::pi;
    const double p = K.s;
    const double total = integrate_sin_power([](double) { return 1.0; }, 0.0, pi, p);
    double ustar = (ai * ai + dist * dist - aj * aj) / (2.0 * ai * dist);
    ustar = std::clamp(ustar, -1.0, 1.0);
    const double psi = std::acos(ustar);
    double acc = 0.0;
    if (psi > 0.0) acc += K.g(aj) * integrate_sin_power([](double) { return 1.0; }, 0.0, psi, p);
    if (psi < pi)
    {
        auto f = [&](double t) {
            const double r2 = ai * ai + dist * dist - 2.0 * ai * dist * std::cos(t);
            return K.g_r2(std::max(r2, aj * aj));
        };
        acc += integrate_sin_power(f, psi, pi, p);
    }
    return acc / total;
}

// ---------------------------------------------------------------------------


Mollifier::Mollifier(int d, int m, double eta) : d_(d), m_(m), eta_(eta), r0_(0.5 * eta), amp_(1.0), corr_(0.0)
{
    if (d < 1 || d > 3) throw ParameterError("mollifier: dimension must lie in [1, 3]");
    if (m < 0 || m > 2) throw ParameterError("mollifier: moment order must lie in {0, 1, 2}");
    if (!(eta > 0.0)) throw ParameterError("mollifier: eta must be positive");
    const double area = 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
    // \int_{B(0, r0)} (1 - |x|^2/r0^2)^p |x|^{2j} dx = area r0^{d+2j} B(d/2 + j, p + 1) / 2
    auto moment = [&](int j) { return 0.5 * area * std::pow(r0_, d + 2 * j) * std::beta(0.5 * d + j, kBumpPower + 1.0); };
    amp_ = 1.0 / moment(0);
    if (m == 2) corr_ = amp_ * moment(1) / (2.0 * d);
}

double Mollifier::bump(double rho, double* d1, double* d2) const
{
    const double s = 1.0 / (r0_ * r0_);
    const double w = 1.0 - rho * s;
    if (w <= 0.0)
    {
        *d1 = *d2 = 0.0;
        return 0.0;
    }
    const double p = kBumpPower;
    const double wp2 = std::pow(w, p - 2.0);
    *d1 = -amp_ * p * wp2 * w * s;
    *d2 = amp_ * p * (p - 1.0) * wp2 * s * s;
    return amp_ * wp2 * w * w;
}

double Mollifier::operator()(const Vec& x) const
{
    const double rho = x.squaredNorm();
    double d1, d2;
    const double v = bump(rho, &d1, &d2);
    if (corr_ == 0.0) return v;
    const double lap = 4.0 * rho * d2 + 2.0 * d_ * d1;
    return v - corr_ * lap;
}

Mollifier::Table Mollifier::tabulate(int n) const
{
    if (n < 4) throw ResolutionError("mollifier: grid must have at least 4 cells per axis");
    Table t;
    t.d = d_;
    t.n = n;
    t.lo = -0.5 * eta_;
    t.h = eta_ / n;
    std::size_t total = 1;
    for (int k = 0; k < d_; ++k) total *= n;
    t.values.resize(total);
    Vec x(d_);
    for (std::size_t e = 0; e < total; ++e)
    {
        std::size_t r = e;
        for (int k = d_ - 1; k >= 0; --k)
        {
            x(k) = t.lo + (static_cast<double>(r % n) + 0.5) * t.h;
            r /= n;
        }
        t.values[e] = (*this)(x);
    }
    return t;
}

TableMoments table_moments(const Mollifier::Table& t)
{
    TableMoments m;
    m.first = Vec::Zero(t.d);
    m.second = Mat::Zero(t.d, t.d);
    const double cell = std::pow(t.h, t.d);
    Vec x(t.d);
    for (std::size_t e = 0; e < t.values.size(); ++e)
    {
        std::size_t r = e;
        for (int k = t.d - 1; k >= 0; --k)
        {
            x(k) = t.lo + (static_cast<double>(r % t.n) + 0.5) * t.h;
            r /= t.n;
        }
        const double v = t.values[e] * cell;
        m.mass += v;
        m.first += v * x;
        m.second += v * x * x.transpose();
    }
    return m;
}

}  // namespace rlab
