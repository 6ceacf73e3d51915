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

#include <Eigen/SVD>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>

#include "rlab/radial.hpp"
#include "rlab/transport.hpp"

namespace rlab
{
namespace
{
double largest_singular_value(const Mat& A)
{
    if (A.size() == 0) return 0.0;
    Eigen::MatrixXd M = A;
    return Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues()(0);
}

// psi(u) = (1 - u)^p and its derivatives
void psi_derivs(double u, int m, double* out)
{
    constexpr int p = TransportField::kBumpPower;
    const double w = 1.0 - u;
    for (int j = 0; j <= m; ++j)
    {
        if (u >= 1.0 || j > p)
        {
            out[j] = 0.0;
            continue;
        }
        double c = 1.0;
        for (int q = 0; q < j; ++q) c *= -(p - q);
        for (int q = j; q < p; ++q) c *= w;
        out[j] = c;
    }
}

// max over r in [0,1], theta in [0,pi] of |d^k psi(|x|^2) : a^k| with
// |a| = 1, a at angle theta to x.  The value depends on (r, theta) only.
double bump_shape_constant(int k)
{
    auto f = [k](double r, double th) {
        double F[16];
        psi_derivs(r * r, k, F);
        return std::abs(radial::contract(k, F, r * std::cos(th), 1.0));
    };
    int nr = 400, nt = 181;
    double best = 0.0, br = 0.0, bt = 0.0;
    for (int i = 0; i <= nr; ++i)
        for (int j = 0; j <= nt; ++j)
        {
            const double r = double(i) / nr, th = std::numbers::pi * j / nt;
            const double v = f(r, th);
            if (v > best) best = v, br = r, bt = th;
        }
    // zoom around the grid maximum
    double hr = 1.0 / nr, ht = std::numbers::pi / nt;
    for (int round = 0; round < 12; ++round)
    {
        double r0 = br, t0 = bt;
        for (int i = -8; i <= 8; ++i)
            for (int j = -8; j <= 8; ++j)
            {
                const double r = std::clamp(r0 + hr * i / 4.0, 0.0, 1.0);
                const double th = std::clamp(t0 + ht * j / 4.0, 0.0, std::numbers::pi);
                const double v = f(r, th);
                if (v > best) best = v, br = r, bt = th;
            }
        hr /= 4.0;
        ht /= 4.0;
    }
    return best;
}
}  // namespace

TransportField TransportField::affine(const Mat& A, const Vec& b)
{
    if (A.rows() != A.cols() || A.rows() != b.size()) throw ParameterError("affine field: A must be d x d and b of size d");
    TransportField v;
    v.d_ = static_cast<int>(b.size());
    v.family_ = Family::Affine;
    v.A_ = A;
    v.b_ = b;
    v.ell_ = std::numeric_limits<double>::infinity();
    v.x0_ = Vec::Zero(v.d_);
    return v;
}

TransportField TransportField::dilation(int d)
{
    TransportField v = affine(Mat::Identity(d, d), Vec::Zero(d));
    v.family_ = Family::Dilation;
    return v;
}

TransportField TransportField::rotation(const Mat& J, const Vec& center)
{
    if ((J + J.transpose()).norm() > 1e-14 * std::max(1.0, J.norm()))
        throw ParameterError("rotation field: J must be antisymmetric");
    TransportField v = affine(J, -(J * center));
    v.family_ = Family::Rotation;
    v.x0_ = center;
    return v;
}

TransportField TransportField::bump_shear(const Vec& x0, double ell, const Vec& e)
{
    if (!(ell > 0.0)) throw ParameterError("bump shear: ell must be positive");
    if (x0.size() != e.size()) throw ParameterError("bump shear: x0 and e differ in dimension");
    TransportField v;
    v.d_ = static_cast<int>(x0.size());
    v.family_ = Family::BumpShear;
    v.x0_ = x0;
    v.ell_ = ell;
    v.e_ = e;
    return v;
}

TransportField TransportField::user(int d, std::function<Vec(const Vec&)> value, std::function<Mat(const Vec&)> jacobian,
                                    const Vec& lo, const Vec& hi)
{
    TransportField v;
    v.d_ = d;
    v.family_ = Family::User;
    v.user_value_ = std::move(value);
    v.user_jac_ = std::move(jacobian);
    v.order_ = v.user_jac_ ? 1 : 0;
    v.ell_ = std::numeric_limits<double>::infinity();
    v.x0_ = Vec::Zero(d);
    v.lo_ = lo;
    v.hi_ = hi;
    return v;
}

std::string TransportField::family_name() const
{
    switch (family_)
    {
    case Family::Affine: return "affine";
    case Family::Dilation: return "dilation";
    case Family::Rotation: return "rotation";
    case Family::BumpShear: return "bump-shear";
    case Family::User: return "user";
    }
    return "?";
}

void TransportField::bump_derivs(double u, int m, double* F) const
{
    const double s2 = 1.0 / (ell_ * ell_);
    psi_derivs(u * s2, m, F);
    double sc = 1.0;
    for (int j = 0; j <= m; ++j, sc *= s2) F[j] *= sc;
}

Vec TransportField::value(const Vec& x) const
{
    switch (family_)
    {
    case Family::BumpShear:
    {
        double F[1];
        bump_derivs((x - x0_).squaredNorm(), 0, F);
        return F[0] * e_;
    }
    case Family::User: return user_value_(x);
    default: return A_ * x + b_;
    }
}

Mat TransportField::jacobian(const Vec& x) const
{
    switch (family_)
    {
    case Family::BumpShear:
    {
        double F[2];
        const Vec X = x - x0_;
        bump_derivs(X.squaredNorm(), 1, F);
        return (2.0 * F[1]) * X * e_.transpose();
    }
    case Family::User:
        if (!user_jac_) throw CapabilityError("user field has no derivative oracle");
        return user_jac_(x);
    default: return A_.transpose();
    }
}

std::vector<double> TransportField::derivative(int k, const Vec& x) const
{
    if (k > order_) throw CapabilityError("derivative order " + std::to_string(k) + " exceeds declared order");
    std::size_t n = 1;
    for (int j = 0; j < k; ++j) n *= d_;
    std::vector<double> T(n * d_, 0.0);
    if (k == 0)
    {
        const Vec v = value(x);
        for (int b = 0; b < d_; ++b) T[b] = v[b];
        return T;
    }
    if (family_ == Family::BumpShear)
    {
        double F[16];
        const Vec X = x - x0_;
        bump_derivs(X.squaredNorm(), k, F);
        const std::vector<double> S = radial::full_tensor(k, F, X);
        for (std::size_t i = 0; i < n; ++i)
            for (int b = 0; b < d_; ++b) T[i * d_ + b] = S[i] * e_[b];
        return T;
    }
    if (k == 1)
    {
        const Mat J = jacobian(x);
        for (int a = 0; a < d_; ++a)
            for (int b = 0; b < d_; ++b) T[a * d_ + b] = J(a, b);
    }
    return T;
}

double TransportField::directional(int k, const Vec& x, const Vec& a, const Vec& b) const
{
    if (k > order_) throw CapabilityError("derivative order " + std::to_string(k) + " exceeds declared order");
    if (k == 0) return value(x).dot(b);
    if (family_ == Family::BumpShear)
    {
        double F[16];
        const Vec X = x - x0_;
        bump_derivs(X.squaredNorm(), k, F);
        return e_.dot(b) * radial::contract(k, F, X.dot(a), a.squaredNorm());
    }
    if (k == 1) return a.dot(jacobian(x) * b);
    return 0.0;
}

double TransportField::sup_norm(int k) const
{
    if (k < 0 || k > order_) throw CapabilityError("sup norm of order " + std::to_string(k) + " not available");
    switch (family_)
    {
    case Family::BumpShear:
    {
        static std::once_flag once;
        static std::array<double, kMaxOrder + 1> table{};
        std::call_once(once, [] {
            for (int j = 0; j <= kMaxOrder; ++j) table[j] = bump_shape_constant(j);
        });
        return e_.norm() * table[k] * std::pow(ell_, -k);
    }
    case Family::User:
    {
        // grid maximum, approximate
        const int n = d_ == 1 ? 4096 : (d_ == 2 ? 128 : 32);
        double best = 0.0;
        std::vector<int> idx(d_, 0);
        Vec x(d_);
        while (true)
        {
            for (int a = 0; a < d_; ++a) x[a] = lo_[a] + (hi_[a] - lo_[a]) * idx[a] / double(n);
            best = std::max(best, k == 0 ? value(x).norm() : largest_singular_value(jacobian(x)));
            int a = 0;
            while (a < d_ && ++idx[a] > n) idx[a++] = 0;
            if (a == d_) break;
        }
        return best;
    }
    default:
        if (k == 0)
        {
            if (A_.norm() == 0.0) return b_.norm();
            return std::numeric_limits<double>::infinity();
        }
        return k == 1 ? largest_singular_value(A_) : 0.0;
    }
}

}  // namespace rlab
