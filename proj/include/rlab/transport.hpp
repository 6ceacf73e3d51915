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

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rlab/config.hpp"
#include "rlab/geometry.hpp"
#include "rlab/types.hpp"

namespace rlab
{
class BackgroundMeasure;

/// Vector field v on R^d with exact derivatives up to order().
///
/// Derivative tensors are indexed as T[a_1 .. a_k][b] = d_{a_1} .. d_{a_k} v^b,
/// flattened row-major (component index last).  jacobian(x)(a, b) = d_a v^b.
class TransportField
{
public:
    enum class Family
    {
        Affine,
        Dilation,
        Rotation,
        BumpShear,
        User
    };

    /// v(x) = A x + b
    static TransportField affine(const Mat& A, const Vec& b);
    /// v(x) = x
    static TransportField dilation(int d);
    /// v(x) = J (x - center) with J antisymmetric
    static TransportField rotation(const Mat& J, const Vec& center);
    /// v(x) = psi(|x - x0|^2 / ell^2) e, psi(u) = (1 - u)^8 on [0, 1), 0 beyond
    static TransportField bump_shear(const Vec& x0, double ell, const Vec& e);
    /// Values and (optionally) the Jacobian.  sup norms are grid maxima over
    /// the box [lo, hi] and are flagged approximate.
    static TransportField user(int d, std::function<Vec(const Vec&)> value,
                               std::function<Mat(const Vec&)> jacobian, const Vec& lo, const Vec& hi);

    static constexpr int kBumpPower = 8;
    static constexpr int kMaxOrder = 6;

    int d() const { return d_; }
    Family family() const { return family_; }
    std::string family_name() const;
    int order() const { return order_; }
    /// infinite unless the field is compactly supported
    double support_radius() const { return ell_; }
    /// centre of the support ball (bump) or of the rotation
    const Vec& center() const { return x0_; }

    Vec value(const Vec& x) const;
    Mat jacobian(const Vec& x) const;
    /// full tensor d^k v at x, d^{k+1} entries
    std::vector<double> derivative(int k, const Vec& x) const;
    /// d^k (v . b) : a^k
    double directional(int k, const Vec& x, const Vec& a, const Vec& b) const;

    /// sup_x sup_{|a| = |b| = 1} |d^k (v . b) : a^k|; capability error for k > order().
    double sup_norm(int k) const;
    bool sup_norm_exact() const { return family_ != Family::User; }

private:
    int d_ = 1;
    Family family_ = Family::Affine;
    int order_ = kMaxOrder;
    double ell_ = 0.0;
    Mat A_;
    Vec b_, x0_, e_;
    Vec lo_, hi_;
    std::function<Vec(const Vec&)> user_value_;
    std::function<Mat(const Vec&)> user_jac_;

    /// derivatives F^(j)(u) of F(u) = psi(u / ell^2), j = 0..m
    void bump_derivs(double u, int m, double* F) const;
};

/// Smooth cutoff: 1 on [-1, 1], 0 outside [-2, 2], built from exp(-1/t).
/// out[j] = chi^(j)(z) for j = 0..m, m <= 2.
void cutoff_profile(double z, int m, double* out);

/// Extension of v to R^{d+k}: v~(x, z) = chi(z / ell) (v(x), 0).  For k = 0
/// it is v itself.  With cutoff = false the extension is (v(x), 0) for all z.
class ExtendedField
{
public:
    ExtendedField(const TransportField& v, int k, double ell, bool cutoff = true);

    int D() const { return v_.d() + k_; }
    const TransportField& base() const { return v_; }
    double ell() const { return ell_; }
    bool cutoff() const { return cutoff_; }

    Vec value(const Vec& X) const;
    /// (a, b) -> d_a v~^b over the D extended coordinates
    Mat jacobian(const Vec& X) const;

private:
    TransportField v_;
    int k_;
    double ell_;
    bool cutoff_;
    double chi(double z, double* dchi) const;
};

/// x_i -> x_i + t v(x_i)
Configuration push(const Configuration& c, const TransportField& v, double t);

/// Density of (I + t v)_# mu at y, found by inverting y = x + t v(x) with
/// Newton's method.  Throws ParameterError when |t| sup|grad v| >= 1.
class PushedMeasure
{
public:
    PushedMeasure(const BackgroundMeasure& mu, const TransportField& v, double t);
    double density(const Vec& y) const;
    /// preimage x with x + t v(x) = y
    Vec preimage(const Vec& y) const;
    /// det(I + t grad v(x))
    double jacobian_det(const Vec& x) const;
    /// \int phi d(pushed mu) = \int phi(x + t v(x)) dmu(x)
    double integrate(const std::function<double(const Vec&)>& phi, int n_ang = 32, int de_level = 4) const;

private:
    const BackgroundMeasure* mu_;
    TransportField v_;
    double t_;
};

}  // namespace rlab
