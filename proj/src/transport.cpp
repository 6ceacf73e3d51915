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

#include <Eigen/LU>
#include <cmath>

#include "rlab/measure.hpp"
#include "rlab/transport.hpp"

namespace rlab
{
namespace
{
// S(t) = exp(-1/t) for t > 0 and its first two derivatives
void smooth_step(double t, double* S)
{
    if (t <= 0.0)
    {
        S[0] = S[1] = S[2] = 0.0;
        return;
    }
    const double e = std::exp(-1.0 / t), it = 1.0 / t;
    S[0] = e;
    S[1] = e * it * it;
    S[2] = e * (it * it * it * it - 2.0 * it * it * it);
}
}  // namespace

void cutoff_profile(double z, int m, double* out)
{
    const double u = std::abs(z);
    for (int j = 0; j <= m; ++j) out[j] = 0.0;
    if (u <= 1.0)
    {
        out[0] = 1.0;
        return;
    }
    if (u >= 2.0) return;
    double A[3], B[3];
    smooth_step(2.0 - u, A);
    smooth_step(u - 1.0, B);
    A[1] = -A[1];  // d/du of S(2 - u)
    const double S0 = A[0] + B[0], S1 = A[1] + B[1], S2 = A[2] + B[2];
    out[0] = A[0] / S0;
    if (m >= 1)
    {
        const double num = A[1] * S0 - A[0] * S1;
        out[1] = (z < 0 ? -1.0 : 1.0) * num / (S0 * S0);
        if (m >= 2) out[2] = (A[2] * S0 - A[0] * S2) / (S0 * S0) - 2.0 * S1 * num / (S0 * S0 * S0);
    }
}

ExtendedField::ExtendedField(const TransportField& v, int k, double ell, bool cutoff)
    : v_(v), k_(k), ell_(ell), cutoff_(cutoff)
{
    if (k < 0 || k > 1) throw ParameterError("extension co-dimension must be 0 or 1");
    if (k == 1 && cutoff && !(ell > 0.0)) throw ParameterError("extension scale must be positive");
}

double ExtendedField::chi(double z, double* dchi) const
{
    if (k_ == 0 || !cutoff_)
    {
        if (dchi) *dchi = 0.0;
        return 1.0;
    }
    double c[2];
    cutoff_profile(z / ell_, 1, c);
    if (dchi) *dchi = c[1] / ell_;
    return c[0];
}

Vec ExtendedField::value(const Vec& X) const
{
    const int d = v_.d();
    Vec out = Vec::Zero(D());
    const double c = chi(k_ ? X[d] : 0.0, nullptr);
    if (c != 0.0) out.head(d) = c * v_.value(X.head(d));
    return out;
}

Mat ExtendedField::jacobian(const Vec& X) const
{
    const int d = v_.d();
    Mat J = Mat::Zero(D(), D());
    double dc = 0.0;
    const double c = chi(k_ ? X[d] : 0.0, &dc);
    if (c != 0.0) J.topLeftCorner(d, d) = c * v_.jacobian(X.head(d));
    if (k_ == 1 && dc != 0.0) J.row(d).head(d) = dc * v_.value(X.head(d)).transpose();
    return J;
}

Configuration push(const Configuration& c, const TransportField& v, double t)
{
    Configuration out = c;
    if (t == 0.0) return out;
    for (Vec& x : out.points) x += t * v.value(x);
    return out;
}

PushedMeasure::PushedMeasure(const BackgroundMeasure& mu, const TransportField& v, double t) : mu_(&mu), v_(v), t_(t)
{
    if (t != 0.0 && std::abs(t) * v.sup_norm(1) >= 1.0)
        throw ParameterError("push: |t| sup|grad v| must be below 1 for the map to be invertible");
}

double PushedMeasure::jacobian_det(const Vec& x) const
{
    const int d = v_.d();
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(d, d) + t_ * Eigen::MatrixXd(v_.jacobian(x));
    return M.determinant();
}

Vec PushedMeasure::preimage(const Vec& y) const
{
    if (t_ == 0.0) return y;
    const int d = v_.d();
    Vec x = y;
    for (int it = 0; it < 60; ++it)
    {
        const Vec res = x + t_ * v_.value(x) - y;
        if (res.norm() <= 1e-15 * (1.0 + y.norm())) break;
        Eigen::MatrixXd Dphi = Eigen::MatrixXd::Identity(d, d) + t_ * Eigen::MatrixXd(v_.jacobian(x)).transpose();
        x -= Vec(Dphi.partialPivLu().solve(Eigen::VectorXd(res)));
    }
    return x;
}

double PushedMeasure::density(const Vec& y) const
{
    const Vec x = preimage(y);
    const double rho = mu_->density(x);
    return rho == 0.0 ? 0.0 : rho / std::abs(jacobian_det(x));
}

double PushedMeasure::integrate(const std::function<double(const Vec&)>& phi, int n_ang, int de_level) const
{
    const VolumeRule vr = mu_->outer_rule(n_ang, de_level);
    double acc = 0.0;
    for (std::size_t q = 0; q < vr.nodes.size(); ++q) acc += vr.weights[q] * phi(vr.nodes[q] + t_ * v_.value(vr.nodes[q]));
    return acc;
}

}  // namespace rlab
