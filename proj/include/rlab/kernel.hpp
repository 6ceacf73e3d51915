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

#include <array>
#include <vector>

#include "rlab/types.hpp"

namespace rlab
{
/// Riesz interaction g(x) = |x|^{-s}/s (s != 0) or -log|x| (s = 0), with the
/// extension data used by the electric formulation.
struct RieszKernel
{
    int d = 1;
    double s = 0.0;
    int k = 0;           // extension co-dimension
    double gamma = 0.0;  // weight exponent |z|^gamma
    double c_ds = 1.0;   // L g = c_ds delta_0

    int D() const { return d + k; }
    bool log_case() const { return s == 0.0; }

    double g(double r) const;
    double g_r2(double r2) const;
    /// radial derivative g'(r)
    double dg(double r) const;
    double g_eta(double r, double eta) const;
    double f_eta(double r, double eta) const;

    /// Gd[j] = d^j/drho^j g(sqrt(rho)), j = 0..m.
    void radial_derivs(double rho, int m, double* Gd) const;

    /// grad^n g(X) : a^n
    double contract(int n, const Vec& X, const Vec& a) const;
    /// grad^{n+1} g(X) : (e_i (x) a^n)
    Vec contract1(int n, const Vec& X, const Vec& a) const;
    /// grad^{n+2} g(X) : (e_i (x) e_j (x) a^n)
    Mat contract2(int n, const Vec& X, const Vec& a) const;
    /// grad g(X)
    Vec gradient(const Vec& X) const;
};

RieszKernel make_kernel(int d, double s);

struct KernelValues
{
    double g = 0.0;
    double g_eta = 0.0;
    double f_eta = 0.0;
    std::vector<double> tensor;  // D^n entries, row-major
};

/// Evaluate g, g_eta, f_eta at the point and the full tensor grad^n g there.
KernelValues evaluate(const RieszKernel& K, const ExtendedPoint& p, double eta, int n);

/// Weighted nodes approximating the smeared charge on the sphere of radius
/// eta around (x, 0) in the extension space.
struct SmearNodes
{
    std::vector<Vec> points;
    std::vector<double> weights;
};
SmearNodes smear_nodes(const RieszKernel& K, const Vec& x, double eta, int M);

/// Surface integral of |omega_z|^gamma over the unit sphere of R^{d+k}
/// (k = 1), or of -d_r g over it (k = 0), by quadrature.
double normalization_constant(int d, double s);

/// \int g_{alpha_j}(p - x_j) d delta_{x_i}^{(alpha_i)}(p) as a function of the
/// distance dist = |x_i - x_j| (for i == j use dist = 0 and alpha_i = alpha_j).
double smeared_pair(const RieszKernel& K, double dist, double alpha_i, double alpha_j);

/// Mollifier at scale eta with unit mass, vanishing moments up to order m,
/// supported in B(0, eta/2).  The base profile is (1 - |x|^2/r0^2)^12 with
/// r0 = eta/2; for m = 2 the second moments are removed by subtracting a
/// multiple of its Laplacian.
class Mollifier
{
public:
    Mollifier(int d, int m, double eta);
    double operator()(const Vec& x) const;
    double eta() const { return eta_; }
    int order() const { return m_; }

    /// Values on the midpoints of an n^d grid covering [-eta/2, eta/2]^d.
    struct Table
    {
        int d = 1;
        int n = 0;
        double lo = 0.0;
        double h = 0.0;
        std::vector<double> values;
    };
    Table tabulate(int n) const;

    static constexpr double kBumpPower = 12.0;

private:
    int d_, m_;
    double eta_, r0_;
    double amp_;   // normalization of the bump
    double corr_;  // coefficient of the Laplacian correction
    double bump(double rho, double* d1, double* d2) const;
};

/// Moments of a table: mass, first moment vector, second moment matrix.
struct TableMoments
{
    double mass = 0.0;
    Vec first;
    Mat second;
};
TableMoments table_moments(const Mollifier::Table& t);

}  // namespace rlab
