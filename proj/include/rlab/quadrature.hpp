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
#include <vector>

namespace rlab
{
/// Nodes and weights of a one-dimensional rule.
struct Rule
{
    std::vector<double> x;
    std::vector<double> w;
    std::size_t size() const { return x.size(); }
};

/// Gauss-Jacobi rule on [-1,1] for the weight (1-x)^alpha (1+x)^beta.
/// Built with Golub-Welsch; results are cached per (n, alpha, beta).
const Rule& gauss_jacobi(int n, double alpha, double beta);

inline const Rule& gauss_legendre(int n) { return gauss_jacobi(n, 0.0, 0.0); }

/// Rule on [0,1] for the weight t^a (1-t)^b.
Rule jacobi01(int n, double a, double b);

/// Rule on [a,b] for the weight (t-a)^e, scaled so that the weight is
/// integrated exactly in absolute units.
Rule left_singular(int n, double a, double b, double e);

/// Plain Gauss-Legendre mapped to [a,b].
Rule legendre_on(int n, double a, double b);

/// Fixed tanh-sinh (double exponential) rule on [0,1].  The distances of each
/// node to both endpoints are stored separately so that integrands with
/// endpoint singularities keep full relative precision.
struct DERule
{
    std::vector<double> t;   // node position in (0,1)
    std::vector<double> lo;  // t - 0, computed without cancellation
    std::vector<double> hi;  // 1 - t, computed without cancellation
    std::vector<double> w;
};
const DERule& tanh_sinh(int level);

/// Integrate f over [a,b] with the tanh-sinh rule.  f receives the node,
/// its distance to a and its distance to b.
double de_integrate(const std::function<double(double, double, double)>& f, double a, double b,
                    int level = 6);

/// Equally spaced periodic rule on [0, 2pi).
Rule trapezoid_periodic(int n);

/// Panels on [a,b] refined geometrically toward the left endpoint a.
/// Used when an integrand is nearly singular just left of a.
std::vector<double> graded_breaks(double a, double b, double first, double ratio = 2.0);

/// Composite Gauss-Legendre over consecutive breakpoints.
Rule composite_legendre(const std::vector<double>& breaks, int n_per_panel);

/// \int_a^b f(psi) sin(psi)^p dpsi for 0 <= a < b <= pi and p > -1.
/// Uses Jacobi panels at 0 and pi and geometric grading toward near-singular
/// endpoints.
double integrate_sin_power(const std::function<double(double)>& f, double a, double b, double p,
                           int n_per_panel = 20);

}  // namespace rlab
