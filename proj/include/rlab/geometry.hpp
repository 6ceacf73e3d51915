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
#include <optional>
#include <utility>
#include <vector>

#include "rlab/types.hpp"

namespace rlab
{
/// Whole space, a closed ball or an axis-aligned box in R^d.
struct Region
{
    enum class Kind
    {
        Whole,
        Ball,
        Box
    };
    Kind kind = Kind::Whole;
    int d = 1;
    Vec center;
    double radius = 0.0;
    Vec lo, hi;

    static Region whole(int d);
    static Region ball(const Vec& c, double r);
    static Region box(const Vec& lo, const Vec& hi);

    bool is_whole() const { return kind == Kind::Whole; }
    bool contains(const Vec& x, double slack = 0.0) const;
    /// distance from x to the boundary (infinite for the whole space)
    double dist_to_boundary(const Vec& x) const;
    /// distance from x to the set (0 inside)
    double distance_to(const Vec& x) const;
    /// {t >= 0 : p + t w in the region}; empty when the ray misses
    std::optional<std::pair<double, double>> ray(const Vec& p, const Vec& w) const;
    double volume() const;
};

/// Distance between two regions (0 when they intersect).
double region_distance(const Region& a, const Region& b);

struct PolarOptions
{
    int n_ang = 48;    // angular nodes per panel
    int n_rad = 24;    // radial Gauss-Jacobi nodes
    int de_level = 4;  // tanh-sinh level for cones and 1D pieces
};

/// Called once per angular node: direction, angular weight (signed for the
/// edge fan of a box) and the radial interval [t0, t1] of the ray inside S.
using AngularVisitor = std::function<void(const Vec& w, double weight, double t0, double t1)>;
void angular_nodes(const Region& S, const Vec& p, const PolarOptions& opt, const AngularVisitor& visit);

/// \int_S F(y) dy, where F(p + r w) r^{d-1} = r^beta phi(r, w) and phi is
/// smooth and defined on the whole ray (not just inside S).
double polar_integrate(const Region& S, const Vec& p, double beta,
                       const std::function<double(double, const Vec&)>& phi, const PolarOptions& opt);

/// Same but phi returns a vector of fixed size m.
Eigen::VectorXd polar_integrate_vec(const Region& S, const Vec& p, double beta, int m,
                                    const std::function<void(double, const Vec&, Eigen::VectorXd&)>& phi,
                                    const PolarOptions& opt);

/// \int_S F(|y - p|) dy given A(R) = \int_0^R F(r) r^{d-1} dr.
double polar_radial(const Region& S, const Vec& p, const std::function<double(double)>& A,
                    const PolarOptions& opt);

/// \int_S w(y) B'(|y-p|)-type vector integrals: sum of weight * w * (B(t1) - B(t0)).
/// B may carry an arbitrary additive constant when p is interior.
Vec polar_radial_dir(const Region& S, const Vec& p, const std::function<double(double)>& B,
                     const PolarOptions& opt);

/// Nodes and weights for \int_S F(y) dy with F possibly singular on dS.
struct VolumeRule
{
    std::vector<Vec> nodes;
    std::vector<double> weights;
};
VolumeRule volume_rule(const Region& S, int n_ang, int de_level);

}  // namespace rlab
