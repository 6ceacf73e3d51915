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

#include <string>
#include <vector>

#include "rlab/geometry.hpp"
#include "rlab/types.hpp"

namespace rlab
{
class BackgroundMeasure;

/// N distinct points in R^d.
struct Configuration
{
    int d = 1;
    std::vector<Vec> points;

    std::size_t size() const { return points.size(); }
    const Vec& operator[](std::size_t i) const { return points[i]; }
};

/// Throws ConfigurationError on mismatched dimensions or coincident points.
void validate(const Configuration& c);

/// Smallest pairwise distance (infinity for N < 2).
double min_gap(const Configuration& c);

/// Distance from each point to its nearest neighbour.  Brute force up to
/// 20000 points, cell hashing above.
std::vector<double> nearest_distances(const Configuration& c);

/// lambda = (N sup)^{-1/d}.
double microscale(std::size_t N, double sup_density, int d);

/// r_i = min(nearest distance, lambda) / 4 with lambda from the global sup of mu.
std::vector<double> nn_radii(const Configuration& c, const BackgroundMeasure& mu);

struct LocalScales
{
    double lambda = 0.0;
    std::vector<double> rtilde;
    std::vector<std::size_t> inside;  // indices of points in Omega
};

/// Localized truncation radii for Omega.  lambda uses the sup of mu over
/// Omega, falling back to the global sup when mu vanishes on Omega.
LocalScales local_scales(const Configuration& c, const BackgroundMeasure& mu, const Region& omega,
                         double slack = 1e-12);

/// Interpolated radius for a point at distance dist from the boundary.
double rtilde_formula(double dist, double nn_min, double lambda, double slack = 1e-12);

Configuration load_configuration_csv(const std::string& path);
void save_configuration_csv(const Configuration& c, const std::string& path);

/// Equispaced points (cell midpoints) filling [a, b].
Configuration equispaced_interval(std::size_t N, double a, double b);
/// Square lattice of n x n cell midpoints in a box.
Configuration square_lattice(std::size_t n, const Vec& lo, const Vec& hi);

}  // namespace rlab
