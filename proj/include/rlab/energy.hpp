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

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "rlab/config.hpp"
#include "rlab/geometry.hpp"
#include "rlab/kernel.hpp"
#include "rlab/measure.hpp"

namespace rlab
{
inline constexpr double kNotEvaluated = std::numeric_limits<double>::quiet_NaN();

struct EnergyReport
{
    std::size_t N = 0;
    int d = 1;
    double s = 0.0;

    double F_N = 0.0;
    double pair_sum = 0.0;    // (1/2N^2) sum_{i != j} g(x_i - x_j)
    double cross_term = 0.0;  // (1/N) sum_i (g * mu)(x_i)
    double self_term = 0.0;   // (1/2) \int\int g dmu dmu

    // filled by energy_report(); NaN otherwise
    std::string region = "whole";
    double F_N_local = kNotEvaluated;
    double xi = kNotEvaluated;
    double log_term = kNotEvaluated;    // -#I log(lambda) / (2N^2) when s = 0, else 0
    double error_term = kNotEvaluated;  // C #I |mu|_{L^inf(hat Omega)} lambda^{d-s} / N
    double C = kNotEvaluated;
    double lambda = kNotEvaluated;
    double sup_hat = kNotEvaluated;
    std::size_t n_inside = 0;

    /// |pair - cross + self - F_N| / max(|F_N|, tiny)
    double reconstruction_error() const;
    nlohmann::json to_json() const;
};

/// (1/2N^2) sum over ordered pairs i != j.  Row sums are compensated and
/// combined in index order, so the value is identical for any thread count.
double pair_term(const Configuration& c, const RieszKernel& K, bool parallel = true);

/// Plain serial i < j loop; reference for the parallel path.
double pair_term_reference(const Configuration& c, const RieszKernel& K);

/// (g * mu)(x_i) for every point.
std::vector<double> point_potentials(const Configuration& c, const BackgroundMeasure& mu, const RieszKernel& K,
                                     bool parallel = true);

EnergyReport modulated_energy(const Configuration& c, const BackgroundMeasure& mu, const RieszKernel& K,
                              bool parallel = true);

/// \int f_eta(x - p) dmu(x)
double excess_cross(const BackgroundMeasure& mu, const RieszKernel& K, const Vec& p, double eta);

/// Truncated functional with radii alpha over Omega.  For the whole space it
/// is reduced exactly to smeared pair interactions; for bounded Omega the
/// localized electric route is used.
double truncated_functional(const Configuration& c, const BackgroundMeasure& mu, const RieszKernel& K,
                            const std::vector<double>& alpha, const Region& omega, bool parallel = true);

struct LocalEnergyOptions
{
    int panel_nodes = 16;  // Gauss nodes per panel on boundary and sphere integrals
    int de_level = 5;      // tanh-sinh level for 1D volume pieces
    int n_ang = 96;        // angular nodes for 2D polar pieces
};

struct LocalEnergy
{
    double value = 0.0;
    double flux = 0.0;       // \int_{boundary} |z|^gamma h d_n h
    double volume = 0.0;     // c (N^{-1} sum_i \int h d delta_i - \int_Omega h dmu)
    double self = 0.0;       // (1/2N^2) sum_{I} g(radius_i)
    double excess = 0.0;     // (1/N) sum_{I} \int f_{radius_i} dmu
    double error_estimate = 0.0;
};

/// Electric form over Omega x R^k with per-point radii; shared by the local
/// energy and the truncated functional on bounded sets.
LocalEnergy local_electric(const Configuration& c, const BackgroundMeasure& mu, const RieszKernel& K,
                           const std::vector<double>& radii, const Region& omega,
                           const LocalEnergyOptions& opt = {});

/// Localized modulated energy with the boundary-adapted radii.
LocalEnergy local_modulated_energy(const Configuration& c, const BackgroundMeasure& mu, const RieszKernel& K,
                                   const Region& omega, const LocalEnergyOptions& opt = {});

/// The lambda/4 neighbourhood of Omega (boxes are enlarged coordinatewise).
Region hat_region(const Region& omega, double lambda);

struct XiParts
{
    double xi = 0.0;
    double F_local = 0.0;
    double log_term = 0.0;
    double unit_error = 0.0;  // #I |mu|_{L^inf(hat Omega)} lambda^{d-s} / N
    double lambda = 0.0;
    double sup_hat = 0.0;
    std::size_t n_inside = 0;
};

/// Bracket from a known local energy value.
XiParts xi_from(double F_local, const Configuration& c, const BackgroundMeasure& mu, const RieszKernel& K,
                const Region& omega, double C);

XiParts xi_bracket(const Configuration& c, const BackgroundMeasure& mu, const RieszKernel& K, const Region& omega,
                   double C);

/// F_N plus the local energy, bracket and constants.
EnergyReport energy_report(const Configuration& c, const BackgroundMeasure& mu, const RieszKernel& K,
                           const Region& omega, double C, bool parallel = true);

/// Smallest C making every bracket nonnegative: max(0, max_i -(F_i + log_i)/unit_i).
double calibrate_xi_constant(const std::vector<XiParts>& samples);

struct ScaleSums
{
    double micro = 0.0;
    std::vector<double> meso;  // one entry per exponent a
    std::size_t micro_pairs = 0;
    std::vector<std::size_t> meso_pairs;
    std::size_t micro_points = 0;  // points with dist(x_i, boundary) >= 2 lambda
    std::size_t meso_points = 0;   // points with dist(x_i, boundary) >= 4 ell
};

/// Left-hand sides of the micro- and mesoscale interaction bounds, both
/// normalized by 1/N^2.
ScaleSums scale_sums(const Configuration& c, const RieszKernel& K, const Region& omega, double lambda,
                     double ell, const std::vector<double>& a_values);

}  // namespace rlab
