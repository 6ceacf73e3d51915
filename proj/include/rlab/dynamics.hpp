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
#include <string>
#include <vector>

#include <json.hpp>

#include "rlab/config.hpp"
#include "rlab/kernel.hpp"
#include "rlab/measure.hpp"
#include "rlab/transport.hpp"

namespace rlab
{
/// x_i' = (1/N) sum_{j != i} M grad g(x_i - x_j) - V(x_i)
struct FlowSpec
{
    RieszKernel kernel;
    Mat M;                      // M xi . xi <= 0
    TransportField V;           // external field, with derivative oracle
    double dt = 1e-3;
    double T = 1.0;
    int save_every = 1;         // steps between snapshots
    std::string scheme = "rk4";
    double guard = 0.0;         // abort when the min gap drops below this (0 = off)
    bool parallel = true;

    /// Throws ParameterError when M fails the repulsivity test or sizes disagree.
    void validate() const;
    /// scalar potential of V (V = grad Phi) when V is affine with symmetric linear part
    bool has_potential() const;
    double potential(const Vec& x) const;
};

/// M xi . xi <= tol |M| |xi|^2 for all xi, via the symmetric part.
bool repulsive(const Mat& M, double tol = 1e-14);

/// 1e-3 lambda with lambda = (N |mu|_inf)^{-1/d}
double collision_guard(std::size_t N, double sup_density, int d, double factor = 1e-3);

struct CollisionError : std::runtime_error
{
    CollisionError(const std::string& what, double t, double gap, std::size_t i, std::size_t j)
        : std::runtime_error(what), time(t), min_gap(gap), first(i), second(j)
    {
    }
    double time, min_gap;
    std::size_t first, second;
};

struct Trajectory
{
    std::vector<double> times;
    std::vector<Configuration> snapshots;
    std::vector<double> min_gaps;  // at each snapshot
    std::size_t steps = 0;
    /// rows "t,i,x1,...,xd"
    void save_csv(const std::string& path) const;
};

/// Velocities of all particles.  Each row is summed over j in index order, so
/// the result does not depend on the thread count.
std::vector<Vec> flow_velocity(const Configuration& c, const FlowSpec& flow);

/// Classical RK4 with fixed step.  Throws CollisionError when the guard
/// triggers and ResolutionError on a non-finite velocity.  observer (if set)
/// is called after every step with (step, t, configuration).
Trajectory integrate(const Configuration& x0, const FlowSpec& flow,
                     const std::function<void(std::size_t, double, const Configuration&)>& observer = {});

/// (1/2N^2) sum_{i != j} g(x_i - x_j) + (1/N) sum_i Phi(x_i); nonincreasing
/// along gradient flows.
double flow_energy(const Configuration& c, const FlowSpec& flow);

/// Closed-form solutions of the limiting equation with their flows.
class ReferenceSolution
{
public:
    enum class Kind
    {
        StationaryEquilibrium,
        SelfSimilarDisk
    };
    /// d = 1, s = 0: semicircle with V = x/2; d = 2, 3 Coulomb: uniform unit ball with V = x.  M = -I.
    static ReferenceSolution stationary(const RieszKernel& K);
    /// d = 2 Coulomb, V = 0, M = -alpha I + beta J: uniform disk of radius sqrt(R0^2 + 2 alpha t).
    static ReferenceSolution self_similar_disk(const RieszKernel& K, double R0 = 1.0, double alpha = 1.0,
                                               double beta = 0.0);

    Kind kind() const { return kind_; }
    std::string kind_name() const;
    const RieszKernel& kernel() const { return K_; }
    const Mat& M() const { return M_; }
    const TransportField& V() const { return V_; }

    BackgroundMeasure measure(double t) const;
    double radius(double t) const;
    double density(double t, const Vec& x) const { return measure(t).density(x); }
    double sup_density(double t) const;
    /// u^t = -M grad g * mu^t + V
    Vec velocity(double t, const Vec& x) const;
    Mat velocity_jacobian(double t, const Vec& x) const;
    /// sup |grad u^t| (operator norm) over the support, or over R^d
    double grad_u_sup(double t, bool support_only) const;
    /// d_t rho - div((V - M grad g * mu) rho) at an interior point, by finite differences
    double pde_residual(double t, const Vec& x, double h = 1e-4) const;

    /// flow whose mean-field limit this is
    FlowSpec flow(double dt, double T) const;

private:
    Kind kind_ = Kind::StationaryEquilibrium;
    RieszKernel K_;
    Mat M_;
    TransportField V_ = TransportField::dilation(1);
    double R0_ = 1.0, alpha_ = 1.0;
};

struct MeRow
{
    double t = 0.0;
    double F_N = 0.0;
    double log_term = 0.0;    // log(N |mu^t|) / (2 N d), s = 0 only
    double error_term = 0.0;  // C |mu^t|^{s/d} N^{s/d - 1}
    double corrected = 0.0;
    double envelope = 0.0;
    double grad_u_int = 0.0;         // \int_0^t sup_supp |grad u|
    double grad_u_int_global = 0.0;  // same with the sup over R^d
};

struct MeSeries
{
    std::size_t N = 0;
    double C = 0.0;
    std::vector<MeRow> rows;
    /// corrected <= envelope (1 + rel_tol) + abs_tol at every time
    bool inside_envelope(double rel_tol = 1e-12, double abs_tol = 0.0) const;
    void save_csv(const std::string& path) const;
    nlohmann::json to_json() const;
};

/// Modulated energy of the trajectory against the reference at its save
/// times, the corrected quantity and the Gronwall envelope
///   e^{C \int_0^t |grad u|} (F_N^0 + sup_{tau <= t} (log term + error term)).
/// The envelope uses the sup of |grad u| over the support; the whole-space
/// integral is reported alongside.
MeSeries me_timeseries(const Trajectory& traj, const ReferenceSolution& ref, double C);

}  // namespace rlab
