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
#include <string>
#include <vector>

#include <json.hpp>

#include "rlab/config.hpp"
#include "rlab/geometry.hpp"
#include "rlab/kernel.hpp"
#include "rlab/measure.hpp"
#include "rlab/transport.hpp"

namespace rlab
{
struct TransportFormOptions
{
    PolarOptions inner{32, 12, 4};  // polar rule around each particle / outer node
    int outer_n_ang = 16;           // outer rule of mu for the measure-measure term
    int outer_de_level = 3;
    bool parallel = true;
    /// measure-measure term from an earlier call with the same (n, mu, K, v); skips its quadrature
    std::optional<double> measure_term;
};

/// \int\int_{off-diagonal} grad^n g(x - y) : (v(x) - v(y))^n d(mu_N - mu)^2(x, y)
///   = pp - 2 pm + mm
struct TransportForm
{
    int n = 1;
    double value = 0.0;
    double pp = 0.0;  // (1/N^2) sum_{i != j}
    double pm = 0.0;  // (1/N) sum_i \int . dmu
    double mm = 0.0;  // \int\int . dmu dmu
    nlohmann::json to_json() const;
};

TransportForm transport_form(int n, const Configuration& c, const BackgroundMeasure& mu, const RieszKernel& K,
                             const TransportField& v, const TransportFormOptions& opt = {});

/// F_N((I + tv)X_N, (I + tv)#mu) - F_N(X_N, mu), written as integrals over the
/// original points and measure so that the same nodes serve every t.
double energy_increment(double t, const Configuration& c, const BackgroundMeasure& mu, const RieszKernel& K,
                        const TransportField& v, const TransportFormOptions& opt = {});

struct FdDerivative
{
    double value = 0.0;   // Richardson-extrapolated n-th derivative of F_N along the flow
    double coarse = 0.0;  // central difference at step h
    double h = 0.0;
};
/// n <= 3.  h = 0 picks 1e-3 / sup|grad v|.
FdDerivative fd_energy_derivative(int n, const Configuration& c, const BackgroundMeasure& mu, const RieszKernel& K,
                                  const TransportField& v, double h = 0.0, const TransportFormOptions& opt = {});
/// Orders 1..max_n from one set of energy evaluations; entry n - 1 is order n.
std::vector<FdDerivative> fd_energy_derivatives(int max_n, const Configuration& c, const BackgroundMeasure& mu,
                                                const RieszKernel& K, const TransportField& v, double h = 0.0,
                                                const TransportFormOptions& opt = {});

/// Signed source on R^d: weighted atoms, or a sum of smooth compactly supported
/// bumps m (1 - |y - c|^2/R^2)^6 / Z with Z the bump mass.
class SignedSource
{
public:
    static constexpr int kBumpPower = 6;

    static SignedSource atoms(int d, std::vector<Vec> points, std::vector<double> weights);
    /// mu_N - mu with mu replaced by its outer quadrature nodes.
    static SignedSource empirical_minus(const Configuration& c, const BackgroundMeasure& mu, int n_ang = 24,
                                        int de_level = 4);
    static SignedSource bumps(int d, std::vector<Vec> centers, std::vector<double> radii, std::vector<double> masses);

    int d() const { return d_; }
    bool smooth() const { return smooth_; }
    double total_weight() const;
    bool zero_mean(double tol = 1e-12) const { return std::abs(total_weight()) <= tol; }
    SignedSource scaled(double a) const;

    const std::vector<Vec>& points() const { return pts_; }
    const std::vector<double>& weights() const { return wts_; }
    const std::vector<double>& radii() const { return radii_; }

    double density(const Vec& y) const;
    /// density of bump b alone
    double bump_density(std::size_t b, const Vec& y) const;
    /// distance from x to the union of the bump supports (to the nearest atom for atoms)
    double distance_to_support(const Vec& x) const;

    /// h^f and grad h^f for the Coulomb kernel in d >= 2 (closed form by Newton's theorem); bumps only
    double coulomb_potential(const RieszKernel& K, const Vec& x) const;
    Vec coulomb_gradient(const RieszKernel& K, const Vec& x) const;

    /// \int F df for smooth F (bumps: per-ball volume rules; atoms: weighted sum)
    double integrate(const std::function<double(const Vec&)>& F, int n_ang = 32, int de_level = 5) const;

private:
    int d_ = 1;
    bool smooth_ = false;
    std::vector<Vec> pts_;       // atoms or bump centres
    std::vector<double> wts_;    // atom weights or bump masses
    std::vector<double> radii_;  // bump radii
    std::vector<double> norm_;   // bump masses of the unnormalized profiles
};

struct CommutatorOptions
{
    PolarOptions polar{64, 24, 4};
    int radial_panels = 4;      // panels per ray when the integrand is smooth
    double far_factor = 2.0;    // bumps farther than this many radii use the far rule
    PolarOptions far{24, 12, 4};
};

/// kappa_t^(n), nu_t^(n) and mu_t^(n) at p in R^{d+k}:
///   \int d^j grad^n g(p - y - t v(y)) : (v~(p) - v~(y))^n df(y),  j = 0, 1, 2.
/// For smooth sources the evaluation is by polar quadrature around p; at t = 0
/// and z = 0 the kernel singularity is integrable for kappa and nu, otherwise p
/// must stay away from the support.
double kappa_eval(int n, const SignedSource& f, const ExtendedField& vt, const RieszKernel& K, const ExtendedPoint& p,
                  double t = 0.0, const CommutatorOptions& opt = {});
Vec nu_eval(int n, const SignedSource& f, const ExtendedField& vt, const RieszKernel& K, const ExtendedPoint& p,
            double t = 0.0, const CommutatorOptions& opt = {});
Mat mu_eval(int n, const SignedSource& f, const ExtendedField& vt, const RieszKernel& K, const ExtendedPoint& p,
            double t = 0.0, const CommutatorOptions& opt = {});

struct ResidualRow
{
    std::size_t point = 0;
    int order = 0;
    std::string identity;  // "nu", "mu", "hierarchy", "hierarchy-literal"
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;
};

struct ResidualTable
{
    std::vector<ResidualRow> rows;
    /// max |residual| / max |rhs| over rows of one identity
    double max_relative(const std::string& identity) const;
    void save_csv(const std::string& path) const;
};

/// Residuals of the nu and mu recursions and the transport hierarchy for
/// orders 1..n at the given points.  h = 0 picks 1e-3 times the distance to
/// the support (spatial) and 1e-3 / sup|grad v| (time).
ResidualTable recursion_residuals(int n, const SignedSource& f, const ExtendedField& vt, const RieszKernel& K,
                                  const std::vector<ExtendedPoint>& points, double h = 0.0,
                                  const CommutatorOptions& opt = {});

/// Quadrature for \int_{U} |z|^gamma F over U = Omega x R^k (Omega a region of
/// R^d, whole space allowed).  Unbounded directions use a mapped tail.
struct WeightedRuleOptions
{
    int n_ang = 48;
    int n_rad = 16;      // Gauss nodes per radial panel
    int de_level = 4;    // volume rule level for bounded Omega
    int z_panels = 12;   // geometric panels in z
    double r_core = 0.0; // radius after which the tail map starts (0 = automatic)
    Vec center;          // centre of the polar rule for the whole space
};
VolumeRule weighted_rule(const RieszKernel& K, const Region& omega, const WeightedRuleOptions& opt = {});

struct Seminorm
{
    double value = 0.0;
    double refined = 0.0;  // same with doubled resolution
    double rel_change() const { return value == 0.0 ? 0.0 : std::abs(refined - value) / std::abs(value); }
};
/// (\int_{Omega x R^k} |z|^gamma |grad|^2)^{1/2}
Seminorm l2gamma_seminorm(const std::function<Vec(const Vec&)>& grad, const RieszKernel& K, const Region& omega,
                          const WeightedRuleOptions& opt = {});

struct FirstOrderIdentities
{
    double stress_lhs = 0.0;    // \int\int (v(x) - v(y)) . grad g(x - y) df dw
    double stress_rhs = 0.0;    // (1/c) \int grad v : [grad h^f, grad h^w]
    double pde_residual = 0.0;  // max |L kappa^(1) - div form| / max |div form| on the grid
    double pde_scale = 0.0;
    std::size_t grid_points = 0;
    nlohmann::json to_json() const;
};
struct IdentityGrid
{
    Vec lo, hi;       // box for the PDE residual grid
    int n = 6;        // points per side
    double h = 0.0;   // finite-difference step (0 = 1e-2 of the box side)
    int n_ang = 64;   // outer rules for the stress integrals
    int de_level = 5;
};
/// Coulomb kernel, smooth bump sources, k = 0.
FirstOrderIdentities first_order_identities(const SignedSource& f, const SignedSource& w, const TransportField& v,
                                            const RieszKernel& K, const IdentityGrid& grid,
                                            const CommutatorOptions& opt = {});

/// ||grad kappa^(1),f||_{L^2(R^d)} / (sup|grad v| ||grad h^f||_{L^2(supp grad v)}) for
/// smooth sources and a compactly supported v, Coulomb kernel with k = 0.
struct CommutatorRatio
{
    double numerator = 0.0;
    double denominator = 0.0;
    double ratio = 0.0;
};
CommutatorRatio commutator_ratio(const SignedSource& f, const TransportField& v, const RieszKernel& K,
                                 const WeightedRuleOptions& outer = {}, const CommutatorOptions& opt = {});

}  // namespace rlab
