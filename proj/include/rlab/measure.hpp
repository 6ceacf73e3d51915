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

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "rlab/config.hpp"
#include "rlab/geometry.hpp"
#include "rlab/kernel.hpp"
#include "rlab/types.hpp"

namespace rlab
{
/// Bounded background density with compact support.
class BackgroundMeasure
{
public:
    enum class Family
    {
        UniformBall,
        UniformBox,
        Semicircle,
        Tabulated
    };

    static BackgroundMeasure uniform_ball(const Vec& center, double radius, double mass = 1.0);
    static BackgroundMeasure uniform_box(const Vec& lo, const Vec& hi, double mass = 1.0);
    /// sqrt(R^2 - (x-c)^2) * 2 / (pi R^2); R = 2 is the equilibrium of -log with x^2/2.
    static BackgroundMeasure semicircle(double center = 0.0, double radius = 2.0);
    /// Piecewise constant on the cells of a regular grid.  values are in
    /// row-major order with the first coordinate varying slowest.
    static BackgroundMeasure tabulated(const Vec& lo, const Vec& h, const std::vector<int>& n,
                                       std::vector<double> values);
    /// CSV rows "x1,...,xd,density" giving cell centres of a regular grid.
    static BackgroundMeasure from_csv(const std::string& path);

    int d() const { return d_; }
    Family family() const { return family_; }
    double mass() const { return mass_; }
    const Region& support() const { return support_; }
    std::string family_name() const;

    double density(const Vec& x) const;
    /// true when potential and force at z = 0 come from an elementary formula
    bool closed_form(const RieszKernel& K) const;

    /// (g * mu)(x, z)
    double potential(const RieszKernel& K, const ExtendedPoint& p) const;
    /// gradient of g * mu in the D = d + k variables
    Vec force(const RieszKernel& K, const ExtendedPoint& p) const;
    double potential(const RieszKernel& K, const Vec& x) const { return potential(K, ExtendedPoint{x, Vec()}); }
    Vec force(const RieszKernel& K, const Vec& x) const { return force(K, ExtendedPoint{x, Vec()}); }

    /// (1/2) \int\int g(x - y) dmu dmu, cached per s.
    double self_energy(const RieszKernel& K) const;

    /// sup of the density over the region (0 when disjoint from the support)
    double sup_density(const Region& omega) const;

    /// i.i.d. points by rejection from the bounding box.
    Configuration sample(std::size_t N, std::uint64_t seed) const;

    /// \int F dmu for F(p + r w) r^{d-1} = r^beta phi(r, w), phi smooth on
    /// rays from p.  Handles the singularity of F at p.
    double integrate_near(const Vec& p, double beta, const std::function<double(double, const Vec&)>& phi,
                          const PolarOptions& opt = {}) const;
    Eigen::VectorXd integrate_near_vec(const Vec& p, double beta, int m,
                                       const std::function<void(double, const Vec&, Eigen::VectorXd&)>& phi,
                                       const PolarOptions& opt = {}) const;

    /// Nodes and weights (density included) for \int F dmu with F smooth
    /// inside the support.
    VolumeRule outer_rule(int n_ang = 32, int de_level = 4) const;

    /// Mean, by quadrature.
    Vec mean() const;

    /// The quadrature route even when an elementary formula exists.
    double potential_quadrature(const RieszKernel& K, const ExtendedPoint& p) const;
    Vec force_quadrature(const RieszKernel& K, const ExtendedPoint& p) const;

    Vec bbox_lo() const;
    Vec bbox_hi() const;
    double max_density() const;

    /// Constant-density boxes of a tabulated measure (empty cells skipped).
    std::vector<std::pair<Region, double>> cells() const;

private:
    int d_ = 1;
    Family family_ = Family::UniformBall;
    double mass_ = 1.0;
    Region support_;
    double rho0_ = 0.0;  // uniform density or semicircle scale
    // tabulated grid
    Vec lo_, h_;
    std::vector<int> n_;
    std::vector<double> values_;

    struct Cache
    {
        std::mutex m;
        std::map<double, double> self;
    };
    std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();

    double self_energy_compute(const RieszKernel& K) const;
};

/// \int_0^R g(sqrt(r^2 + z^2)) r^{d-1} dr
double radial_potential_antiderivative(const RieszKernel& K, double z, double R);
/// \int_0^R r^p (r^2 + z^2)^q dr; for z = 0 the finite part when divergent at 0
double radial_power_integral(int p, double q, double z, double R);

}  // namespace rlab
