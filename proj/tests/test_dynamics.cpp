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


#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rlab/dynamics.hpp"
#include "rlab/energy.hpp"

using namespace rlab;

namespace
{
Vec v1(double a)
{
    Vec x(1);
    x << a;
    return x;
}
Vec v2(double a, double b)
{
    Vec x(2);
    x << a, b;
    return x;
}

FlowSpec gradient_flow(const RieszKernel& K, const Mat& A, double dt, double T)
{
    FlowSpec f;
    f.kernel = K;
    f.M = -Mat::Identity(K.d, K.d);
    f.V = TransportField::affine(A, Vec::Zero(K.d));
    f.dt = dt;
    f.T = T;
    return f;
}
}  // namespace

TEST(Flow, SingleParticleDecaysExponentially)
{
    const RieszKernel K = make_kernel(2, 0.0);
    Configuration c;
    c.d = 2;
    c.points = {v2(0.7, -0.3)};
    FlowSpec f = gradient_flow(K, Mat::Identity(2, 2), 1e-2, 1.0);
    Mat J(2, 2);
    J << 0.0, 2.0, -2.0, 0.0;
    f.M = J;  // M is irrelevant for one particle
    const Trajectory tr = integrate(c, f);
    EXPECT_NEAR((tr.snapshots.back().points[0] - std::exp(-1.0) * v2(0.7, -0.3)).norm(), 0.0, 1e-9);
    EXPECT_EQ(tr.steps, 100u);
}

TEST(Flow, MirrorSymmetryIsPreserved)
{
    const RieszKernel K = make_kernel(1, 0.0);
    Configuration c;
    c.d = 1;
    c.points = {v1(-0.4), v1(0.4)};
    FlowSpec f = gradient_flow(K, 0.5 * Mat::Identity(1, 1), 1e-3, 2.0);
    f.save_every = 100;
    const Trajectory tr = integrate(c, f);
    for (const Configuration& x : tr.snapshots) EXPECT_NEAR(x.points[0](0) + x.points[1](0), 0.0, 1e-12);
    // two particles with V = x/2 settle at +-1/sqrt(2): 1/(2 x) ... (1/N) 1/(2x) = x/2
    EXPECT_NEAR(tr.snapshots.back().points[1](0), std::sqrt(0.5), 5e-2);
}

TEST(Flow, GradientFlowEnergyIsNonincreasing)
{
    const RieszKernel K = make_kernel(2, 0.0);
    const BackgroundMeasure mu = BackgroundMeasure::uniform_ball(v2(0, 0), 1.0);
    const Configuration c = mu.sample(64, 3);
    FlowSpec f = gradient_flow(K, Mat::Identity(2, 2), 1e-3, 0.2);
    ASSERT_TRUE(f.has_potential());
    double prev = flow_energy(c, f), worst = -1.0;
    integrate(c, f, [&](std::size_t, double, const Configuration& x) {
        const double E = flow_energy(x, f);
        worst = std::max(worst, (E - prev) / std::abs(E));
        prev = E;
    });
    EXPECT_LE(worst, 1e-8);
}

TEST(Flow, ParallelAndSerialAreBitIdentical)
{
    const RieszKernel K = make_kernel(2, 0.0);
    const Configuration c = BackgroundMeasure::uniform_ball(v2(0, 0), 1.0).sample(50, 9);
    FlowSpec f = gradient_flow(K, Mat::Identity(2, 2), 1e-2, 0.1);
    const Trajectory a = integrate(c, f);
    f.parallel = false;
    const Trajectory b = integrate(c, f);
    for (std::size_t i = 0; i < c.size(); ++i)
        for (int k = 0; k < 2; ++k) EXPECT_EQ(a.snapshots.back().points[i](k), b.snapshots.back().points[i](k));
}

TEST(Flow, RejectsAttractiveMatricesAndTriggersGuard)
{
    const RieszKernel K = make_kernel(2, 0.0);
    FlowSpec f = gradient_flow(K, Mat::Identity(2, 2), 1e-2, 0.1);
    f.M = Mat::Identity(2, 2);
    EXPECT_THROW(f.validate(), ParameterError);
    Mat M(2, 2);
    M << -1.0, 3.0, -3.0, 0.0;  // symmetric part diag(-1, 0)
    EXPECT_TRUE(repulsive(M));
    f.M = M;
    EXPECT_NO_THROW(f.validate());

    Configuration c;
    c.d = 2;
    c.points = {v2(0, 0), v2(0.01, 0)};
    f.guard = 0.1;
    try
    {
        integrate(c, f);
        FAIL() << "guard did not trigger";
    }
    catch (const CollisionError& e)
    {
        EXPECT_EQ(e.first, 0u);
        EXPECT_EQ(e.second, 1u);
        EXPECT_NEAR(e.min_gap, 0.01, 1e-15);
    }
    EXPECT_NEAR(collision_guard(100, 1.0 / std::numbers::pi, 2), 1e-3 * std::sqrt(std::numbers::pi / 100), 1e-15);
}

TEST(Flow, HamiltonianDriftShrinksWithStep)
{
    const RieszKernel K = make_kernel(2, 0.0);
    Configuration c;
    c.d = 2;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) c.points.push_back(v2(0.3 * i + 0.03 * std::sin(7.0 * i + j), 0.3 * j));
    FlowSpec f;
    f.kernel = K;
    Mat J(2, 2);
    J << 0.0, 1.0, -1.0, 0.0;
    f.M = J;
    f.V = TransportField::affine(Mat::Zero(2, 2), Vec::Zero(2));
    f.T = 1.0;
    const double H0 = pair_term(c, K);
    double prev = 0.0;
    for (double dt : {0.04, 0.02})
    {
        f.dt = dt;
        const double drift = std::abs(pair_term(integrate(c, f).snapshots.back(), K) - H0);
        if (prev > 0.0) EXPECT_GT(prev / drift, 12.0);
        prev = drift;
    }
}

TEST(Reference, StationaryForceBalanceByQuadrature)
{
    for (auto [d, s] : {std::pair{1, 0.0}, std::pair{2, 0.0}, std::pair{3, 1.0}})
    {
        const RieszKernel K = make_kernel(d, s);
        const ReferenceSolution ref = ReferenceSolution::stationary(K);
        const BackgroundMeasure mu = ref.measure(0.0);
        EXPECT_NEAR(mu.mass(), 1.0, 1e-15);
        std::vector<Vec> pts;
        if (d == 1) pts = {v1(0.3), v1(-1.1), v1(1.7)};
        if (d == 2) pts = {v2(0.2, 0.1), v2(-0.5, 0.6)};
        if (d == 3)
        {
            Vec x(3);
            x << 0.2, -0.3, 0.4;
            pts = {x};
        }
        for (const Vec& x : pts)
        {
            const Vec u = -ref.M() * mu.force_quadrature(K, ExtendedPoint{x, Vec()}).head(d) + ref.V().value(x);
            EXPECT_LE(u.norm(), 1e-6) << "d=" << d;
            EXPECT_LE(ref.velocity(0.0, x).norm(), 1e-12);
        }
        EXPECT_EQ(ref.grad_u_sup(0.0, true), 0.0);
    }
    EXPECT_THROW(ReferenceSolution::stationary(make_kernel(2, 1.0)), CapabilityError);
}

TEST(Reference, VelocityJacobianMatchesFiniteDifferences)
{
    const ReferenceSolution ref = ReferenceSolution::self_similar_disk(make_kernel(2, 0.0), 0.8, 1.0, 0.5);
    const ReferenceSolution st = ReferenceSolution::stationary(make_kernel(2, 0.0));
    for (const ReferenceSolution* r : {&ref, &st})
        for (const Vec& x : {v2(0.2, 0.3), v2(1.4, -0.9)})
        {
            const Mat J = r->velocity_jacobian(0.3, x);
            for (int a = 0; a < 2; ++a)
            {
                const Vec e = 1e-5 * Vec::Unit(2, a);
                const Vec fd = (r->velocity(0.3, x + e) - r->velocity(0.3, x - e)) / 2e-5;
                for (int b = 0; b < 2; ++b) EXPECT_NEAR(J(a, b), fd(b), 1e-7);
            }
        }
    // the sup of |grad u| over the support is attained everywhere inside
    EXPECT_NEAR(ref.grad_u_sup(0.3, true), ref.velocity_jacobian(0.3, v2(0.1, 0.0)).norm() / std::sqrt(2.0), 1e-12);
}

TEST(Reference, SelfSimilarDiskSolvesTheLimitEquation)
{
    const ReferenceSolution ref = ReferenceSolution::self_similar_disk(make_kernel(2, 0.0), 1.0, 1.0, 0.3);
    double worst = 0.0;
    for (double t : {0.1, 0.5, 1.0})
        for (const Vec& x : {v2(0.1, 0.2), v2(-0.5, 0.4), v2(0.0, -0.8)})
            worst = std::max(worst, std::abs(ref.pde_residual(t, x)));
    EXPECT_LE(worst, 1e-5);
    // 1 / (pi sup rho) is linear in t; its fitted slope is the decay constant 2 alpha
    double st = 0, sy = 0, stt = 0, sty = 0;
    int n = 0;
    for (double t = 0.0; t <= 1.0; t += 0.125, ++n)
    {
        const double y = 1.0 / (std::numbers::pi * ref.sup_density(t));
        st += t, sy += y, stt += t * t, sty += t * y;
        EXPECT_NEAR(ref.measure(t).mass(), 1.0, 1e-15);
    }
    EXPECT_NEAR((n * sty - st * sy) / (n * stt - st * st), 2.0, 1e-10);
}

TEST(Reference, ParticlesFollowTheSelfSimilarDisk)
{
    const RieszKernel K = make_kernel(2, 0.0);
    const ReferenceSolution ref = ReferenceSolution::self_similar_disk(K, 1.0);
    const Configuration c = ref.measure(0.0).sample(400, 21);
    FlowSpec f = ref.flow(1e-2, 0.5);
    f.save_every = 50;
    const Trajectory tr = integrate(c, f);
    // second moment of the uniform disk is R^2 / 2
    double m2 = 0.0;
    for (const Vec& x : tr.snapshots.back().points) m2 += x.squaredNorm();
    m2 /= c.size();
    EXPECT_NEAR(m2, 0.5 * ref.radius(0.5) * ref.radius(0.5), 0.05);
}

TEST(ModulatedEnergySeries, FirstRowAndFlatEnvelope)
{
    const RieszKernel K = make_kernel(2, 0.0);
    const ReferenceSolution ref = ReferenceSolution::stationary(K);
    const Configuration c = ref.measure(0.0).sample(100, 4);
    FlowSpec f = ref.flow(1e-2, 0.3);
    f.save_every = 10;
    const Trajectory tr = integrate(c, f);
    const MeSeries me = me_timeseries(tr, ref, 0.7);
    ASSERT_EQ(me.rows.size(), 4u);
    EXPECT_DOUBLE_EQ(me.rows[0].F_N, modulated_energy(c, ref.measure(0.0), K).F_N);
    for (const MeRow& r : me.rows)
    {
        EXPECT_DOUBLE_EQ(r.envelope, me.rows[0].envelope);
        EXPECT_DOUBLE_EQ(r.grad_u_int, 0.0);
        EXPECT_NEAR(r.grad_u_int_global, 2.0 * r.t, 1e-12);
        EXPECT_NEAR(r.log_term, std::log(100.0 / std::numbers::pi) / 400.0, 1e-15);
        EXPECT_NEAR(r.error_term, 0.7 / 100.0, 1e-15);
    }
    EXPECT_TRUE(me.inside_envelope());
}
