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

#include "rlab/measure.hpp"
#include "rlab/rng.hpp"
#include "rlab/transport.hpp"

using namespace rlab;

namespace
{
Vec v2(double a, double b)
{
    Vec x(2);
    x << a, b;
    return x;
}

Vec unit(double th) { return v2(std::cos(th), std::sin(th)); }

// fourth-order central difference of a scalar function of one variable
double diff4(const std::function<double(double)>& f, double h)
{
    return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h);
}

// T[a_1 .. a_k][b] contracted with a^k and b
double contract_tensor(const std::vector<double>& T, int k, const Vec& a, const Vec& b)
{
    const int d = static_cast<int>(a.size());
    std::size_t n = 1;
    for (int j = 0; j < k; ++j) n *= d;
    double acc = 0.0;
    for (std::size_t e = 0; e < n; ++e)
    {
        std::size_t r = e;
        double w = 1.0;
        for (int j = 0; j < k; ++j)
        {
            w *= a(static_cast<int>(r % d));
            r /= d;
        }
        for (int c = 0; c < d; ++c) acc += w * b(c) * T[e * d + c];
    }
    return acc;
}
}  // namespace

TEST(TransportField, BumpDerivativesMatchFiniteDifferences)
{
    const TransportField v = TransportField::bump_shear(v2(0.1, -0.2), 0.8, v2(0.6, 0.3));
    const Vec x = v2(0.35, 0.05);
    for (int k = 1; k <= TransportField::kMaxOrder; ++k)
    {
        const std::vector<double> T = v.derivative(k, x);
        const std::vector<double> Tm = v.derivative(k - 1, x);
        const int d = 2;
        // d_a of the order k-1 tensor equals the slice of the order k tensor with leading index a
        std::size_t slice = Tm.size();
        for (int a = 0; a < d; ++a)
        {
            const Vec ea = Vec::Unit(d, a);
            for (std::size_t e = 0; e < slice; ++e)
            {
                const double fd = diff4([&](double h) { return v.derivative(k - 1, x + h * ea)[e]; }, 1e-3);
                const double exact = T[a * slice + e];
                EXPECT_NEAR(exact, fd, 1e-6 * (1.0 + std::abs(exact))) << "k=" << k;
            }
        }
    }
}

TEST(TransportField, ValueAndJacobianAgreeWithTensors)
{
    const TransportField v = TransportField::bump_shear(v2(0.0, 0.0), 1.0, v2(1.0, -0.5));
    const Vec x = v2(0.2, 0.4);
    const std::vector<double> T0 = v.derivative(0, x), T1 = v.derivative(1, x);
    EXPECT_DOUBLE_EQ(T0[0], v.value(x)(0));
    EXPECT_DOUBLE_EQ(T0[1], v.value(x)(1));
    const Mat J = v.jacobian(x);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) EXPECT_NEAR(J(a, b), T1[a * 2 + b], 1e-14);
    // directional derivative is the contraction of the full tensor
    const Vec a = unit(0.7), b = unit(2.1);
    for (int k = 0; k <= 4; ++k)
        EXPECT_NEAR(v.directional(k, x, a, b), contract_tensor(v.derivative(k, x), k, a, b), 1e-10);
}

TEST(TransportField, BumpVanishesOutsideSupport)
{
    const TransportField v = TransportField::bump_shear(v2(0.0, 0.0), 0.5, v2(1.0, 0.0));
    EXPECT_EQ(v.value(v2(0.6, 0.0)).norm(), 0.0);
    EXPECT_EQ(v.jacobian(v2(0.0, -0.51)).norm(), 0.0);
    EXPECT_DOUBLE_EQ(v.support_radius(), 0.5);
}

TEST(TransportField, SupNormsBoundDenseSamples)
{
    const TransportField v = TransportField::bump_shear(v2(0.0, 0.0), 0.7, v2(0.4, -0.3));
    CounterRng rng(11);
    for (int k = 0; k <= 4; ++k)
    {
        const double sup = v.sup_norm(k);
        double best = 0.0;
        for (int i = 0; i < 40000; ++i)
        {
            const double r = 0.7 * std::sqrt(rng.uniform()), th = 2 * std::numbers::pi * rng.uniform();
            const Vec x = r * unit(th);
            const Vec a = unit(2 * std::numbers::pi * rng.uniform());
            const Vec b = unit(2 * std::numbers::pi * rng.uniform());
            best = std::max(best, std::abs(v.directional(k, x, a, b)));
        }
        EXPECT_LE(best, sup * (1 + 1e-9)) << "k=" << k;
        EXPECT_GE(best, 0.9 * sup) << "k=" << k;
    }
}

TEST(TransportField, AffineSupNormIsLargestSingularValue)
{
    Mat A(2, 2);
    A << 1.0, 2.0, -0.5, 0.3;
    const TransportField v = TransportField::affine(A, v2(0.1, 0.2));
    // max over the unit circle of |A a| by a fine scan
    double best = 0.0;
    for (int i = 0; i < 200000; ++i) best = std::max(best, (A * unit(std::numbers::pi * i / 200000.0)).norm());
    EXPECT_NEAR(v.sup_norm(1), best, 1e-9);
    EXPECT_EQ(v.sup_norm(2), 0.0);
    EXPECT_TRUE(std::isinf(v.sup_norm(0)));
}

TEST(TransportField, RotationRequiresAntisymmetry)
{
    Mat J(2, 2);
    J << 0.0, 1.0, -1.0, 0.0;
    EXPECT_NO_THROW(TransportField::rotation(J, v2(0, 0)));
    J(1, 0) = 0.5;
    EXPECT_THROW(TransportField::rotation(J, v2(0, 0)), ParameterError);
}

TEST(TransportField, UserFieldHasDeclaredOrder)
{
    auto val = [](const Vec& x) -> Vec { return v2(std::sin(x(1)), 0.0); };
    const TransportField v = TransportField::user(2, val, nullptr, v2(-1, -1), v2(1, 1));
    EXPECT_EQ(v.order(), 0);
    EXPECT_FALSE(v.sup_norm_exact());
    EXPECT_THROW(v.jacobian(v2(0, 0)), CapabilityError);
    EXPECT_NEAR(v.sup_norm(0), std::sin(1.0), 1e-2);
}

TEST(Cutoff, ProfileShapeAndDerivatives)
{
    double c[3];
    for (double z : {0.0, 0.5, -1.0, 1.0})
    {
        cutoff_profile(z, 2, c);
        EXPECT_DOUBLE_EQ(c[0], 1.0);
        EXPECT_EQ(c[1], 0.0);
    }
    for (double z : {2.0, 2.5, -3.0})
    {
        cutoff_profile(z, 0, c);
        EXPECT_EQ(c[0], 0.0);
    }
    double prev = 1.0;
    for (double z = 1.0; z <= 2.0; z += 0.01)
    {
        cutoff_profile(z, 0, c);
        EXPECT_LE(c[0], prev + 1e-15);
        prev = c[0];
    }
    for (double z : {1.2, 1.5, -1.7})
    {
        cutoff_profile(z, 2, c);
        const double d1 = diff4(
            [&](double h) {
                double o[1];
                cutoff_profile(z + h, 0, o);
                return o[0];
            },
            1e-3);
        const double d2 = diff4(
            [&](double h) {
                double o[2];
                cutoff_profile(z + h, 1, o);
                return o[1];
            },
            1e-3);
        EXPECT_NEAR(c[1], d1, 1e-7);
        EXPECT_NEAR(c[2], d2, 1e-6);
    }
}

TEST(ExtendedField, JacobianMatchesFiniteDifferences)
{
    const TransportField v = TransportField::bump_shear(v2(0.0, 0.1), 0.9, v2(0.5, 0.5));
    const ExtendedField vt(v, 1, 0.3);
    Vec X(3);
    X << 0.2, 0.3, 0.45;  // z / ell = 1.5 sits in the cutoff ramp
    const Mat J = vt.jacobian(X);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
        {
            const Vec ea = Vec::Unit(3, a);
            const double fd = diff4([&](double h) { return vt.value(X + h * ea)(b); }, 1e-4);
            EXPECT_NEAR(J(a, b), fd, 1e-7) << a << "," << b;
        }
    EXPECT_EQ(vt.value(X)(2), 0.0);
    X(2) = 0.7;
    EXPECT_EQ(vt.value(X).norm(), 0.0);
    EXPECT_GT(ExtendedField(v, 1, 0.3, false).value(X).norm(), 0.0);
}

TEST(PushedMeasure, PreimageDensityAndMass)
{
    const BackgroundMeasure mu = BackgroundMeasure::uniform_ball(v2(0, 0), 1.0);
    const TransportField v = TransportField::bump_shear(v2(0.2, 0.0), 0.8, v2(0.7, -0.2));
    const double t = 0.3;
    const PushedMeasure pm(mu, v, t);
    for (const Vec& y : {v2(0.1, 0.1), v2(0.5, -0.2), v2(-0.4, 0.3)})
    {
        const Vec x = pm.preimage(y);
        EXPECT_NEAR((x + t * v.value(x) - y).norm(), 0.0, 1e-13);
        const Mat F = Mat::Identity(2, 2) + t * v.jacobian(x);
        const double det = F(0, 0) * F(1, 1) - F(0, 1) * F(1, 0);
        EXPECT_NEAR(pm.density(y) * det, mu.density(x), 1e-12);
    }
    EXPECT_NEAR(pm.integrate([](const Vec&) { return 1.0; }), 1.0, 1e-12);
    // first moment moves by t * \int v dmu, checked against a midpoint grid of mu
    double mom = 0.0, area = 0.0;
    const int n = 800;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
        {
            const Vec x = v2(-1 + (i + 0.5) * 2.0 / n, -1 + (j + 0.5) * 2.0 / n);
            if (x.norm() >= 1.0) continue;
            mom += v.value(x)(0);
            area += 1.0;
        }
    EXPECT_NEAR(pm.integrate([](const Vec& y) { return y(0); }), t * mom / area, 1e-4);
    EXPECT_THROW(PushedMeasure(mu, v, 10.0), ParameterError);
}

TEST(Push, MovesEveryPoint)
{
    Configuration c;
    c.d = 2;
    c.points = {v2(0, 0), v2(1, 2)};
    const TransportField v = TransportField::dilation(2);
    const Configuration p = push(c, v, 0.5);
    EXPECT_DOUBLE_EQ(p.points[1](0), 1.5);
    EXPECT_DOUBLE_EQ(p.points[1](1), 3.0);
    EXPECT_DOUBLE_EQ(p.points[0].norm(), 0.0);
}
