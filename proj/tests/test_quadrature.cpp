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

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numbers>

#include "rlab/quadrature.hpp"

using namespace rlab;

namespace
{
// \int_{-1}^{1} (1-x)^a (1+x)^b x^k dx by the binomial expansion in t = (1+x)/2.
// The expansion alternates, so the sum of absolute terms is returned as a
// rounding scale.
double jacobi_moment(double a, double b, int k, double* scale = nullptr)
{
    long double acc = 0.0L, mag = 0.0L;
    for (int j = 0; j <= k; ++j)
    {
        const long double binom = std::tgamma(k + 1.0L) / (std::tgamma(j + 1.0L) * std::tgamma(k - j + 1.0L));
        const long double t = binom * std::pow(2.0L, j) * std::beta(b + j + 1.0, a + 1.0);
        acc += ((k - j) % 2 ? -t : t);
        mag += t;
    }
    const long double f = std::pow(2.0L, a + b + 1.0L);
    if (scale) *scale = static_cast<double>(f * mag);
    return static_cast<double>(f * acc);
}
}  // namespace

TEST(GaussJacobi, ExactForPolynomials)
{
    for (double a : {0.0, -0.5, 0.3, 0.7})
        for (double b : {0.0, -0.3, 0.5, 1.5})
            for (int n : {4, 12, 40})
            {
                const Rule& r = gauss_jacobi(n, a, b);
                for (int k = 0; k < 2 * n && k < 24; ++k)
                {
                    double q = 0.0;
                    for (std::size_t i = 0; i < r.size(); ++i) q += r.w[i] * std::pow(r.x[i], k);
                    double scale;
                    const double ex = jacobi_moment(a, b, k, &scale);
                    EXPECT_NEAR(q, ex, 1e-13 * std::max(1.0, scale))
                        << "a=" << a << " b=" << b << " n=" << n << " k=" << k;
                }
            }
}

TEST(GaussJacobi, LegendreNodesSymmetric)
{
    const Rule& r = gauss_legendre(17);
    for (std::size_t i = 0; i < r.size(); ++i) EXPECT_NEAR(r.x[i], -r.x[r.size() - 1 - i], 1e-15);
}

TEST(Jacobi01, IntegratesWeightedMonomials)
{
    const Rule r = jacobi01(20, 0.4, -0.3);
    double q = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) q += r.w[i] * r.x[i] * r.x[i];
    EXPECT_NEAR(q, std::beta(3.4, 0.7), 1e-14);
}

TEST(LeftSingular, AbsoluteUnits)
{
    const Rule r = left_singular(10, 1.0, 3.0, -0.5);
    double q = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) q += r.w[i];
    EXPECT_NEAR(q, 2.0 * std::sqrt(2.0), 1e-13);
}

TEST(TanhSinh, EndpointSingularities)
{
    EXPECT_NEAR(de_integrate([](double, double dl, double) { return 1.0 / std::sqrt(dl); }, 0.0, 1.0), 2.0, 1e-12);
    EXPECT_NEAR(de_integrate([](double, double dl, double) { return std::log(dl); }, 0.0, 1.0), -1.0, 1e-12);
    EXPECT_NEAR(de_integrate([](double, double, double dr) { return std::pow(dr, -0.8); }, 2.0, 3.0), 5.0, 1e-9);
}

TEST(SinPower, FullAndPartialRanges)
{
    const double pi = std::numbers::pi;
    for (double p : {-0.5, 0.0, 0.5, 1.5})
    {
        const double full = std::sqrt(pi) * std::tgamma(0.5 * (p + 1.0)) / std::tgamma(0.5 * p + 1.0);
        EXPECT_NEAR(integrate_sin_power([](double) { return 1.0; }, 0.0, pi, p), full, 1e-12);
        boost::math::quadrature::tanh_sinh<double> ts;
        auto f = [p](double x) { return std::cos(x) * std::cos(x) * std::pow(std::sin(x), p); };
        const double ex = ts.integrate(f, 0.3, 2.9);
        EXPECT_NEAR(integrate_sin_power([](double x) { return std::cos(x) * std::cos(x); }, 0.3, 2.9, p), ex, 1e-11);
    }
}

TEST(Trapezoid, PeriodicExactness)
{
    const Rule r = trapezoid_periodic(16);
    double q = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) q += r.w[i] * std::cos(3.0 * r.x[i]) * std::cos(3.0 * r.x[i]);
    EXPECT_NEAR(q, std::numbers::pi, 1e-14);
}

TEST(CompositeLegendre, GradedBreaks)
{
    const auto br = graded_breaks(0.0, 1.0, 1e-6);
    ASSERT_GT(br.size(), 5u);
    EXPECT_EQ(br.front(), 0.0);
    EXPECT_EQ(br.back(), 1.0);
    const Rule r = composite_legendre(br, 12);
    double q = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) q += r.w[i] * 1.0 / (r.x[i] + 1e-6);
    EXPECT_NEAR(q, std::log((1.0 + 1e-6) / 1e-6), 1e-10);
}
