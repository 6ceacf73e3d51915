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

#include "rlab/geometry.hpp"

using namespace rlab;

namespace
{
const double kPi = std::numbers::pi;

Vec v2(double a, double b)
{
    Vec x(2);
    x << a, b;
    return x;
}

// \int_{[0,a]x[0,b]} 1/|y| dy for a corner at the origin
double corner_inverse_distance(double a, double b)
{
    if (a <= 0.0 || b <= 0.0) return 0.0;
    return a * std::asinh(b / a) + b * std::asinh(a / b);
}

// \int over [x0,x1]x[y0,y1] of 1/|y - p| by signed corner rectangles
double rect_inverse_distance(double x0, double x1, double y0, double y1, const Vec& p)
{
    auto F = [&](double X, double Y) {
        const double sx = X >= 0 ? 1.0 : -1.0, sy = Y >= 0 ? 1.0 : -1.0;
        return sx * sy * corner_inverse_distance(std::abs(X), std::abs(Y));
    };
    return F(x1 - p[0], y1 - p[1]) - F(x0 - p[0], y1 - p[1]) - F(x1 - p[0], y0 - p[1]) + F(x0 - p[0], y0 - p[1]);
}
}  // namespace

TEST(Region, RaysAndDistances)
{
    Region b = Region::ball(v2(0, 0), 1.0);
    auto r = b.ray(v2(-2, 0), v2(1, 0));
    ASSERT_TRUE(r.has_value());
    EXPECT_NEAR(r->first, 1.0, 1e-15);
    EXPECT_NEAR(r->second, 3.0, 1e-15);
    EXPECT_FALSE(b.ray(v2(-2, 0), v2(-1, 0)).has_value());
    auto in = b.ray(v2(0.5, 0), v2(1, 0));
    EXPECT_NEAR(in->first, 0.0, 0.0);
    EXPECT_NEAR(in->second, 0.5, 1e-15);
    Region q = Region::box(v2(0, 0), v2(2, 1));
    EXPECT_NEAR(q.dist_to_boundary(v2(1.0, 0.3)), 0.3, 1e-15);
    EXPECT_NEAR(q.distance_to(v2(3.0, 2.0)), std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(region_distance(b, q), 0.0, 0.0);
    EXPECT_NEAR(region_distance(Region::ball(v2(5, 0.5), 1.0), q), 2.0, 1e-15);
}

TEST(Polar, VolumesFromAnyPoint)
{
    PolarOptions opt;
    std::vector<Region> regions = {Region::ball(v2(0.1, -0.2), 1.3), Region::box(v2(-1, 0), v2(0.5, 2.0))};
    Vec c3(3);
    c3 << 0.1, 0.2, -0.3;
    for (const Region& S : regions)
        for (const Vec& p : {v2(0.0, 0.5), v2(0.49, 1.99), v2(-3.0, 1.0), v2(0.5, 0.7), v2(1.05, -0.2)})
        {
            const double vol = polar_radial(S, p, [](double R) { return R * R / 2.0; }, opt);
            EXPECT_NEAR(vol, S.volume(), 1e-11 * S.volume()) << p.transpose();
        }
    Region b3 = Region::ball(c3, 0.8);
    for (double off : {0.0, 0.5, 0.7999, 0.8, 0.81, 2.0})
    {
        Vec p = c3;
        p[0] += off;
        EXPECT_NEAR(polar_radial(b3, p, [](double R) { return R * R * R / 3.0; }, opt), b3.volume(), 1e-10);
    }
    Vec lo(1), hi(1), p(1);
    lo << -1.0;
    hi << 2.0;
    for (double x : {-3.0, -1.0, 0.0, 2.0, 4.0})
    {
        p << x;
        EXPECT_NEAR(polar_radial(Region::box(lo, hi), p, [](double R) { return R; }, opt), 3.0, 1e-14);
    }
}

TEST(Polar, InverseDistanceOnRectangle)
{
    PolarOptions opt;
    Region S = Region::box(v2(0, 0), v2(1.0, 0.6));
    for (const Vec& p : {v2(0.3, 0.2), v2(0.999, 0.3), v2(0.5, 1e-6), v2(1.5, 0.3), v2(0.5, -0.001), v2(-0.2, -0.3)})
    {
        const double ex = rect_inverse_distance(0, 1.0, 0, 0.6, p);
        // F = 1/r: F r^{d-1} = r^0
        const double q = polar_integrate(S, p, 0.0, [](double, const Vec&) { return 1.0; }, opt);
        EXPECT_NEAR(q, ex, 1e-10 * ex) << p.transpose();
        EXPECT_NEAR(polar_radial(S, p, [](double R) { return R; }, opt), ex, 1e-10 * ex);
    }
}

TEST(Polar, SmoothIntegrandOnDisk)
{
    // \int_{B_R} |y - p|^2 dy = pi R^4 / 2 + pi R^2 |p - c|^2
    PolarOptions opt;
    Region S = Region::ball(v2(0.2, 0.1), 0.9);
    for (const Vec& p : {v2(0.2, 0.1), v2(1.0, 0.1), v2(1.1, 0.1), v2(-2.0, 1.0)})
    {
        const double ex = kPi * std::pow(0.9, 4) / 2.0 + kPi * 0.81 * (p - S.center).squaredNorm();
        const double q = polar_integrate(S, p, 1.0, [](double r, const Vec&) { return r * r; }, opt);
        EXPECT_NEAR(q, ex, 1e-11 * ex) << p.transpose();
    }
}

TEST(Polar, DirectionalMomentVanishesInside)
{
    PolarOptions opt;
    Region S = Region::ball(v2(0, 0), 1.0);
    Vec m = polar_radial_dir(S, v2(0.0, 0.0), [](double) { return 1.0; }, opt);
    EXPECT_LT(m.norm(), 1e-13);
    Region B = Region::box(v2(0, 0), v2(1, 1));
    m = polar_radial_dir(B, v2(0.3, 0.9), [](double) { return 1.0; }, opt);
    EXPECT_LT(m.norm(), 1e-12);
}

TEST(VolumeRule, IntegratesPolynomials)
{
    Region S = Region::ball(v2(0, 0), 1.0);
    VolumeRule vr = volume_rule(S, 32, 4);
    double vol = 0.0, m2 = 0.0;
    for (std::size_t q = 0; q < vr.nodes.size(); ++q)
    {
        vol += vr.weights[q];
        m2 += vr.weights[q] * vr.nodes[q].squaredNorm();
    }
    EXPECT_NEAR(vol, kPi, 1e-12);
    EXPECT_NEAR(m2, kPi / 2.0, 1e-12);
    VolumeRule bx = volume_rule(Region::box(v2(0, 0), v2(2, 1)), 0, 4);
    double a = 0.0;
    for (std::size_t q = 0; q < bx.nodes.size(); ++q) a += bx.weights[q] * bx.nodes[q][0];
    EXPECT_NEAR(a, 2.0, 1e-12);
}
