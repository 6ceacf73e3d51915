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

#include "rlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "rlab/measure.hpp"

namespace rlab
{
void validate(const Configuration& c)
{
    for (const Vec& p : c.points)
    {
        if (p.size() != c.d) throw ConfigurationError("point dimension does not match configuration");
        if (!p.allFinite()) throw ConfigurationError("non-finite coordinate");
    }
    if (c.size() > 1 && !(min_gap(c) > 0.0)) throw ConfigurationError("configuration has coincident points");
}

namespace
{
std::vector<double> nn_bruteforce(const Configuration& c)
{
    const std::size_t n = c.size();
    std::vector<double> out(n, std::numeric_limits<double>::infinity());
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i)
    {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) m = std::min(m, (c.points[i] - c.points[j]).squaredNorm());
        out[i] = std::sqrt(m);
    }
    return out;
}

std::vector<double> nn_cells(const Configuration& c)
{
    const std::size_t n = c.size();
    const int d = c.d;
    Vec lo = c.points[0], hi = c.points[0];
    for (const Vec& p : c.points)
    {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double vol = std::max(1e-300, (hi - lo).array().max(1e-12).prod());
    const double h = std::pow(vol / static_cast<double>(n), 1.0 / d);
    auto key = [&](const Eigen::Array<long, Eigen::Dynamic, 1, 0, 4, 1>& a) {
        std::uint64_t k = 1469598103934665603ULL;
        for (int i = 0; i < d; ++i) k = (k ^ static_cast<std::uint64_t>(a[i] + (1L << 30))) * 1099511628211ULL;
        return k;
    };
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells;
    std::vector<Eigen::Array<long, Eigen::Dynamic, 1, 0, 4, 1>> idx(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        idx[i] = ((c.points[i] - lo) / h).array().floor().cast<long>();
        cells[key(idx[i])].push_back(i);
    }
    std::vector<double> out(n);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i)
    {
        double best = std::numeric_limits<double>::infinity();
        for (int ring = 1;; ++ring)
        {
            // scan the cube of cells with Chebyshev radius ring
            const int w = 2 * ring + 1;
            int total = 1;
            for (int a = 0; a < d; ++a) total *= w;
            for (int t = 0; t < total; ++t)
            {
                Eigen::Array<long, Eigen::Dynamic, 1, 0, 4, 1> off(d);
                int u = t;
                for (int a = 0; a < d; ++a)
                {
                    off[a] = u % w - ring;
                    u /= w;
                }
                auto it = cells.find(key(idx[i] + off));
                if (it == cells.end()) continue;
                for (std::size_t j : it->second)
                    if (j != i) best = std::min(best, (c.points[i] - c.points[j]).squaredNorm());
            }
            // every point outside the scanned cube is at least ring * h away
            if (best <= (ring * h) * (ring * h) || ring > 64) break;
        }
        out[i] = std::sqrt(best);
    }
    return out;
}
}  // namespace

std::vector<double> nearest_distances(const Configuration& c)
{
    if (c.size() <= 20000) return nn_bruteforce(c);
    return nn_cells(c);
}

double min_gap(const Configuration& c)
{
    if (c.size() < 2) return std::numeric_limits<double>::infinity();
    const std::vector<double> nn = nearest_distances(c);
    return *std::min_element(nn.begin(), nn.end());
}

double microscale(std::size_t N, double sup_density, int d)
{
    if (!(sup_density > 0.0)) throw ParameterError("microscale needs a positive density bound");
    return std::pow(static_cast<double>(N) * sup_density, -1.0 / d);
}

std::vector<double> nn_radii(const Configuration& c, const BackgroundMeasure& mu)
{
    validate(c);
    const double lambda = microscale(c.size(), mu.sup_density(Region::whole(mu.d())), c.d);
    std::vector<double> nn = nearest_distances(c);
    for (double& r : nn) r = 0.25 * std::min(r, lambda);
    return nn;
}

double rtilde_formula(double dist, double nn_min, double lambda, double slack)
{
    const double m = std::min(nn_min, lambda);
    if (dist >= 2.0 * lambda - slack) return 0.25 * m;
    if (dist <= lambda + slack) return 0.25 * lambda;
    const double t = dist / lambda - 1.0;
    return 0.25 * (t * m + (1.0 - t) * lambda);
}

LocalScales local_scales(const Configuration& c, const BackgroundMeasure& mu, const Region& omega, double slack)
{
    validate(c);
    LocalScales ls;
    double sup = mu.sup_density(omega);
    if (!(sup > 0.0)) sup = mu.sup_density(Region::whole(mu.d()));
    ls.lambda = microscale(c.size(), sup, c.d);
    const std::vector<double> nn = nearest_distances(c);
    ls.rtilde.resize(c.size());
    for (std::size_t i = 0; i < c.size(); ++i)
    {
        const double dist = omega.dist_to_boundary(c.points[i]);
        ls.rtilde[i] = rtilde_formula(dist, nn[i], ls.lambda, slack);
        if (omega.contains(c.points[i])) ls.inside.push_back(i);
    }
    return ls;
}

Configuration load_configuration_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open " + path);
    Configuration c;
    c.d = 0;
    std::string line;
    while (std::getline(in, line))
    {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        std::vector<double> v;
        double x;
        while (ss >> x) v.push_back(x);
        if (v.empty()) continue;  // header row
        if (c.d == 0) c.d = static_cast<int>(v.size());
        if (static_cast<int>(v.size()) != c.d) throw ConfigurationError("ragged configuration file " + path);
        c.points.push_back(Eigen::Map<Vec>(v.data(), c.d));
    }
    validate(c);
    return c;
}

void save_configuration_csv(const Configuration& c, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw ConfigurationError("cannot write " + path);
    out.precision(17);
    for (const Vec& p : c.points)
    {
        for (int i = 0; i < p.size(); ++i) out << (i ? "," : "") << p[i];
        out << '\n';
    }
}

Configuration equispaced_interval(std::size_t N, double a, double b)
{
    Configuration c;
    c.d = 1;
    for (std::size_t i = 0; i < N; ++i)
    {
        Vec p(1);
        p << a + (b - a) * (i + 0.5) / static_cast<double>(N);
        c.points.push_back(p);
    }
    return c;
}

Configuration square_lattice(std::size_t n, const Vec& lo, const Vec& hi)
{
    Configuration c;
    c.d = 2;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
        {
            Vec p(2);
            p << lo[0] + (hi[0] - lo[0]) * (i + 0.5) / n, lo[1] + (hi[1] - lo[1]) * (j + 0.5) / n;
            c.points.push_back(p);
        }
    return c;
}

}  // namespace rlab
