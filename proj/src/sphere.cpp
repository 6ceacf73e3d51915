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

#include "rlab/sphere.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "rlab/quadrature.hpp"

namespace rlab
{
const SphereRule& sphere_rule(int d, int M)
{
    static std::mutex m;
    static std::map<std::pair<int, int>, SphereRule> cache;
    std::lock_guard<std::mutex> lock(m);
    auto key = std::make_pair(d, M);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    SphereRule r;
    const double pi = std::numbers::pi;
    if (d == 1)
    {
        Vec a(1), b(1);
        a << 1.0;
        b << -1.0;
        r.dirs = {a, b};
        r.weights = {1.0, 1.0};
    }
    else if (d == 2)
    {
        for (int q = 0; q < M; ++q)
        {
            const double t = 2.0 * pi * q / M;
            Vec v(2);
            v << std::cos(t), std::sin(t);
            r.dirs.push_back(v);
            r.weights.push_back(2.0 * pi / M);
        }
    }
    else if (d == 3)
    {
        const Rule& g = gauss_legendre(M);
        for (int a = 0; a < M; ++a)
        {
            const double c = g.x[a], sn = std::sqrt((1.0 - c) * (1.0 + c));
            for (int q = 0; q < 2 * M; ++q)
            {
                const double t = pi * q / M;
                Vec v(3);
                v << sn * std::cos(t), sn * std::sin(t), c;
                r.dirs.push_back(v);
                r.weights.push_back(g.w[a] * pi / M);
            }
        }
    }
    else
    {
        throw ParameterError("sphere_rule: only d <= 3 is supported");
    }
    return cache.emplace(key, std::move(r)).first->second;
}

}  // namespace rlab
