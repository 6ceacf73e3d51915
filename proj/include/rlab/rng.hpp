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

// Counter-based generator.  A stream is a 64-bit key; the k-th draw of a
// stream is splitmix64(key + k * 0x9e3779b97f4a7c15), so any draw can be
// recomputed without replaying the stream.  Keys for sub-streams are derived
// by hashing (parent key, tag), which gives one independent stream per
// (experiment, N, seed index) regardless of thread layout.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace rlab
{
inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class CounterRng
{
public:
    explicit CounterRng(std::uint64_t key = 0) : key_(splitmix64(key)) {}

    CounterRng split(std::uint64_t tag) const
    {
        CounterRng r;
        r.key_ = splitmix64(key_ ^ splitmix64(tag + 0x632be59bd9b4e019ULL));
        return r;
    }
    CounterRng split(std::string_view tag) const
    {
        std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
        for (char c : tag) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
        return split(h);
    }

    std::uint64_t next_u64() { return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * ctr_++); }
    /// uniform in [0, 1) with 53 random bits
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    double normal()
    {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    std::uint64_t counter() const { return ctr_; }

private:
    std::uint64_t key_ = 0;
    std::uint64_t ctr_ = 0;
};

}  // namespace rlab
