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

#include <vector>

#include "rlab/types.hpp"

namespace rlab
{
/// Directions and weights on the unit sphere S^{d-1}; the weights sum to its
/// surface measure.  d = 1 gives the two points +-1, d = 2 the periodic
/// trapezoid with M points, d = 3 Gauss-Legendre in cos(theta) times a
/// trapezoid with 2M points in the azimuth.
struct SphereRule
{
    std::vector<Vec> dirs;
    std::vector<double> weights;
};
const SphereRule& sphere_rule(int d, int M);

}  // namespace rlab
