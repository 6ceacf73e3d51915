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

// Derivatives of functions of the form F(|X|^2).
//
// With rho = |X|^2, A = X.a and B = a.a the n-th directional derivative is a
// sum over matchings of the n slots: each matched pair contributes a.a and
// each unmatched slot contributes 2 X.a, with F^{(n-k)}(rho) 2^{n-k} in front.
// Gd[j] holds F^{(j)}(rho).

#include <vector>

#include "rlab/types.hpp"

namespace rlab::radial
{
/// Number of matchings with k pairs on m slots: m! / (k! 2^k (m-2k)!).
double matchings(int m, int k);

/// T_m : a^{m}
double contract(int m, const double* Gd, double A, double B);

/// T_m : (e_i (x) a^{m-1}), returned as a vector over i.
Vec contract1(int m, const double* Gd, const Vec& X, const Vec& a);

/// T_m : (e_i (x) e_j (x) a^{m-2}), returned as a matrix over (i,j).
Mat contract2(int m, const double* Gd, const Vec& X, const Vec& a);

/// Full symmetric tensor T_m, flattened row-major over D^m entries.
std::vector<double> full_tensor(int m, const double* Gd, const Vec& X);

}  // namespace rlab::radial
