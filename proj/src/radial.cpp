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

#include "rlab/radial.hpp"

#include <cmath>
#include <functional>

namespace rlab::radial
{
namespace
{
double ipow(double x, int e)
{
    double r = 1.0;
    for (int k = 0; k < e; ++k) r *= x;
    return r;
}

double factorial(int n)
{
    double r = 1.0;
    for (int k = 2; k <= n; ++k) r *= k;
    return r;
}
}  // namespace

constexpr int kTable = 24;

struct Tables
{
    double match[kTable][kTable / 2 + 1];  // matchings(m, k)
    double pow2[kTable + 1];               // 2^j
    Tables()
    {
        for (int j = 0; j <= kTable; ++j) pow2[j] = std::ldexp(1.0, j);
        for (int m = 0; m < kTable; ++m)
            for (int k = 0; k <= kTable / 2; ++k)
                match[m][k] = 2 * k > m ? 0.0 : factorial(m) / (factorial(k) * pow2[k] * factorial(m - 2 * k));
    }
};
const Tables& tables()
{
    static const Tables t;
    return t;
}
double pow2(int j) { return j >= 0 && j <= kTable ? tables().pow2[j] : std::ldexp(1.0, j); }

double matchings(int m, int k)
{
    if (m < 0 || k < 0 || 2 * k > m) return 0.0;
    if (m < kTable) return tables().match[m][k];
    return factorial(m) / (factorial(k) * std::ldexp(1.0, k) * factorial(m - 2 * k));
}

double contract(int m, const double* Gd, double A, double B)
{
    double acc = 0.0;
    for (int k = 0; 2 * k <= m; ++k)
        acc += matchings(m, k) * Gd[m - k] * pow2(m - k) * ipow(A, m - 2 * k) * ipow(B, k);
    return acc;
}

Vec contract1(int m, const double* Gd, const Vec& X, const Vec& a)
{
    const double A = X.dot(a), B = a.dot(a);
    double cx = 0.0, ca = 0.0;
    for (int k = 0; 2 * k <= m; ++k)
    {
        const double pre = Gd[m - k] * pow2(m - k);
        const double nx = matchings(m - 1, k);
        if (nx != 0.0) cx += pre * nx * ipow(A, m - 1 - 2 * k) * ipow(B, k);
        const double na = (m - 1) * matchings(m - 2, k - 1);
        if (na != 0.0) ca += pre * na * ipow(A, m - 2 * k) * ipow(B, k - 1);
    }
    return cx * X + ca * a;
}

Mat contract2(int m, const double* Gd, const Vec& X, const Vec& a)
{
    const int D = static_cast<int>(X.size());
    const double A = X.dot(a), B = a.dot(a);
    double cd = 0.0, cxx = 0.0, cxa = 0.0, caa = 0.0;
    for (int k = 0; 2 * k <= m; ++k)
    {
        const double pre = Gd[m - k] * pow2(m - k);
        double n = matchings(m - 2, k - 1);
        if (n != 0.0) cd += pre * n * ipow(A, m - 2 * k) * ipow(B, k - 1);
        n = matchings(m - 2, k);
        if (n != 0.0) cxx += pre * n * ipow(A, m - 2 - 2 * k) * ipow(B, k);
        n = (m - 2) * matchings(m - 3, k - 1);
        if (n != 0.0) cxa += pre * n * ipow(A, m - 1 - 2 * k) * ipow(B, k - 1);
        n = (m - 2) * (m - 3) * matchings(m - 4, k - 2);
        if (n != 0.0) caa += pre * n * ipow(A, m - 2 * k) * ipow(B, k - 2);
    }
    Mat T = cd * Mat::Identity(D, D);
    T += cxx * X * X.transpose();
    T += cxa * (X * a.transpose() + a * X.transpose());
    T += caa * a * a.transpose();
    return T;
}

std::vector<double> full_tensor(int m, const double* Gd, const Vec& X)
{
    const int D = static_cast<int>(X.size());
    std::size_t total = 1;
    for (int k = 0; k < m; ++k) total *= D;
    std::vector<double> out(total, 0.0);
    std::vector<int> idx(m, 0);
    std::vector<int> slots(m);
    for (std::size_t e = 0; e < total; ++e)
    {
        std::size_t r = e;
        for (int p = m - 1; p >= 0; --p)
        {
            idx[p] = static_cast<int>(r % D);
            r /= D;
        }
        // walk over matchings: the first free slot is either single or
        // paired with a later slot carrying the same index
        std::vector<char> used(m, 0);
        double acc = 0.0;
        std::function<void(int, int, double)> rec = [&](int p, int k, double prod) {
            while (p < m && used[p]) ++p;
            if (p == m)
            {
                acc += prod * Gd[m - k] * pow2(m - k);
                return;
            }
            used[p] = 1;
            rec(p + 1, k, prod * X(idx[p]));
            for (int q = p + 1; q < m; ++q)
            {
                if (used[q] || idx[q] != idx[p]) continue;
                used[q] = 1;
                rec(p + 1, k + 1, prod);
                used[q] = 0;
            }
            used[p] = 0;
        };
        rec(0, 0, 1.0);
        out[e] = acc;
    }
    return out;
}

}  // namespace rlab::radial
