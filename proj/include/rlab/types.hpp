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

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace rlab
{
/// Small vector, at most four components, never heap allocated.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;

/// A point (x, z) of the extension space; z is empty when k = 0.
struct ExtendedPoint
{
    Vec x;
    Vec z;

    Vec joined() const
    {
        Vec p(x.size() + z.size());
        p.head(x.size()) = x;
        if (z.size() > 0) p.tail(z.size()) = z;
        return p;
    }
};

struct ParameterError : std::invalid_argument
{
    using std::invalid_argument::invalid_argument;
};
struct SingularityError : std::domain_error
{
    using std::domain_error::domain_error;
};
struct ResolutionError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};
struct ConfigurationError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};
struct CapabilityError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};
struct ToleranceError : std::runtime_error
{
    double achieved;
    ToleranceError(const std::string& what, double est) : std::runtime_error(what), achieved(est) {}
};
struct SchemaError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

}  // namespace rlab
