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

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

namespace rlab
{
struct SlopeFit
{
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    std::size_t n = 0;
    nlohmann::json to_json() const;
};

/// Least-squares line y = slope x + intercept.  Throws ParameterError for
/// fewer than 3 points and ResolutionError for degenerate abscissas.
SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y);

namespace harness
{
inline const std::vector<std::string> kSubcommands = {"rate", "transport-deriv", "identity",  "monotonicity",
                                                      "fi",   "commutator",      "meanfield", "calibrate"};

/// One assertion of an experiment.  group names the acceptance criterion the
/// check feeds (a subcommand can serve two).
struct Check
{
    std::string name;
    std::string group;
    bool pass = false;
    double measured = 0.0;
    double tolerance = 0.0;
    std::string detail;  // failing row or extra numbers
    double seconds = 0.0;
    nlohmann::json to_json() const;
};

/// Validated experiment description: the user's JSON merged over the
/// subcommand defaults.
struct ExperimentSpec
{
    std::string subcommand;
    nlohmann::json params;
    std::string out_dir;  // empty: no files written

    /// Throws SchemaError on unknown keys, wrong types or nonpositive
    /// tolerances, ParameterError on inadmissible kernel parameters.
    static ExperimentSpec parse(const nlohmann::json& j);
    static ExperimentSpec load(const std::string& path);
};

/// Complete default spec for a subcommand.  variant selects an alternative
/// default of the same subcommand ("ratio" for commutator, "mollifier" for identity).
nlohmann::json default_spec(const std::string& subcommand, const std::string& variant = "");

struct RunResult
{
    std::string subcommand;
    std::vector<Check> checks;
    nlohmann::json data;  // measured constants and tables
    double seconds = 0.0;
    bool passed() const;
    /// 0 when every check passed, 1 otherwise
    int exit_code() const;
    nlohmann::json to_json() const;
};

/// Runs the experiment, writing CSV tables and summary.json to spec.out_dir.
RunResult run(const ExperimentSpec& spec);

/// omp thread count from the flag, else RLAB_THREADS, else the runtime default.
void configure_threads(int requested);

}  // namespace harness
}  // namespace rlab
