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

#include <omp.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "rlab/harness.hpp"
#include "rlab/types.hpp"

using namespace rlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace
{
std::string slurp(const fs::path& p)
{
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("rlab_test_" + name);
    fs::remove_all(p);
    return p;
}

json small_rate(const fs::path& out)
{
    return {{"subcommand", "rate"},
            {"cases", {{{"d", 1}, {"s", 0.5}}}},
            {"N", {64, 128, 256, 512}},
            {"configuration", "iid"},
            {"seeds", {3, 4}},
            {"out", out.string()}};
}

int cli(const std::string& args)
{
    const int rc = std::system((std::string(RLAB_CLI) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}
}  // namespace

TEST(FitSlope, ExactPowerLaw)
{
    std::vector<double> x, y;
    for (int k = 6; k <= 12; ++k)
    {
        const double N = std::ldexp(1.0, k);
        x.push_back(std::log(N));
        y.push_back(std::log(std::pow(N, -0.5)));
    }
    const SlopeFit f = fit_slope(x, y);
    EXPECT_NEAR(f.slope, -0.5, 1e-12);
    EXPECT_NEAR(f.intercept, 0.0, 1e-11);
    EXPECT_LT(f.stderr_slope, 1e-12);
    EXPECT_EQ(f.n, 7u);
}

TEST(FitSlope, ConstantDataAndErrors)
{
    const SlopeFit f = fit_slope({1.0, 2.0, 3.0, 4.0}, {2.5, 2.5, 2.5, 2.5});
    EXPECT_EQ(f.slope, 0.0);
    EXPECT_DOUBLE_EQ(f.intercept, 2.5);
    EXPECT_THROW(fit_slope({1.0, 2.0}, {1.0, 2.0}), ParameterError);
    EXPECT_THROW(fit_slope({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}), ResolutionError);
    EXPECT_THROW(fit_slope({1.0, 2.0, 3.0}, {1.0, 2.0}), ParameterError);
}

TEST(FitSlope, NoisyLineStderr)
{
    // residuals +-e around slope 2: stderr = e sqrt(n / (n - 2) / sxx)
    const std::vector<double> x = {0, 1, 2, 3};
    const std::vector<double> y = {0.1, 1.9, 4.1, 5.9};
    const SlopeFit f = fit_slope(x, y);
    EXPECT_NEAR(f.slope, 1.96, 1e-12);
    double rss = 0.0;
    for (int i = 0; i < 4; ++i) rss += std::pow(y[i] - f.intercept - f.slope * x[i], 2);
    EXPECT_NEAR(f.stderr_slope, std::sqrt(rss / 2.0 / 5.0), 1e-12);
}

TEST(Schema, DefaultsRoundTrip)
{
    for (const std::string& s : harness::kSubcommands)
    {
        const harness::ExperimentSpec spec = harness::ExperimentSpec::parse(harness::default_spec(s));
        EXPECT_EQ(spec.subcommand, s);
        EXPECT_EQ(spec.params, harness::default_spec(s));
    }
    EXPECT_NO_THROW(harness::ExperimentSpec::parse(harness::default_spec("commutator", "ratio")));
    const harness::ExperimentSpec minimal = harness::ExperimentSpec::parse({{"subcommand", "rate"}});
    EXPECT_EQ(minimal.params["N"].size(), 7u);
    EXPECT_EQ(minimal.out_dir, "");
}

TEST(Schema, RejectsMalformedSpecs)
{
    EXPECT_THROW(harness::ExperimentSpec::parse(json::array()), SchemaError);
    EXPECT_THROW(harness::ExperimentSpec::parse({{"N", {64}}}), SchemaError);
    EXPECT_THROW(harness::ExperimentSpec::parse({{"subcommand", "plot"}}), SchemaError);
    EXPECT_THROW(harness::ExperimentSpec::parse({{"subcommand", "rate"}, {"bogus", 1}}), SchemaError);
    EXPECT_THROW(harness::ExperimentSpec::parse({{"subcommand", "rate"}, {"N", 64}}), SchemaError);
    EXPECT_THROW(harness::ExperimentSpec::parse({{"subcommand", "rate"}, {"N", {64.5}}}), SchemaError);
    EXPECT_THROW(harness::ExperimentSpec::parse({{"subcommand", "rate"}, {"cases", {{{"d", 2}}}}}), SchemaError);
    EXPECT_THROW(harness::ExperimentSpec::parse({{"subcommand", "rate"}, {"tolerances", {{"slope", 0.0}}}}),
                 SchemaError);
    EXPECT_THROW(harness::ExperimentSpec::parse({{"subcommand", "commutator"}, {"mode", "both"}}), SchemaError);
}

TEST(Schema, InadmissibleKernelCitesRange)
{
    try
    {
        harness::ExperimentSpec::parse({{"subcommand", "rate"}, {"cases", {{{"d", 2}, {"s", 2.0}}}}});
        FAIL() << "s = d accepted";
    }
    catch (const ParameterError& e)
    {
        EXPECT_NE(std::string(e.what()).find("admissible interval [0, 2)"), std::string::npos) << e.what();
    }
}

TEST(Run, MinimalRateSpecWritesTables)
{
    const fs::path out = scratch("rate");
    const harness::RunResult r = harness::run(harness::ExperimentSpec::parse({{"subcommand", "rate"},
                                                                               {"cases", {{{"d", 1}, {"s", 0.5}}}},
                                                                               {"N", {64, 128, 256}},
                                                                               {"out", out.string()}}));
    EXPECT_TRUE(r.passed());
    const std::string csv = slurp(out / "rate_d1_s0.5.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "N,seed,F_N,corrected,lambda");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
    const json summary = json::parse(slurp(out / "summary.json"));
    EXPECT_NEAR(summary["data"]["cases"][0]["fit"]["slope"].get<double>(), -0.5, 0.01);
    EXPECT_EQ(summary["checks"][0]["pass"], true);
}

TEST(Run, SameSeedGivesIdenticalCsv)
{
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    harness::run(harness::ExperimentSpec::parse(small_rate(a)));
    const int threads = omp_get_max_threads();
    omp_set_num_threads(1);
    harness::run(harness::ExperimentSpec::parse(small_rate(b)));
    omp_set_num_threads(threads);
    const std::string x = slurp(a / "rate_d1_s0.5.csv");
    EXPECT_FALSE(x.empty());
    EXPECT_EQ(x, slurp(b / "rate_d1_s0.5.csv"));
}

TEST(Run, FailingCheckIdentifiesRow)
{
    // iid points carry a log N factor in d = 1, so the lattice slope target is missed
    json j = small_rate(scratch("fail"));
    j["tolerances"] = {{"slope", 1e-3}, {"slope_log", 1e-3}};
    const harness::RunResult r = harness::run(harness::ExperimentSpec::parse(j));
    ASSERT_EQ(r.checks.size(), 1u);
    EXPECT_FALSE(r.checks[0].pass);
    EXPECT_EQ(r.exit_code(), 1);
    EXPECT_NE(r.checks[0].detail.find("d=1 s=0.5"), std::string::npos);
}

TEST(Cli, ExitCodes)
{
    const fs::path dir = scratch("cli");
    fs::create_directories(dir);
    auto write = [&](const std::string& name, const json& j) {
        std::ofstream(dir / name) << j.dump();
        return (dir / name).string();
    };
    const std::string ok =
        write("ok.json", {{"subcommand", "rate"}, {"cases", {{{"d", 1}, {"s", 0.5}}}}, {"N", {64, 128, 256}}});
    EXPECT_EQ(cli("rate --spec " + ok + " --threads 1 --deterministic"), 0);
    EXPECT_EQ(cli("rate --spec " + write("sd.json", {{"subcommand", "rate"}, {"cases", {{{"d", 2}, {"s", 2.0}}}}})), 2);
    EXPECT_EQ(cli("rate --spec " + write("bad.json", {{"subcommand", "rate"}, {"bogus", true}})), 2);
    EXPECT_EQ(cli("fi --spec " + ok), 2);
    EXPECT_EQ(cli("rate --spec " + (dir / "missing.json").string()), 2);
    EXPECT_EQ(cli(""), 2);
    const std::string tight = write("tight.json", {{"subcommand", "rate"},
                                                   {"cases", {{{"d", 1}, {"s", 0.5}}}},
                                                   {"N", {64, 128, 256}},
                                                   {"configuration", "iid"},
                                                   {"tolerances", {{"slope", 1e-6}, {"slope_log", 1e-6}}}});
    EXPECT_EQ(cli("rate --spec " + tight), 1);
}
