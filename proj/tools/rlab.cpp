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

// rlab <subcommand> --spec <file> [--out <dir>] [--threads k] [--deterministic]
// Exit status: 0 all checks pass, 1 a check or the numerics failed, 2 bad spec.

#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <string>

#include "rlab/harness.hpp"
#include "rlab/types.hpp"

int main(int argc, char** argv)
{
    using namespace rlab;
    CLI::App app{"rlab: experiments on modulated energies of Riesz interactions"};
    app.require_subcommand(1);
    std::string spec_path, out_dir;
    int threads = 0;
    bool deterministic = false, print_default = false;
    for (const std::string& name : harness::kSubcommands)
    {
        CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("--spec", spec_path, "JSON experiment spec (defaults when omitted)");
        sub->add_option("--out", out_dir, "directory for CSV tables and summary.json");
        sub->add_option("--threads", threads, "OpenMP threads (fallback: RLAB_THREADS)");
        // reductions are always ordered, so this only documents intent
        sub->add_flag("--deterministic", deterministic, "bit-reproducible reductions (always on)");
        sub->add_flag("--print-default", print_default, "print the default spec and exit");
    }
    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    const std::string sub = app.get_subcommands().front()->get_name();
    try
    {
        if (print_default)
        {
            std::cout << harness::default_spec(sub).dump(2) << "\n";
            return 0;
        }
        nlohmann::json j = {{"subcommand", sub}};
        if (!spec_path.empty())
        {
            const harness::ExperimentSpec loaded = harness::ExperimentSpec::load(spec_path);
            if (loaded.subcommand != sub)
                throw SchemaError("schema: spec is for '" + loaded.subcommand + "', not '" + sub + "'");
            j = loaded.params;
        }
        if (!out_dir.empty()) j["out"] = out_dir;
        const harness::ExperimentSpec spec = harness::ExperimentSpec::parse(j);
        harness::configure_threads(threads);
        const harness::RunResult r = harness::run(spec);
        for (const harness::Check& c : r.checks)
        {
            std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": measured " << c.measured << ", tolerance "
                      << c.tolerance;
            if (!c.detail.empty()) std::cout << " [" << c.detail << "]";
            std::cout << "\n";
        }
        std::cout << (r.passed() ? "ok" : "FAILED") << " (" << r.seconds << " s)\n";
        return r.exit_code();
    }
    catch (const SchemaError& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    catch (const ParameterError& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
