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

#include "rlab/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "experiments.hpp"
#include "rlab/kernel.hpp"
#include "rlab/types.hpp"

namespace rlab
{
using nlohmann::json;

json SlopeFit::to_json() const
{
    return {{"slope", slope}, {"intercept", intercept}, {"stderr", stderr_slope}, {"points", n}};
}

SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size()) throw ParameterError("fit_slope: x and y differ in length");
    const std::size_t n = x.size();
    if (n < 3) throw ParameterError("fit_slope: need at least 3 points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    const double span = *std::max_element(x.begin(), x.end()) - *std::min_element(x.begin(), x.end());
    if (!(span > 1e-12 * std::max(1.0, std::abs(mx)))) throw ResolutionError("fit_slope: degenerate abscissas");
    SlopeFit f;
    f.n = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
        const double e = y[i] - f.intercept - f.slope * x[i];
        rss += e * e;
    }
    f.stderr_slope = std::sqrt(rss / (n - 2) / sxx);
    return f;
}

namespace harness
{
json Check::to_json() const
{
    return {{"name", name},           {"group", group},   {"pass", pass},      {"measured", measured},
            {"tolerance", tolerance}, {"detail", detail}, {"seconds", seconds}};
}

bool RunResult::passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

int RunResult::exit_code() const { return passed() ? 0 : 1; }

json RunResult::to_json() const
{
    json j;
    j["subcommand"] = subcommand;
    j["passed"] = passed();
    j["seconds"] = seconds;
    j["checks"] = json::array();
    for (const Check& c : checks) j["checks"].push_back(c.to_json());
    j["data"] = data;
    return j;
}

namespace
{
json kernel_tmpl(int d, double s) { return {{"d", d}, {"s", s}}; }

json bump_list(std::initializer_list<std::tuple<double, double, double, double>> b)
{
    json a = json::array();
    for (auto [x, y, r, m] : b) a.push_back({{"center", {x, y}}, {"radius", r}, {"mass", m}});
    return a;
}

json field_tmpl(double x, double y, double ell, double ex, double ey)
{
    return {{"center", {x, y}}, {"ell", ell}, {"direction", {ex, ey}}};
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

const char* type_name(const json& j)
{
    if (j.is_number_integer()) return "integer";
    if (j.is_number()) return "number";
    return j.type_name();
}

void check_scalar(const json& u, const json& t, const std::string& path)
{
    bool ok = false;
    if (t.is_number_integer())
        ok = u.is_number_integer();
    else if (t.is_number())
        ok = u.is_number();
    else if (t.is_string())
        ok = u.is_string();
    else if (t.is_boolean())
        ok = u.is_boolean();
    if (!ok) throw SchemaError("schema: '" + path + "' must be " + type_name(t) + ", got " + type_name(u));
}

// Checks user against the template and returns the merged value.
json conform(const json& u, const json& t, const std::string& path)
{
    if (t.is_object())
    {
        if (!u.is_object()) throw SchemaError("schema: '" + path + "' must be an object");
        json out = t;
        for (auto it = u.begin(); it != u.end(); ++it)
        {
            if (!t.contains(it.key())) throw SchemaError("schema: unknown key '" + join(path, it.key()) + "'");
            out[it.key()] = conform(it.value(), t[it.key()], join(path, it.key()));
        }
        return out;
    }
    if (t.is_array())
    {
        if (!u.is_array()) throw SchemaError("schema: '" + path + "' must be an array");
        if (t.empty()) throw SchemaError("schema: '" + path + "' has no element template");
        const json& e = t.front();
        json out = json::array();
        for (std::size_t i = 0; i < u.size(); ++i)
        {
            const std::string p = path + "[" + std::to_string(i) + "]";
            if (e.is_object())
            {
                if (!u[i].is_object()) throw SchemaError("schema: '" + p + "' must be an object");
                for (auto it = e.begin(); it != e.end(); ++it)
                    if (!u[i].contains(it.key())) throw SchemaError("schema: missing key '" + join(p, it.key()) + "'");
            }
            out.push_back(conform(u[i], e, p));
        }
        return out;
    }
    check_scalar(u, t, path);
    return u;
}

void check_kernels(const json& j)
{
    if (j.is_object())
    {
        if (j.contains("d") && j.contains("s") && j["d"].is_number_integer() && j["s"].is_number())
            make_kernel(j["d"].get<int>(), j["s"].get<double>());
        for (auto it = j.begin(); it != j.end(); ++it) check_kernels(it.value());
    }
    else if (j.is_array())
        for (const json& e : j) check_kernels(e);
}
}  // namespace

json default_spec(const std::string& subcommand, const std::string& variant)
{
    json j;
    j["subcommand"] = subcommand;
    j["out"] = "";
    if (subcommand == "rate")
    {
        j["cases"] = {kernel_tmpl(1, 0.5), kernel_tmpl(2, 1.0), kernel_tmpl(2, 0.0)};
        j["N"] = {64, 128, 256, 512, 1024, 2048, 4096};
        j["configuration"] = "lattice";
        j["seeds"] = {0};
        j["tolerances"] = {{"slope", 0.1}, {"slope_log", 0.15}};
    }
    else if (subcommand == "transport-deriv")
    {
        j["cases"] = {kernel_tmpl(2, 0.0), kernel_tmpl(2, 1.5)};
        j["measure"] = {{"family", "ball"}, {"scale", 1.0}};
        j["N"] = 16;
        j["seeds"] = {1, 2, 3, 4, 5};
        j["fields"] = {"bump_shear", "dilation"};
        j["tolerances"] = {{"n1", 1e-6}, {"n2", 1e-4}, {"dilation", 1e-8}};
    }
    else if (subcommand == "identity" || subcommand == "monotonicity")
    {
        if (subcommand == "monotonicity")
            j["checks"] = {"monotonicity"};
        else if (variant == "mollifier")
            j["checks"] = {"mollifier", "smear_normalization"};
        else
            j["checks"] = {"electric", "monotonicity", "smeared"};
        j["cases"] = {kernel_tmpl(1, 0.5), kernel_tmpl(2, 0.0), kernel_tmpl(2, 1.0), kernel_tmpl(3, 1.0)};
        j["measure"] = {{"family", "ball"}, {"scale", 1.0}};
        j["N"] = 16;
        j["configs"] = 100;
        j["seed"] = 1;
        j["growth"] = 6.0;  // monotonicity: alpha' = alpha (1 + growth u)
        j["smear_nodes"] = 64;
        j["eta"] = 0.5;
        j["mollifier"] = {{"dims", {1, 2, 3}}, {"m", 2}, {"eta", 0.5}, {"grid", {2000, 400, 96}}};
        j["tolerances"] = {{"electric", 1e-10},      {"monotonicity", 1e-10},     {"smeared", 1e-8},
                           {"mollifier_mass", 1e-8}, {"mollifier_moments", 1e-8}, {"smear_normalization", 1e-10}};
    }
    else if (subcommand == "fi")
    {
        j["kernel"] = kernel_tmpl(2, 0.0);
        j["measure"] = {{"family", "ball"}, {"scale", 1.0}};
        j["N"] = {64, 256, 1024};
        j["configs"] = {80, 80, 40};
        j["calibration_configs"] = {8, 8, 4};
        j["seed"] = 2024;
        j["jittered_every"] = 2;  // every second config is a jittered lattice
        j["fields"] = {"dilation", "affine", "shear", "bump", "bump_small"};
        j["safety"] = 2.0;
        j["tolerances"] = {{"c_emp_spread", 2.0}};
    }
    else if (subcommand == "commutator")
    {
        j["kernel"] = kernel_tmpl(2, 0.0);
        j["polar"] = {32, 12, 4};
        if (variant == "ratio")
        {
            j["mode"] = "ratio";
            j["field"] = field_tmpl(0.2, 0.1, 1.0, 0.5, -0.3);
            j["scales"] = {0.5, 0.75, 1.0, 1.5};
            j["supports"] = {0.5, 0.75, 1.0};
            j["amplitudes"] = {3.0, -2.5};
            j["amplitude_instances"] = 2;
            j["rule"] = {{"n_ang", 24}, {"n_rad", 8}, {"de_level", 3}};
            j["tolerances"] = {{"amplitude", 1e-12}};
        }
        else
        {
            j["mode"] = "identities";
            j["f"] = bump_list({{0.0, 0.0, 0.4, 1.0}, {0.5, 0.2, 0.3, -1.0}});
            j["w"] = bump_list({{-0.3, 0.4, 0.35, 1.0}, {0.2, -0.4, 0.5, -1.0}});
            j["recursion_field"] = field_tmpl(0.6, 0.5, 1.2, 0.5, -0.3);
            j["stress_field"] = field_tmpl(0.2, 0.1, 1.0, 0.5, -0.3);
            j["order"] = 3;
            j["points"] = {{1.2, 0.3}, {-0.5, 0.7}, {0.9, -0.5}};
            j["grid"] = {{"lo", {-0.5, -0.5}}, {"hi", {0.7, 0.7}}, {"n", 5}};
            j["rotation"] = {{"N", 64}, {"seed", 1}};
            j["tolerances"] = {{"residual", 1e-5}, {"stress", 1e-4}, {"rotation", 1e-12}};
        }
    }
    else if (subcommand == "meanfield")
    {
        j["kernel"] = kernel_tmpl(2, 0.0);
        j["N"] = {128, 256, 512, 1024};
        j["seeds"] = {1, 2, 3};
        j["dt"] = 1e-3;
        j["T"] = 1.0;
        j["save_every"] = 50;
        j["slope_times"] = {0.0, 0.5, 1.0};
        j["safety"] = 2.0;
        j["checks"] = {"envelope", "slope", "energy_monotone", "hamiltonian_order"};
        j["hamiltonian"] = {{"N", 16}, {"seeds", {1, 2, 3, 4, 5}}, {"T", 10.0}, {"dt", {0.005, 0.0025, 0.00125}}};
        j["tolerances"] = {{"slope", 0.2}, {"energy_step", 1e-8}, {"hamiltonian_ratio", 0.3}};
    }
    else if (subcommand == "calibrate")
    {
        j["kernel"] = kernel_tmpl(2, 0.0);
        j["measure"] = {{"family", "ball"}, {"scale", 1.0}};
        j["N"] = {64, 256, 1024};
        j["seeds"] = {1, 2, 3, 4};
        j["safety"] = 2.0;
        j["tolerances"] = json::object();
    }
    else
    {
        std::string names;
        for (const std::string& s : kSubcommands) names += (names.empty() ? "" : ", ") + s;
        throw SchemaError("schema: unknown subcommand '" + subcommand + "' (expected one of " + names + ")");
    }
    return j;
}

ExperimentSpec ExperimentSpec::parse(const json& j)
{
    if (!j.is_object()) throw SchemaError("schema: the spec must be a JSON object");
    if (!j.contains("subcommand") || !j["subcommand"].is_string())
        throw SchemaError("schema: missing string key 'subcommand'");
    const std::string sub = j["subcommand"].get<std::string>();
    std::string variant;
    if (sub == "commutator" && j.contains("mode"))
    {
        if (!j["mode"].is_string()) throw SchemaError("schema: 'mode' must be string");
        variant = j["mode"].get<std::string>();
        if (variant != "ratio" && variant != "identities")
            throw SchemaError("schema: commutator mode must be 'identities' or 'ratio'");
    }
    const json tmpl = default_spec(sub, variant);
    json merged = conform(j, tmpl, "");
    if (merged.contains("tolerances"))
        for (auto it = merged["tolerances"].begin(); it != merged["tolerances"].end(); ++it)
            if (!(it.value().get<double>() > 0.0))
                throw SchemaError("schema: tolerance '" + it.key() + "' must be positive");
    check_kernels(merged);
    ExperimentSpec s;
    s.subcommand = sub;
    s.out_dir = merged["out"].get<std::string>();
    s.params = std::move(merged);
    return s;
}

ExperimentSpec ExperimentSpec::load(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw SchemaError("schema: cannot read spec file " + path);
    json j;
    try
    {
        j = json::parse(is);
    }
    catch (const json::parse_error& e)
    {
        throw SchemaError(std::string("schema: ") + e.what());
    }
    return parse(j);
}

void configure_threads(int requested)
{
    int n = requested;
    if (n <= 0)
        if (const char* env = std::getenv("RLAB_THREADS")) n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
}

RunResult run(const ExperimentSpec& spec)
{
    const auto t0 = std::chrono::steady_clock::now();
    if (!spec.out_dir.empty()) std::filesystem::create_directories(spec.out_dir);
    const std::string& s = spec.subcommand;
    RunResult r;
    if (s == "rate")
        r = run_rate(spec);
    else if (s == "transport-deriv")
        r = run_transport_deriv(spec);
    else if (s == "identity" || s == "monotonicity")
        r = run_identity(spec);
    else if (s == "fi")
        r = run_fi(spec);
    else if (s == "commutator")
        r = spec.params["mode"] == "ratio" ? run_commutator_ratio(spec) : run_commutator_identities(spec);
    else if (s == "meanfield")
        r = run_meanfield(spec);
    else if (s == "calibrate")
        r = run_calibrate(spec);
    else
        throw SchemaError("schema: unknown subcommand '" + s + "'");
    r.subcommand = s;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!spec.out_dir.empty())
    {
        json j = r.to_json();
        j["spec"] = spec.params;
        std::ofstream os(std::filesystem::path(spec.out_dir) / "summary.json");
        os << j.dump(2) << "\n";
    }
    return r;
}

}  // namespace harness
}  // namespace rlab
