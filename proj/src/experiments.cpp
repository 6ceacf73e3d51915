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

// Experiment drivers behind the rlab subcommands.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "experiments.hpp"
#include "rlab/commutator.hpp"
#include "rlab/config.hpp"
#include "rlab/dynamics.hpp"
#include "rlab/energy.hpp"
#include "rlab/kernel.hpp"
#include "rlab/measure.hpp"
#include "rlab/rng.hpp"
#include "rlab/transport.hpp"

namespace rlab::harness
{
namespace
{
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}
std::string num(std::size_t x) { return std::to_string(x); }
std::string num(int x) { return std::to_string(x); }

std::string tag(double s)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", s);
    return buf;
}

// CSV table in the output directory; inert when no directory was given.
class Csv
{
public:
    Csv(const ExperimentSpec& spec, const std::string& name, const std::vector<std::string>& header)
    {
        if (spec.out_dir.empty()) return;
        os_.open(std::filesystem::path(spec.out_dir) / name);
        if (!os_) throw ParameterError("cannot write " + name);
        row(header);
    }
    void row(const std::vector<std::string>& cells)
    {
        if (!os_.is_open()) return;
        for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
        os_ << "\n";
    }

private:
    std::ofstream os_;
};

Check check(const std::string& name, const std::string& group, bool pass, double measured, double tol,
            const std::string& detail = "")
{
    Check c;
    c.name = name;
    c.group = group;
    c.pass = pass;
    c.measured = measured;
    c.tolerance = tol;
    c.detail = detail;
    return c;
}

Vec vec_of(const json& a)
{
    Vec v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
    return v;
}

RieszKernel kernel_of(const json& k) { return make_kernel(k["d"].get<int>(), k["s"].get<double>()); }

BackgroundMeasure measure_of(const json& m, int d)
{
    const std::string fam = m["family"].get<std::string>();
    const double a = m["scale"].get<double>();
    if (!(a > 0.0)) throw SchemaError("schema: measure scale must be positive");
    if (fam == "ball") return BackgroundMeasure::uniform_ball(Vec::Zero(d), a);
    if (fam == "box") return BackgroundMeasure::uniform_box(Vec::Zero(d), Vec::Constant(d, a));
    if (fam == "semicircle")
    {
        if (d != 1) throw SchemaError("schema: the semicircle measure needs d = 1");
        return BackgroundMeasure::semicircle(0.0, a);
    }
    throw SchemaError("schema: unknown measure family '" + fam + "' (ball, box, semicircle)");
}

/// seed for mu.sample from the stream (experiment, N, seed index)
std::uint64_t stream(std::uint64_t seed, std::string_view experiment, std::uint64_t N)
{
    CounterRng r = CounterRng(seed).split(experiment).split(N);
    return r.next_u64();
}

Vec unit_vector(CounterRng& rng, int d)
{
    Vec e(d);
    do
        for (int a = 0; a < d; ++a) e[a] = rng.normal();
    while (e.norm() < 1e-8);
    return e / e.norm();
}

Vec axes(int d, double a0, double a1)
{
    Vec x = Vec::Zero(d);
    x[0] = a0;
    if (d > 1) x[1] = a1;
    return x;
}

TransportField named_field(const std::string& name, int d)
{
    if (name == "dilation") return TransportField::dilation(d);
    if (name == "affine" || name == "shear")
    {
        Mat A = Mat::Zero(d, d);
        if (name == "affine")
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) A(i, j) = i == j ? 0.3 : (i < j ? 0.8 : -0.2);
        else
            A(0, d - 1) = 1.0;
        return TransportField::affine(A, name == "affine" ? axes(d, 0.1, 0.0) : Vec(Vec::Zero(d)));
    }
    if (name == "rotation")
    {
        if (d < 2) throw SchemaError("schema: the rotation field needs d >= 2");
        Mat J = Mat::Zero(d, d);
        J(0, 1) = 1.0;
        J(1, 0) = -1.0;
        return TransportField::rotation(J, Vec::Zero(d));
    }
    if (name == "bump")
    {
        Vec e = Vec::Zero(d);
        e[0] += 0.6;
        e[d - 1] += -0.3;
        return TransportField::bump_shear(axes(d, 0.2, 0.1), 0.8, e);
    }
    if (name == "bump_small")
    {
        Vec e = Vec::Zero(d);
        e[0] += 0.3;
        e[d - 1] += 0.9;
        return TransportField::bump_shear(axes(d, -0.4, 0.3), 0.4, e);
    }
    throw SchemaError("schema: unknown field '" + name + "' (dilation, affine, shear, rotation, bump, bump_small)");
}

TransportField bump_field_of(const json& f)
{
    return TransportField::bump_shear(vec_of(f["center"]), f["ell"].get<double>(), vec_of(f["direction"]));
}

SignedSource bumps_of(const json& list, int d)
{
    std::vector<Vec> c;
    std::vector<double> r, m;
    for (const json& b : list)
    {
        c.push_back(vec_of(b["center"]));
        if (c.back().size() != d) throw SchemaError("schema: bump centre dimension differs from d");
        r.push_back(b["radius"].get<double>());
        m.push_back(b["mass"].get<double>());
    }
    return SignedSource::bumps(d, c, r, m);
}

/// Lattice of N cell centres filling a box of unit mass density N; N = 2^k when d >= 2.
std::pair<Configuration, BackgroundMeasure> lattice(std::size_t N, int d)
{
    if (d == 1) return {equispaced_interval(N, 0.0, 1.0), BackgroundMeasure::uniform_box(Vec::Zero(1), Vec::Ones(1))};
    int k = 0;
    while ((std::size_t{1} << k) < N) ++k;
    if ((std::size_t{1} << k) != N) throw SchemaError("schema: lattice configurations in d >= 2 need N = 2^k");
    std::vector<int> m(d);
    for (int a = 0; a < d; ++a) m[a] = 1 << (k / d + (a < k % d ? 1 : 0));
    const double h = std::pow(static_cast<double>(N), -1.0 / d);
    Vec hi(d);
    for (int a = 0; a < d; ++a) hi[a] = m[a] * h;
    Configuration c;
    c.d = d;
    std::vector<int> idx(d, 0);
    for (std::size_t n = 0; n < N; ++n)
    {
        Vec x(d);
        for (int a = 0; a < d; ++a) x[a] = (idx[a] + 0.5) * h;
        c.points.push_back(x);
        for (int a = d - 1; a >= 0; --a)
        {
            if (++idx[a] < m[a]) break;
            idx[a] = 0;
        }
    }
    return {c, BackgroundMeasure::uniform_box(Vec::Zero(d), hi)};
}

/// Regular points spread over the support of mu and moved by up to a quarter
/// of the microscale: sunflower for the disk, midpoints for an interval.
Configuration jittered(const BackgroundMeasure& mu, std::size_t N, std::uint64_t seed)
{
    const int d = mu.d();
    CounterRng rng = CounterRng(seed).split("jitter");
    const double lam = microscale(N, mu.max_density(), d);
    Configuration c;
    c.d = d;
    const Vec lo = mu.bbox_lo(), hi = mu.bbox_hi();
    if (d == 1)
    {
        for (std::size_t i = 0; i < N; ++i)
        {
            Vec x(1);
            x[0] = lo[0] + (hi[0] - lo[0]) * (i + 0.5) / N + 0.25 * lam * rng.uniform(-1.0, 1.0);
            c.points.push_back(x);
        }
        return c;
    }
    if (d == 2 && mu.family() == BackgroundMeasure::Family::UniformBall)
    {
        const double R = 0.5 * (hi[0] - lo[0]);
        const Vec ctr = 0.5 * (lo + hi);
        const double ga = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (std::size_t i = 0; i < N; ++i)
        {
            const double r = R * std::sqrt((i + 0.5) / N), th = i * ga;
            Vec x = ctr + r * axes(2, std::cos(th), std::sin(th));
            x[0] += 0.25 * lam * rng.uniform(-1.0, 1.0);
            x[1] += 0.25 * lam * rng.uniform(-1.0, 1.0);
            c.points.push_back(x);
        }
        return c;
    }
    throw SchemaError("schema: jittered configurations need d = 1 or a disk");
}

std::vector<double> doubles(const json& a)
{
    std::vector<double> v;
    for (const json& x : a) v.push_back(x.get<double>());
    return v;
}

std::vector<std::string> strings(const json& a)
{
    std::vector<std::string> v;
    for (const json& x : a) v.push_back(x.get<std::string>());
    return v;
}

void require_nonempty(const json& a, const std::string& key)
{
    if (a.empty()) throw SchemaError("schema: '" + key + "' must not be empty");
}
}  // namespace

// ---------------------------------------------------------------------------

RunResult run_rate(const ExperimentSpec& spec)
{
    const json& p = spec.params;
    require_nonempty(p["N"], "N");
    require_nonempty(p["seeds"], "seeds");
    const std::string kind = p["configuration"].get<std::string>();
    if (kind != "lattice" && kind != "iid") throw SchemaError("schema: configuration must be 'lattice' or 'iid'");
    RunResult res;
    for (const json& cs : p["cases"])
    {
        const auto t0 = Clock::now();
        const RieszKernel K = kernel_of(cs);
        const int d = K.d;
        const double target = K.s / d - 1.0;
        const std::string name = "rate_d" + std::to_string(d) + "_s" + tag(K.s);
        Csv csv(spec, name + ".csv", {"N", "seed", "F_N", "corrected", "lambda"});
        std::vector<double> lx, ly, ly_add;
        for (const json& jn : p["N"])
        {
            const std::size_t N = jn.get<std::size_t>();
            const double Nd = static_cast<double>(N);
            double sum = 0.0, sum_add = 0.0;
            std::size_t count = 0;
            for (const json& js : p["seeds"])
            {
                const std::uint64_t seed = js.get<std::uint64_t>();
                Configuration c;
                BackgroundMeasure mu = BackgroundMeasure::uniform_box(Vec::Zero(d), Vec::Ones(d));
                if (kind == "lattice")
                    std::tie(c, mu) = lattice(N, d);
                else
                    c = mu.sample(N, stream(seed, "rate", N));
                const double F = modulated_energy(c, mu, K).F_N;
                const double lam = microscale(N, mu.max_density(), d);
                // s = 0: the log N factor is divided out
                const double corrected = K.s == 0.0 ? F / std::log(Nd) : F;
                const double additive = K.s == 0.0 ? F + std::log(Nd * mu.max_density()) / (2.0 * Nd * d) : F;
                csv.row({num(N), num(static_cast<std::size_t>(seed)), num(F), num(corrected), num(lam)});
                sum += corrected;
                sum_add += additive;
                ++count;
                if (kind == "lattice") break;  // deterministic: one row per N
            }
            lx.push_back(std::log(Nd));
            ly.push_back(std::log(std::abs(sum / count)));
            ly_add.push_back(std::log(std::abs(sum_add / count)));
        }
        const SlopeFit fit = fit_slope(lx, ly);
        const double tol = p["tolerances"][K.s == 0.0 ? "slope_log" : "slope"].get<double>();
        std::ostringstream det;
        det << "d=" << d << " s=" << K.s << " slope " << fit.slope << " target " << target << " stderr "
            << fit.stderr_slope;
        json jc = {{"d", d}, {"s", K.s}, {"target", target}, {"fit", fit.to_json()}};
        if (K.s == 0.0)
        {
            const SlopeFit fa = fit_slope(lx, ly_add);
            jc["fit_additive_log"] = fa.to_json();
            det << " (additive log correction: " << fa.slope << ")";
        }
        res.data["cases"].push_back(jc);
        Check ck =
            check("slope " + name, "rate", std::abs(fit.slope - target) <= tol, fit.slope - target, tol, det.str());
        ck.seconds = since(t0);
        res.checks.push_back(ck);
    }
    return res;
}

// ---------------------------------------------------------------------------

RunResult run_transport_deriv(const ExperimentSpec& spec)
{
    const json& p = spec.params;
    const std::size_t N = p["N"].get<std::size_t>();
    const json& tol = p["tolerances"];
    const double tol1 = tol["n1"].get<double>(), tol2 = tol["n2"].get<double>(), told = tol["dilation"].get<double>();
    Csv csv(spec, "transport_deriv.csv",
            {"d", "s", "field", "seed", "n", "transport_form", "fd_derivative", "rel_error", "closed_form",
             "closed_error"});
    double worst[2] = {0.0, 0.0}, worst_dil = 0.0;
    std::string where[2], where_dil;
    std::size_t instances = 0;
    const auto t0 = Clock::now();
    for (const json& cs : p["cases"])
    {
        const RieszKernel K = kernel_of(cs);
        const int d = K.d;
        const BackgroundMeasure mu = measure_of(p["measure"], d);
        const double R = p["measure"]["scale"].get<double>();
        for (const std::string& fname : strings(p["fields"]))
        {
            if (fname != "bump_shear" && fname != "dilation")
                throw SchemaError("schema: transport-deriv fields are 'bump_shear' and 'dilation'");
            for (const json& js : p["seeds"])
            {
                const std::uint64_t seed = js.get<std::uint64_t>();
                const Configuration c = mu.sample(N, stream(seed, "transport-deriv", N));
                TransportField v = TransportField::dilation(d);
                if (fname == "bump_shear")
                {
                    CounterRng rng = CounterRng(seed).split("bump_shear");
                    const Vec x0 = 0.4 * R * rng.uniform() * unit_vector(rng, d);
                    const double ell = R * rng.uniform(0.6, 1.0);
                    v = TransportField::bump_shear(x0, ell, 0.6 * unit_vector(rng, d));
                }
                const TransportForm tf[2] = {transport_form(1, c, mu, K, v), transport_form(2, c, mu, K, v)};
                const std::vector<FdDerivative> fd = fd_energy_derivatives(2, c, mu, K, v);
                double closed[2] = {0.0, 0.0};
                if (fname == "dilation")
                {
                    const double F = modulated_energy(c, mu, K).F_N;
                    if (K.s == 0.0)
                        closed[0] = 0.5 / N, closed[1] = -0.5 / N;
                    else
                        closed[0] = -K.s * F, closed[1] = K.s * (K.s + 1.0) * F;
                }
                ++instances;
                for (int n = 0; n < 2; ++n)
                {
                    const double deriv = 0.5 * tf[n].value;  // d^n F_N / dt^n
                    const double err = std::abs(fd[n].value - deriv) / std::abs(deriv);
                    std::ostringstream row;
                    row << "d=" << d << " s=" << K.s << " " << fname << " seed " << seed << " n=" << n + 1;
                    if (!(err <= worst[n])) worst[n] = err, where[n] = row.str();
                    double cerr = std::numeric_limits<double>::quiet_NaN();
                    if (fname == "dilation")
                    {
                        cerr = std::abs(deriv - closed[n]) / std::abs(closed[n]);
                        if (!(cerr <= worst_dil)) worst_dil = cerr, where_dil = row.str();
                    }
                    csv.row({num(d), num(K.s), fname, num(static_cast<std::size_t>(seed)), num(n + 1), num(tf[n].value),
                             num(fd[n].value), num(err), fname == "dilation" ? num(2.0 * closed[n]) : "",
                             fname == "dilation" ? num(cerr) : ""});
                }
            }
        }
    }
    RunResult res;
    const double secs = since(t0);
    res.checks.push_back(
        check("fd vs transport form, n = 1", "transport", worst[0] <= tol1, worst[0], tol1, "worst: " + where[0]));
    res.checks.push_back(
        check("fd vs transport form, n = 2", "transport", worst[1] <= tol2, worst[1], tol2, "worst: " + where[1]));
    if (!where_dil.empty())
        res.checks.push_back(
            check("dilation closed form", "transport", worst_dil <= told, worst_dil, told, "worst: " + where_dil));
    for (Check& c : res.checks) c.seconds = secs;
    res.data["instances"] = instances;
    return res;
}

// ---------------------------------------------------------------------------

RunResult run_identity(const ExperimentSpec& spec)
{
    const json& p = spec.params;
    const json& tol = p["tolerances"];
    const std::vector<std::string> names = strings(p["checks"]);
    require_nonempty(p["checks"], "checks");
    for (const std::string& n : names)
        if (n != "electric" && n != "monotonicity" && n != "smeared" && n != "mollifier" && n != "smear_normalization")
            throw SchemaError("schema: unknown identity check '" + n +
                              "' (electric, monotonicity, smeared, mollifier, smear_normalization)");
    auto wants = [&](const std::string& n) { return std::find(names.begin(), names.end(), n) != names.end(); };
    const std::size_t N = p["N"].get<std::size_t>();
    const int configs = p["configs"].get<int>();
    const std::uint64_t seed = p["seed"].get<std::uint64_t>();
    const double eta = p["eta"].get<double>();
    const int M = p["smear_nodes"].get<int>();
    RunResult res;

    if (wants("electric") || wants("monotonicity"))
    {
        Csv csv(spec, "identity_configs.csv",
                {"d", "s", "config", "F_N", "truncated_error", "F_alpha", "F_alpha_grown"});
        double worst_e = 0.0, worst_m = -std::numeric_limits<double>::infinity();
        std::string we, wm;
        const double growth = p["growth"].get<double>();
        const auto t0 = Clock::now();
        for (const json& cs : p["cases"])
        {
            const RieszKernel K = kernel_of(cs);
            const BackgroundMeasure mu = measure_of(p["measure"], K.d);
            const Region whole = Region::whole(K.d);
            for (int k = 0; k < configs; ++k)
            {
                const Configuration c = mu.sample(N, stream(seed, "identity/" + tag(K.d) + "/" + tag(K.s), k));
                CounterRng rng = CounterRng(seed).split("radii").split(static_cast<std::uint64_t>(k));
                const std::vector<double> r = nn_radii(c, mu);
                const double F = modulated_energy(c, mu, K).F_N;
                const double Fr = truncated_functional(c, mu, K, r, whole);
                std::ostringstream row;
                row << "d=" << K.d << " s=" << K.s << " config " << k;
                double err = 0.0;
                if (wants("electric"))
                {
                    std::vector<double> half = r, rnd = r;
                    for (double& a : half) a *= 0.5;
                    for (double& a : rnd) a *= rng.uniform(0.01, 1.0);
                    for (double Fa :
                         {Fr, truncated_functional(c, mu, K, half, whole), truncated_functional(c, mu, K, rnd, whole)})
                        err = std::max(err, std::abs(Fa - F) / std::max(1.0, std::abs(F)));
                    if (!(err <= worst_e)) worst_e = err, we = row.str();
                }
                double Fg = std::numeric_limits<double>::quiet_NaN();
                if (wants("monotonicity"))
                {
                    std::vector<double> grown = r;
                    for (double& a : grown) a *= 1.0 + growth * rng.uniform();
                    Fg = truncated_functional(c, mu, K, grown, whole);
                    if (!(Fg - Fr <= worst_m)) worst_m = Fg - Fr, wm = row.str();
                }
                csv.row({num(K.d), num(K.s), num(k), num(F), num(err), num(Fr), num(Fg)});
            }
        }
        const double secs = since(t0);
        if (wants("electric"))
        {
            const double t = tol["electric"].get<double>();
            res.checks.push_back(check("truncated functional equals F_N for alpha <= r", "electric", worst_e <= t,
                                       worst_e, t, "worst: " + we));
            res.checks.back().seconds = secs;
        }
        if (wants("monotonicity"))
        {
            const double t = tol["monotonicity"].get<double>();
            res.checks.push_back(check("truncated functional nonincreasing in alpha", "electric", worst_m <= t, worst_m,
                                       t, "largest increase F^alpha' - F^alpha at " + wm));
            res.checks.back().seconds = secs;
        }
    }

    if (wants("smeared"))
    {
        const auto t0 = Clock::now();
        const double t = tol["smeared"].get<double>();
        Csv csv(spec, "identity_smeared.csv", {"d", "s", "r_over_eta", "potential", "g_eta", "error"});
        double worst = 0.0;
        std::string where;
        for (const json& cs : p["cases"])
        {
            const RieszKernel K = kernel_of(cs);
            const SmearNodes sn = smear_nodes(K, Vec::Zero(K.d), eta, M);
            CounterRng rng = CounterRng(seed).split("smeared");
            // stay 0.3 eta away from the sphere, where the rule converges geometrically
            for (double q : {0.0, 0.2, 0.5, 0.7, 1.3, 2.0, 4.0})
            {
                Vec y = Vec::Zero(K.D());
                y.head(K.d) = q * eta * unit_vector(rng, K.d);
                double pot = 0.0;
                for (std::size_t i = 0; i < sn.points.size(); ++i)
                    pot += sn.weights[i] * K.g((y - sn.points[i]).norm());
                const double ge = K.g_eta(q * eta, eta);
                const double err = std::abs(pot - ge) / (1.0 + std::abs(ge));
                csv.row({num(K.d), num(K.s), num(q), num(pot), num(ge), num(err)});
                if (!(err <= worst))
                {
                    std::ostringstream row;
                    row << "d=" << K.d << " s=" << K.s << " |x|/eta=" << q;
                    worst = err, where = row.str();
                }
            }
        }
        res.checks.push_back(
            check("smeared potential equals g_eta", "electric", worst <= t, worst, t, "worst: " + where));
        res.checks.back().seconds = since(t0);
    }

    if (wants("mollifier"))
    {
        const auto t0 = Clock::now();
        const json& mj = p["mollifier"];
        const int m = mj["m"].get<int>();
        const double meta = mj["eta"].get<double>();
        if (mj["grid"].size() < mj["dims"].size()) throw SchemaError("schema: mollifier.grid needs one entry per dim");
        Csv csv(spec, "mollifier.csv", {"d", "m", "grid", "mass", "max_first", "max_second"});
        double wmass = 0.0, wmom = 0.0;
        for (std::size_t i = 0; i < mj["dims"].size(); ++i)
        {
            const int d = mj["dims"][i].get<int>();
            const int n = mj["grid"][i].get<int>();
            const TableMoments tm = table_moments(Mollifier(d, m, meta).tabulate(n));
            const double first = tm.first.cwiseAbs().maxCoeff(), second = tm.second.cwiseAbs().maxCoeff();
            csv.row({num(d), num(m), num(n), num(tm.mass), num(first), num(second)});
            wmass = std::max(wmass, std::abs(tm.mass - 1.0));
            if (m >= 1) wmom = std::max(wmom, first);
            if (m >= 2) wmom = std::max(wmom, second);
        }
        const double secs = since(t0);
        const double tm = tol["mollifier_mass"].get<double>(), tv = tol["mollifier_moments"].get<double>();
        res.checks.push_back(check("mollifier unit mass", "mollifier", wmass <= tm, wmass, tm));
        res.checks.push_back(
            check("mollifier moments 1.." + std::to_string(m) + " vanish", "mollifier", wmom <= tv, wmom, tv));
        for (std::size_t i = res.checks.size() - 2; i < res.checks.size(); ++i) res.checks[i].seconds = secs;
    }

    if (wants("smear_normalization"))
    {
        const auto t0 = Clock::now();
        const double t = tol["smear_normalization"].get<double>();
        double worst = 0.0;
        std::string where;
        for (const json& cs : p["cases"])
        {
            const RieszKernel K = kernel_of(cs);
            for (int nodes : {8, 16, M})
                for (double e : {0.1, eta, 2.0})
                {
                    const SmearNodes sn = smear_nodes(K, Vec::Ones(K.d), e, nodes);
                    double sum = 0.0;
                    for (double w : sn.weights) sum += w;
                    if (!(std::abs(sum - 1.0) <= worst))
                    {
                        std::ostringstream row;
                        row << "d=" << K.d << " s=" << K.s << " M=" << nodes << " eta=" << e;
                        worst = std::abs(sum - 1.0), where = row.str();
                    }
                }
        }
        res.checks.push_back(
            check("smear_nodes weights sum to 1", "mollifier", worst <= t, worst, t, "worst: " + where));
        res.checks.back().seconds = since(t0);
    }
    return res;
}

// ---------------------------------------------------------------------------

RunResult run_fi(const ExperimentSpec& spec)
{
    const json& p = spec.params;
    const RieszKernel K = kernel_of(p["kernel"]);
    const int d = K.d;
    const BackgroundMeasure mu = measure_of(p["measure"], d);
    const Region whole = Region::whole(d);
    require_nonempty(p["N"], "N");
    if (p["configs"].size() != p["N"].size() || p["calibration_configs"].size() != p["N"].size())
        throw SchemaError("schema: 'configs' and 'calibration_configs' need one entry per N");
    const std::uint64_t seed = p["seed"].get<std::uint64_t>();
    const int every = p["jittered_every"].get<int>();
    const double safety = p["safety"].get<double>();
    if (!(safety >= 1.0)) throw SchemaError("schema: safety must be >= 1");
    const std::vector<std::string> fnames = strings(p["fields"]);
    require_nonempty(p["fields"], "fields");
    std::vector<TransportField> fields;
    for (const std::string& n : fnames) fields.push_back(named_field(n, d));

    auto make = [&](std::size_t N, int k, bool calib) {
        const std::uint64_t s = stream(seed, calib ? "fi/calibration" : "fi", N * 100003ULL + k);
        const bool jit = every > 0 && k % every == every - 1;
        return std::pair{jit ? jittered(mu, N, s) : mu.sample(N, s), jit};
    };

    const auto t0 = Clock::now();
    std::vector<XiParts> cal;
    for (std::size_t a = 0; a < p["N"].size(); ++a)
    {
        const std::size_t N = p["N"][a].get<std::size_t>();
        for (int k = 0; k < p["calibration_configs"][a].get<int>(); ++k)
            cal.push_back(xi_bracket(make(N, k, true).first, mu, K, whole, 1.0));
    }
    const double C0 = calibrate_xi_constant(cal);
    const double C = C0 > 0.0 ? safety * C0 : 1.0;

    Csv csv(spec, "fi.csv",
            {"N", "config", "kind", "field", "lhs", "grad_v", "F_N", "log_term", "unit_error", "bracket", "ratio"});
    std::vector<std::optional<double>> mm(fields.size());
    std::vector<double> cemp;
    double min_bracket = std::numeric_limits<double>::infinity();
    std::string where_min;
    std::size_t instances = 0;
    bool finite = true;
    for (std::size_t a = 0; a < p["N"].size(); ++a)
    {
        const std::size_t N = p["N"][a].get<std::size_t>();
        double best = 0.0;
        for (int k = 0; k < p["configs"][a].get<int>(); ++k)
        {
            const auto [c, jit] = make(N, k, false);
            const XiParts xb = xi_bracket(c, mu, K, whole, C);
            if (!(xb.xi >= min_bracket))
            {
                min_bracket = xb.xi;
                where_min = "N=" + std::to_string(N) + " config " + std::to_string(k);
            }
            for (std::size_t f = 0; f < fields.size(); ++f)
            {
                TransportFormOptions opt;
                opt.measure_term = mm[f];
                const TransportForm tf = transport_form(1, c, mu, K, fields[f], opt);
                mm[f] = tf.mm;
                const double lip = fields[f].sup_norm(1);
                const double q = std::abs(tf.value) / (lip * xb.xi);
                finite = finite && std::isfinite(q) && xb.xi > 0.0;
                best = std::max(best, q);
                ++instances;
                csv.row({num(N), num(k), jit ? "jittered" : "iid", fnames[f], num(std::abs(tf.value)), num(lip),
                         num(xb.F_local), num(xb.log_term), num(xb.unit_error), num(xb.xi), num(q)});
            }
        }
        cemp.push_back(best);
    }
    const double secs = since(t0);
    const double cmax = *std::max_element(cemp.begin(), cemp.end());
    const double cmin = *std::min_element(cemp.begin(), cemp.end());
    const double spread = cmax / cmin;
    const double tol = p["tolerances"]["c_emp_spread"].get<double>();
    RunResult res;
    res.data = {{"C_calibrated_min", C0}, {"C", C}, {"safety", safety}, {"C_emp", cmax}, {"instances", instances}};
    for (std::size_t a = 0; a < cemp.size(); ++a)
        res.data["C_emp_by_N"].push_back({{"N", p["N"][a]}, {"C_emp", cemp[a]}});
    std::ostringstream det;
    det << "C = " << C << " (calibrated " << C0 << " x " << safety << "); min bracket at " << where_min;
    res.checks.push_back(check("bracket nonnegative", "fi", min_bracket >= 0.0, min_bracket, 0.0, det.str()));
    std::ostringstream d2;
    d2 << "C_emp = " << cmax << " over " << instances << " instances";
    res.checks.push_back(check("single finite C_emp", "fi", finite, cmax, 0.0, d2.str()));
    std::ostringstream d3;
    d3 << "C_emp by N:";
    for (std::size_t a = 0; a < cemp.size(); ++a) d3 << " " << p["N"][a].get<std::size_t>() << ":" << cemp[a];
    res.checks.push_back(check("C_emp stable across N", "fi", spread <= tol, spread, tol, d3.str()));
    for (Check& c : res.checks) c.seconds = secs;
    return res;
}

// ---------------------------------------------------------------------------

RunResult run_commutator_identities(const ExperimentSpec& spec)
{
    const json& p = spec.params;
    const RieszKernel K = kernel_of(p["kernel"]);
    const int d = K.d;
    const json& tol = p["tolerances"];
    const double tres = tol["residual"].get<double>(), tst = tol["stress"].get<double>(),
                 trot = tol["rotation"].get<double>();
    CommutatorOptions co;
    co.polar = {p["polar"][0].get<int>(), p["polar"][1].get<int>(), p["polar"][2].get<int>()};
    const SignedSource f = bumps_of(p["f"], d), w = bumps_of(p["w"], d);
    const int order = p["order"].get<int>();
    std::vector<ExtendedPoint> pts;
    for (const json& q : p["points"])
    {
        const Vec y = vec_of(q);
        if (y.size() == d)
            pts.push_back({y, Vec::Zero(K.k)});
        else if (y.size() == d + K.k)
            pts.push_back({y.head(d), y.tail(K.k)});
        else
            throw SchemaError("schema: points need d or d + k coordinates");
    }
    RunResult res;

    auto t0 = Clock::now();
    const ExtendedField vt(bump_field_of(p["recursion_field"]), K.k, 1.0);
    const ResidualTable tab = recursion_residuals(order, f, vt, K, pts, 0.0, co);
    if (!spec.out_dir.empty())
        tab.save_csv((std::filesystem::path(spec.out_dir) / "commutator_residuals.csv").string());
    double secs = since(t0);
    for (const std::string id : {"nu", "mu", "hierarchy"})
    {
        const double r = tab.max_relative(id);
        res.checks.push_back(check("residual " + id, "commutator", r <= tres, r, tres));
        res.checks.back().seconds = secs;
    }
    res.data["hierarchy_literal"] = tab.max_relative("hierarchy-literal");

    t0 = Clock::now();
    IdentityGrid grid;
    grid.lo = vec_of(p["grid"]["lo"]);
    grid.hi = vec_of(p["grid"]["hi"]);
    grid.n = p["grid"]["n"].get<int>();
    const TransportField sv = bump_field_of(p["stress_field"]);
    const FirstOrderIdentities fo = first_order_identities(f, w, sv, K, grid, co);
    secs = since(t0);
    const double srel = std::abs(fo.stress_lhs - fo.stress_rhs) / std::abs(fo.stress_rhs);
    res.data["first_order"] = fo.to_json();
    res.checks.push_back(check("stress identity two routes", "commutator", srel <= tst, srel, tst));
    res.checks.push_back(
        check("divergence form of L kappa^(1)", "commutator", fo.pde_residual <= tres, fo.pde_residual, tres));
    res.checks[res.checks.size() - 1].seconds = res.checks[res.checks.size() - 2].seconds = secs;

    // constant field: every commutator quantity of order >= 1 vanishes exactly
    t0 = Clock::now();
    const TransportField vc = TransportField::affine(Mat::Zero(d, d), axes(d, 0.4, 0.1));
    const ExtendedField vct(vc, K.k, 1.0);
    double zmax = 0.0;
    for (const ExtendedPoint& q : pts)
        for (int n = 1; n <= order; ++n)
        {
            zmax = std::max(zmax, std::abs(kappa_eval(n, f, vct, K, q, 0.0, co)));
            zmax = std::max(zmax, nu_eval(n, f, vct, K, q, 0.0, co).cwiseAbs().maxCoeff());
            zmax = std::max(zmax, mu_eval(n, f, vct, K, q, 0.0, co).cwiseAbs().maxCoeff());
        }
    const ResidualTable ztab = recursion_residuals(order, f, vct, K, pts, 0.0, co);
    double rmax = 0.0;
    for (const ResidualRow& r : ztab.rows)
        if (r.order >= 1 && r.identity != "hierarchy-literal") rmax = std::max(rmax, std::abs(r.residual));
    const json& rot = p["rotation"];
    const BackgroundMeasure disk = BackgroundMeasure::uniform_ball(Vec::Zero(d), 1.0);
    const std::size_t Nr = rot["N"].get<std::size_t>();
    const Configuration c = disk.sample(Nr, stream(rot["seed"].get<std::uint64_t>(), "rotation", Nr));
    const double tf_const =
        std::max(std::abs(transport_form(1, c, disk, K, vc).value), std::abs(transport_form(2, c, disk, K, vc).value));
    const FirstOrderIdentities foc = first_order_identities(f, w, vc, K, grid, co);
    std::ostringstream det;
    det << "fields " << zmax << ", residuals " << rmax << ", transport forms " << tf_const << ", stress rhs "
        << foc.stress_rhs << ", pde " << foc.pde_residual << "; stress lhs (quadrature) " << foc.stress_lhs;
    const double zall = std::max({zmax, rmax, tf_const, std::abs(foc.stress_rhs), foc.pde_residual});
    res.checks.push_back(check("constant field exact zeros", "commutator", zall == 0.0, zall, 0.0, det.str()));
    res.checks.back().seconds = since(t0);

    t0 = Clock::now();
    if (d < 2) throw SchemaError("schema: the rotation check needs d >= 2");
    const double trot_val = std::abs(transport_form(1, c, disk, K, named_field("rotation", d)).value);
    res.checks.push_back(check("rotation kills transport_form(1)", "commutator", trot_val <= trot, trot_val, trot));
    res.checks.back().seconds = since(t0);
    return res;
}

RunResult run_commutator_ratio(const ExperimentSpec& spec)
{
    const json& p = spec.params;
    const RieszKernel K = kernel_of(p["kernel"]);
    const int d = K.d;
    CommutatorOptions co;
    co.polar = {p["polar"][0].get<int>(), p["polar"][1].get<int>(), p["polar"][2].get<int>()};
    WeightedRuleOptions rule;
    rule.n_ang = p["rule"]["n_ang"].get<int>();
    rule.n_rad = p["rule"]["n_rad"].get<int>();
    rule.de_level = p["rule"]["de_level"].get<int>();
    const TransportField v = bump_field_of(p["field"]);
    if (v.d() != d) throw SchemaError("schema: field dimension differs from d");
    const Vec c0 = v.center() + axes(d, 0.05, 0.0);
    const double tol = p["tolerances"]["amplitude"].get<double>();

    struct Instance
    {
        double scale, support;
        SignedSource f;
    };
    std::vector<Instance> family;
    for (double a : doubles(p["scales"]))
        for (double sg : doubles(p["supports"]))
        {
            const Vec off = a * axes(d, 0.25, 0.1);
            family.push_back(
                {a, sg, SignedSource::bumps(d, {c0 - off, c0 + off}, {a * sg * 0.4, a * sg * 0.3}, {1.0, -1.0})});
        }
    require_nonempty(p["scales"], "scales");
    require_nonempty(p["supports"], "supports");

    Csv csv(spec, "commutator_ratio.csv",
            {"instance", "scale", "support", "amplitude", "numerator", "denominator", "ratio"});
    const auto t0 = Clock::now();
    std::vector<double> ratios;
    double worst_amp = 0.0;
    bool finite = true;
    const std::size_t namp = std::min<std::size_t>(p["amplitude_instances"].get<std::size_t>(), family.size());
    for (std::size_t i = 0; i < family.size(); ++i)
    {
        const Instance& in = family[i];
        const CommutatorRatio r = commutator_ratio(in.f, v, K, rule, co);
        csv.row({num(i), num(in.scale), num(in.support), num(1.0), num(r.numerator), num(r.denominator), num(r.ratio)});
        finite = finite && std::isfinite(r.ratio) && r.ratio > 0.0;
        ratios.push_back(r.ratio);
        if (i >= namp) continue;
        for (double amp : doubles(p["amplitudes"]))
        {
            const CommutatorRatio ra = commutator_ratio(in.f.scaled(amp), v, K, rule, co);
            csv.row({num(i), num(in.scale), num(in.support), num(amp), num(ra.numerator), num(ra.denominator),
                     num(ra.ratio)});
            worst_amp = std::max(worst_amp, std::abs(ra.ratio - r.ratio) / r.ratio);
        }
    }
    const double secs = since(t0);
    const double rmax = *std::max_element(ratios.begin(), ratios.end());
    const double rmin = *std::min_element(ratios.begin(), ratios.end());
    RunResult res;
    res.data = {{"max_ratio", rmax}, {"min_ratio", rmin}, {"instances", family.size()}};
    res.checks.push_back(check("ratio invariant under amplitude", "ratio", worst_amp <= tol, worst_amp, tol));
    std::ostringstream det;
    det << "max ratio " << rmax << ", min " << rmin << " over " << family.size() << " instances";
    res.checks.push_back(check("ratio bounded over the family", "ratio", finite, rmax, 0.0, det.str()));
    for (Check& c : res.checks) c.seconds = secs;
    return res;
}

// ---------------------------------------------------------------------------

RunResult run_meanfield(const ExperimentSpec& spec)
{
    const json& p = spec.params;
    const RieszKernel K = kernel_of(p["kernel"]);
    const int d = K.d;
    const json& tol = p["tolerances"];
    const std::vector<std::string> names = strings(p["checks"]);
    for (const std::string& n : names)
        if (n != "envelope" && n != "slope" && n != "energy_monotone" && n != "hamiltonian_order")
            throw SchemaError("schema: unknown meanfield check '" + n +
                              "' (envelope, slope, energy_monotone, hamiltonian_order)");
    auto wants = [&](const std::string& n) { return std::find(names.begin(), names.end(), n) != names.end(); };
    const double dt = p["dt"].get<double>(), T = p["T"].get<double>();
    const int save_every = p["save_every"].get<int>();
    if (!(dt > 0.0) || !(T > 0.0) || save_every < 1) throw SchemaError("schema: dt, T and save_every must be positive");
    RunResult res;

    if (wants("envelope") || wants("slope") || wants("energy_monotone"))
    {
        require_nonempty(p["N"], "N");
        require_nonempty(p["seeds"], "seeds");
        const ReferenceSolution ref = ReferenceSolution::stationary(K);
        const BackgroundMeasure mu0 = ref.measure(0.0);
        const auto t0 = Clock::now();
        struct Run
        {
            std::size_t N;
            std::uint64_t seed;
            Trajectory traj;
            double worst_increase;
        };
        std::vector<Run> runs;
        for (const json& jn : p["N"])
            for (const json& js : p["seeds"])
            {
                const std::size_t N = jn.get<std::size_t>();
                const std::uint64_t seed = js.get<std::uint64_t>();
                FlowSpec fl = ref.flow(dt, T);
                fl.save_every = save_every;
                fl.guard = collision_guard(N, ref.sup_density(0.0), d);
                const Configuration x0 = mu0.sample(N, stream(seed, "meanfield", N));
                double prev = flow_energy(x0, fl), worst = -std::numeric_limits<double>::infinity();
                auto obs = [&](std::size_t, double, const Configuration& c) {
                    const double E = flow_energy(c, fl);
                    worst = std::max(worst, (E - prev) / std::abs(E));
                    prev = E;
                };
                Trajectory tr = wants("energy_monotone") ? integrate(x0, fl, obs) : integrate(x0, fl);
                runs.push_back({N, seed, std::move(tr), worst});
            }
        // C: smallest value making the corrected energy nonnegative on every snapshot, times the safety factor
        double C0 = 0.0;
        for (const Run& r : runs)
        {
            const MeSeries s = me_timeseries(r.traj, ref, 0.0);
            for (const MeRow& row : s.rows)
            {
                const double unit = std::pow(ref.sup_density(row.t), K.s / d) * std::pow(double(r.N), K.s / d - 1.0);
                C0 = std::max(C0, -(row.F_N + row.log_term) / unit);
            }
        }
        const double safety = p["safety"].get<double>();
        const double C = C0 > 0.0 ? safety * C0 : 1.0;
        res.data["C_calibrated_min"] = C0;
        res.data["C"] = C;

        double worst_env = -std::numeric_limits<double>::infinity(),
               worst_inc = -std::numeric_limits<double>::infinity();
        std::string where_env, where_inc;
        std::vector<MeSeries> series;
        for (const Run& r : runs)
        {
            MeSeries s = me_timeseries(r.traj, ref, C);
            if (!spec.out_dir.empty())
                s.save_csv((std::filesystem::path(spec.out_dir) /
                            ("meanfield_N" + std::to_string(r.N) + "_seed" + std::to_string(r.seed) + ".csv"))
                               .string());
            const std::string id = "N=" + std::to_string(r.N) + " seed " + std::to_string(r.seed);
            for (const MeRow& row : s.rows)
            {
                const double excess = (row.corrected - row.envelope) / std::abs(row.envelope);
                if (!(excess <= worst_env)) worst_env = excess, where_env = id + " t=" + num(row.t);
            }
            if (!(r.worst_increase <= worst_inc)) worst_inc = r.worst_increase, where_inc = id;
            series.push_back(std::move(s));
        }
        const double secs = since(t0);
        if (wants("envelope"))
        {
            bool inside = true;
            for (const MeSeries& s : series) inside = inside && s.inside_envelope(1e-12);
            res.checks.push_back(check("corrected energy inside the Gronwall envelope", "meanfield", inside, worst_env,
                                       1e-12, "largest (corrected - envelope)/envelope at " + where_env));
            res.checks.back().seconds = secs;
        }
        if (wants("slope"))
        {
            const double target = K.s / d - 1.0, t_slope = tol["slope"].get<double>();
            Csv csv(spec, "meanfield_slope.csv", {"t", "N", "mean_F_N", "mean_corrected"});
            for (double ts : doubles(p["slope_times"]))
            {
                std::vector<double> lx, ly;
                for (const json& jn : p["N"])
                {
                    const std::size_t N = jn.get<std::size_t>();
                    double sum = 0.0, sumF = 0.0;
                    std::size_t cnt = 0;
                    for (std::size_t k = 0; k < runs.size(); ++k)
                    {
                        if (runs[k].N != N) continue;
                        auto it = std::find_if(series[k].rows.begin(), series[k].rows.end(), [&](const MeRow& r) {
                            return std::abs(r.t - ts) <= 1e-9 * std::max(1.0, T);
                        });
                        if (it == series[k].rows.end())
                            throw SchemaError("schema: slope time " + num(ts) + " is not a saved time");
                        sum += it->corrected;
                        sumF += it->F_N;
                        ++cnt;
                    }
                    csv.row({num(ts), num(N), num(sumF / cnt), num(sum / cnt)});
                    lx.push_back(std::log(double(N)));
                    ly.push_back(std::log(std::abs(sum / cnt)));
                }
                const SlopeFit fit = fit_slope(lx, ly);
                res.data["slopes"].push_back({{"t", ts}, {"fit", fit.to_json()}});
                std::ostringstream det;
                det << "slope " << fit.slope << " (stderr " << fit.stderr_slope << "), target " << target;
                res.checks.push_back(check("N-slope of corrected energy at t=" + tag(ts), "meanfield",
                                           std::abs(fit.slope - target) <= t_slope, fit.slope - target, t_slope,
                                           det.str()));
                res.checks.back().seconds = secs;
            }
        }
        if (wants("energy_monotone"))
        {
            const double t = tol["energy_step"].get<double>();
            res.checks.push_back(check("energy nonincreasing per step", "dynamics", worst_inc <= t, worst_inc, t,
                                       "largest relative increase at " + where_inc));
            res.checks.back().seconds = secs;
        }
    }

    if (wants("hamiltonian_order"))
    {
        if (d < 2) throw SchemaError("schema: the Hamiltonian check needs d >= 2");
        const auto t0 = Clock::now();
        const json& h = p["hamiltonian"];
        const std::size_t N = h["N"].get<std::size_t>();
        const std::vector<double> steps = doubles(h["dt"]);
        if (steps.size() < 3) throw SchemaError("schema: hamiltonian.dt needs at least 3 step sizes");
        require_nonempty(h["seeds"], "hamiltonian.seeds");
        const BackgroundMeasure disk = BackgroundMeasure::uniform_ball(Vec::Zero(d), 1.0);
        FlowSpec fl;
        fl.kernel = K;
        Mat J = Mat::Zero(d, d);
        J(0, 1) = 1.0;
        J(1, 0) = -1.0;
        fl.M = J;
        fl.V = TransportField::affine(Mat::Zero(d, d), Vec::Zero(d));
        fl.T = h["T"].get<double>();
        fl.save_every = std::numeric_limits<int>::max();
        auto gap = [](const Configuration& a, const Configuration& b) {
            double e = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, (a[i] - b[i]).norm());
            return e;
        };
        Csv csv(spec, "hamiltonian.csv", {"seed", "dt", "max_energy_drift", "ratio"});
        std::vector<double> last;
        std::ostringstream det;
        const std::size_t n = steps.size();
        for (const json& js : h["seeds"])
        {
            const std::uint64_t seed = js.get<std::uint64_t>();
            const Configuration x0 = disk.sample(N, stream(seed, "hamiltonian", N));
            const double E0 = flow_energy(x0, fl);
            std::vector<double> drift;
            std::vector<Configuration> finals;
            for (double step : steps)
            {
                fl.dt = step;
                double m = 0.0;
                const Trajectory tr = integrate(x0, fl, [&](std::size_t, double, const Configuration& c) {
                    m = std::max(m, std::abs(flow_energy(c, fl) - E0));
                });
                drift.push_back(m);
                finals.push_back(tr.snapshots.back());
                csv.row({num(static_cast<std::size_t>(seed)), num(step), num(m),
                         drift.size() > 1 ? num(drift[drift.size() - 2] / m) : ""});
            }
            const double ratio = drift[n - 2] / drift[n - 1];
            const double pos = gap(finals[n - 3], finals[n - 2]) / gap(finals[n - 2], finals[n - 1]);
            last.push_back(ratio);
            res.data["hamiltonian"].push_back(
                {{"seed", seed}, {"dt", steps}, {"drift", drift}, {"ratio", ratio}, {"position_ratio", pos}});
            det << " seed " << seed << ": " << ratio << " (positions " << pos << ");";
        }
        std::vector<double> sorted = last;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t m = sorted.size();
        const double median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
        const double t = tol["hamiltonian_ratio"].get<double>();
        res.checks.push_back(check("Hamiltonian drift halving ratio near 16 (median over seeds)", "dynamics",
                                   std::abs(median / 16.0 - 1.0) <= t, median, t,
                                   "finest-pair energy drift ratios:" + det.str()));
        res.checks.back().seconds = since(t0);
    }
    return res;
}

// ---------------------------------------------------------------------------

RunResult run_calibrate(const ExperimentSpec& spec)
{
    const json& p = spec.params;
    const RieszKernel K = kernel_of(p["kernel"]);
    const BackgroundMeasure mu = measure_of(p["measure"], K.d);
    const Region whole = Region::whole(K.d);
    require_nonempty(p["N"], "N");
    require_nonempty(p["seeds"], "seeds");
    const auto t0 = Clock::now();
    Csv csv(spec, "calibrate.csv", {"N", "seed", "F_N", "log_term", "unit_error", "required_C"});
    std::vector<XiParts> parts;
    for (const json& jn : p["N"])
        for (const json& js : p["seeds"])
        {
            const std::size_t N = jn.get<std::size_t>();
            const std::uint64_t seed = js.get<std::uint64_t>();
            const XiParts x = xi_bracket(mu.sample(N, stream(seed, "calibrate", N)), mu, K, whole, 1.0);
            parts.push_back(x);
            csv.row({num(N), num(static_cast<std::size_t>(seed)), num(x.F_local), num(x.log_term), num(x.unit_error),
                     num(-(x.F_local + x.log_term) / x.unit_error)});
        }
    const double C0 = calibrate_xi_constant(parts);
    const double safety = p["safety"].get<double>();
    const double C = C0 > 0.0 ? safety * C0 : 1.0;
    double minb = std::numeric_limits<double>::infinity();
    for (const XiParts& x : parts) minb = std::min(minb, x.F_local + x.log_term + C * x.unit_error);
    RunResult res;
    res.data = {{"C_calibrated_min", C0}, {"C", C}, {"safety", safety}, {"samples", parts.size()}};
    res.checks.push_back(
        check("bracket nonnegative with calibrated C", "calibrate", minb >= 0.0, minb, 0.0, "C = " + num(C)));
    res.checks.back().seconds = since(t0);
    return res;
}

}  // namespace rlab::harness
