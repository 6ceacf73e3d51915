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


#include "rlab/dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "rlab/energy.hpp"

namespace rlab
{
namespace
{
bool symmetric(const Mat& A, double tol = 1e-14)
{
    return (A - A.transpose()).norm() <= tol * std::max(1.0, A.norm());
}

double spectral_norm(const Mat& A)
{
    Eigen::SelfAdjointEigenSolver<Mat> es(A.transpose() * A);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

// positions packed as x[i * d + a]
std::vector<double> pack(const Configuration& c)
{
    const int d = c.d;
    std::vector<double> x(c.size() * d);
    for (std::size_t i = 0; i < c.size(); ++i)
        for (int a = 0; a < d; ++a) x[i * d + a] = c.points[i](a);
    return x;
}

void unpack(const std::vector<double>& x, Configuration& c)
{
    const int d = c.d;
    for (std::size_t i = 0; i < c.size(); ++i)
        for (int a = 0; a < d; ++a) c.points[i](a) = x[i * d + a];
}

struct Stepper
{
    const FlowSpec& flow;
    int d;
    std::size_t n;
    Mat V_A;  // affine V: value = V_A^T x + V_b (jacobian convention)
    Vec V_b;
    bool affine_V;

    explicit Stepper(const FlowSpec& f, int dim, std::size_t N) : flow(f), d(dim), n(N)
    {
        const auto fam = f.V.family();
        affine_V = fam != TransportField::Family::BumpShear && fam != TransportField::Family::User;
        if (affine_V)
        {
            const Vec zero = Vec::Zero(d);
            V_A = f.V.jacobian(zero);
            V_b = f.V.value(zero);
        }
    }

    // -|X|^{-s-2}: grad g(X) = factor * X
    double factor(double r2) const
    {
        const double s = flow.kernel.s;
        if (s == 0.0) return -1.0 / r2;
        if (s == 1.0) return -1.0 / (r2 * std::sqrt(r2));
        return -std::pow(r2, -0.5 * s - 1.0);
    }

    // velocities into out; returns the min squared gap
    double eval(const std::vector<double>& x, std::vector<double>& out) const
    {
        const double invN = 1.0 / static_cast<double>(n);
        double min_r2 = std::numeric_limits<double>::infinity();
        const std::ptrdiff_t N = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) reduction(min : min_r2) if (flow.parallel)
        for (std::ptrdiff_t i = 0; i < N; ++i)
        {
            double acc[4] = {0, 0, 0, 0};
            const double* xi = &x[i * d];
            for (std::ptrdiff_t j = 0; j < N; ++j)
            {
                if (j == i) continue;
                const double* xj = &x[j * d];
                double X[4], r2 = 0.0;
                for (int a = 0; a < d; ++a)
                {
                    X[a] = xi[a] - xj[a];
                    r2 += X[a] * X[a];
                }
                min_r2 = std::min(min_r2, r2);
                const double f = factor(r2);
                for (int a = 0; a < d; ++a) acc[a] += f * X[a];
            }
            Vec F(d), P(d);
            for (int a = 0; a < d; ++a) F(a) = acc[a] * invN, P(a) = xi[a];
            const Vec Vx = affine_V ? Vec(V_A.transpose() * P + V_b) : flow.V.value(P);
            const Vec u = flow.M * F - Vx;
            for (int a = 0; a < d; ++a) out[i * d + a] = u(a);
        }
        return min_r2;
    }
};

bool all_finite(const std::vector<double>& v)
{
    return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}
}  // namespace

bool repulsive(const Mat& M, double tol)
{
    if (M.rows() != M.cols() || M.rows() == 0) return false;
    const Mat S = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(S);
    return es.eigenvalues().maxCoeff() <= tol * std::max(1.0, M.norm());
}

void FlowSpec::validate() const
{
    const int d = kernel.d;
    if (M.rows() != d || M.cols() != d) throw ParameterError("flow: M must be d x d");
    if (V.d() != d) throw ParameterError("flow: external field has the wrong dimension");
    if (!repulsive(M)) throw ParameterError("flow: M xi . xi <= 0 fails (symmetric part has a positive eigenvalue)");
    if (!(dt > 0.0) || !(T >= 0.0)) throw ParameterError("flow: need dt > 0 and T >= 0");
    if (save_every < 1) throw ParameterError("flow: save_every must be >= 1");
    if (scheme != "rk4") throw ParameterError("flow: unknown scheme '" + scheme + "' (only rk4)");
    if (guard < 0.0) throw ParameterError("flow: guard must be >= 0");
}

bool FlowSpec::has_potential() const
{
    const auto fam = V.family();
    if (fam == TransportField::Family::BumpShear || fam == TransportField::Family::User) return false;
    return symmetric(V.jacobian(Vec::Zero(V.d())));
}

double FlowSpec::potential(const Vec& x) const
{
    if (!has_potential()) throw CapabilityError("flow: external field has no known potential");
    const Vec zero = Vec::Zero(V.d());
    const Mat A = V.jacobian(zero);
    return 0.5 * x.dot(A * x) + V.value(zero).dot(x);
}

double collision_guard(std::size_t N, double sup_density, int d, double factor)
{
    return factor * microscale(N, sup_density, d);
}

void Trajectory::save_csv(const std::string& path) const
{
    std::ofstream os(path);
    if (!os) throw ParameterError("cannot write " + path);
    os << std::setprecision(17);
    const int d = snapshots.empty() ? 1 : snapshots.front().d;
    os << "t,i";
    for (int a = 0; a < d; ++a) os << ",x" << a + 1;
    os << "\n";
    for (std::size_t k = 0; k < snapshots.size(); ++k)
        for (std::size_t i = 0; i < snapshots[k].size(); ++i)
        {
            os << times[k] << "," << i;
            for (int a = 0; a < d; ++a) os << "," << snapshots[k].points[i](a);
            os << "\n";
        }
}

std::vector<Vec> flow_velocity(const Configuration& c, const FlowSpec& flow)
{
    flow.validate();
    const Stepper st(flow, c.d, c.size());
    const std::vector<double> x = pack(c);
    std::vector<double> u(x.size());
    st.eval(x, u);
    std::vector<Vec> out(c.size(), Vec(c.d));
    for (std::size_t i = 0; i < c.size(); ++i)
        for (int a = 0; a < c.d; ++a) out[i](a) = u[i * c.d + a];
    return out;
}

Trajectory integrate(const Configuration& x0, const FlowSpec& flow,
                     const std::function<void(std::size_t, double, const Configuration&)>& observer)
{
    flow.validate();
    validate(x0);
    if (x0.d != flow.kernel.d) throw ParameterError("integrate: configuration and kernel dimensions differ");
    const std::size_t steps = static_cast<std::size_t>(std::llround(flow.T / flow.dt));
    if (std::abs(steps * flow.dt - flow.T) > 1e-9 * std::max(1.0, flow.T))
        throw ParameterError("integrate: T must be a multiple of dt");

    const int d = x0.d;
    const Stepper st(flow, d, x0.size());
    std::vector<double> x = pack(x0), k1(x.size()), k2(x.size()), k3(x.size()), k4(x.size()), y(x.size());
    Configuration cur = x0;
    Trajectory tr;
    auto check_gap = [&](double r2, double t) {
        const double gap = std::sqrt(r2);
        if (flow.guard > 0.0 && gap < flow.guard)
        {
            // locate the pair for the diagnostics
            std::size_t bi = 0, bj = 0;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < cur.size(); ++i)
                for (std::size_t j = i + 1; j < cur.size(); ++j)
                {
                    const double r = (cur.points[i] - cur.points[j]).norm();
                    if (r < best) best = r, bi = i, bj = j;
                }
            std::ostringstream os;
            os << "collision guard: gap " << gap << " < " << flow.guard << " between particles " << bi << " and "
               << bj << " at t = " << t;
            throw CollisionError(os.str(), t, gap, bi, bj);
        }
        return gap;
    };

    double r2 = st.eval(x, k1);
    tr.times.push_back(0.0);
    tr.snapshots.push_back(cur);
    tr.min_gaps.push_back(check_gap(r2, 0.0));
    const double h = flow.dt;
    for (std::size_t s = 1; s <= steps; ++s)
    {
        const double t = s * h;
        // k1 holds the velocity at x from the previous evaluation
        for (std::size_t q = 0; q < x.size(); ++q) y[q] = x[q] + 0.5 * h * k1[q];
        st.eval(y, k2);
        for (std::size_t q = 0; q < x.size(); ++q) y[q] = x[q] + 0.5 * h * k2[q];
        st.eval(y, k3);
        for (std::size_t q = 0; q < x.size(); ++q) y[q] = x[q] + h * k3[q];
        st.eval(y, k4);
        if (!all_finite(k2) || !all_finite(k3) || !all_finite(k4))
            throw ResolutionError("integrate: non-finite velocity at t = " + std::to_string(t));
        for (std::size_t q = 0; q < x.size(); ++q) x[q] += h / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
        unpack(x, cur);
        r2 = st.eval(x, k1);
        if (!all_finite(k1)) throw ResolutionError("integrate: non-finite velocity at t = " + std::to_string(t));
        const double gap = check_gap(r2, t);
        if (observer) observer(s, t, cur);
        if (s % flow.save_every == 0 || s == steps)
        {
            tr.times.push_back(t);
            tr.snapshots.push_back(cur);
            tr.min_gaps.push_back(gap);
        }
    }
    tr.steps = steps;
    return tr;
}

double flow_energy(const Configuration& c, const FlowSpec& flow)
{
    double acc = pair_term(c, flow.kernel, flow.parallel);
    double ext = 0.0;
    for (const Vec& x : c.points) ext += flow.potential(x);
    return acc + ext / static_cast<double>(c.size());
}

// ---------------------------------------------------------------------------

ReferenceSolution ReferenceSolution::stationary(const RieszKernel& K)
{
    ReferenceSolution r;
    r.kind_ = Kind::StationaryEquilibrium;
    r.K_ = K;
    const int d = K.d;
    r.M_ = -Mat::Identity(d, d);
    if (d == 1 && K.s == 0.0)
    {
        r.R0_ = 2.0;
        r.V_ = TransportField::affine(0.5 * Mat::Identity(1, 1), Vec::Zero(1));
    }
    else if ((d == 2 || d == 3) && K.k == 0)
    {
        r.R0_ = 1.0;
        r.V_ = TransportField::affine(Mat::Identity(d, d), Vec::Zero(d));
    }
    else
        throw CapabilityError("stationary reference needs d = 1, s = 0 or the Coulomb kernel in d = 2, 3");
    return r;
}

ReferenceSolution ReferenceSolution::self_similar_disk(const RieszKernel& K, double R0, double alpha, double beta)
{
    if (K.d != 2 || K.s != 0.0) throw CapabilityError("self-similar disk needs the d = 2 Coulomb kernel");
    if (!(R0 > 0.0) || !(alpha > 0.0)) throw ParameterError("self-similar disk needs R0 > 0 and alpha > 0");
    ReferenceSolution r;
    r.kind_ = Kind::SelfSimilarDisk;
    r.K_ = K;
    r.R0_ = R0;
    r.alpha_ = alpha;
    Mat J(2, 2);
    J << 0.0, 1.0, -1.0, 0.0;
    r.M_ = -alpha * Mat::Identity(2, 2) + beta * J;
    r.V_ = TransportField::affine(Mat::Zero(2, 2), Vec::Zero(2));
    return r;
}

std::string ReferenceSolution::kind_name() const
{
    return kind_ == Kind::StationaryEquilibrium ? "stationary-equilibrium" : "self-similar-disk";
}

double ReferenceSolution::radius(double t) const
{
    if (kind_ == Kind::StationaryEquilibrium) return R0_;
    return std::sqrt(R0_ * R0_ + 2.0 * alpha_ * t);
}

BackgroundMeasure ReferenceSolution::measure(double t) const
{
    const int d = K_.d;
    if (d == 1) return BackgroundMeasure::semicircle(0.0, R0_);
    return BackgroundMeasure::uniform_ball(Vec::Zero(d), radius(t));
}

double ReferenceSolution::sup_density(double t) const { return measure(t).max_density(); }

Vec ReferenceSolution::velocity(double t, const Vec& x) const
{
    return -M_ * measure(t).force(K_, x).head(K_.d) + V_.value(x);
}

Mat ReferenceSolution::velocity_jacobian(double t, const Vec& x) const
{
    // grad (grad g * mu) in closed form, then J(a, b) = d_a u^b
    const int d = K_.d;
    Mat H(d, d);
    if (d == 1)
    {
        const double R = R0_, ax = std::abs(x(0));
        H(0, 0) = ax < R ? -2.0 / (R * R) : -(1.0 - ax / std::sqrt(x(0) * x(0) - R * R)) * 2.0 / (R * R);
    }
    else
    {
        const double R = radius(t), r = x.norm();
        if (r < R)
            H = -Mat::Identity(d, d) / std::pow(R, d);
        else
        {
            const Vec e = x / r;
            H = -(Mat::Identity(d, d) - d * e * e.transpose()) / std::pow(r, d);
        }
    }
    // u = -M grad h + V: d_a u^b = -(M H)_{ba} + d_a V^b
    return -(M_ * H).transpose() + V_.jacobian(x);
}

double ReferenceSolution::grad_u_sup(double t, bool support_only) const
{
    const int d = K_.d;
    if (kind_ == Kind::StationaryEquilibrium)
    {
        if (support_only) return 0.0;
        if (d == 1) return std::numeric_limits<double>::infinity();
        return static_cast<double>(d);  // radial eigenvalue 1 + (d-1)/r^d at r = 1+
    }
    const double R = radius(t);
    return spectral_norm(M_) / (R * R);
}

double ReferenceSolution::pde_residual(double t, const Vec& x, double h) const
{
    // d_t rho + div(rho w) with w = M grad h - V the particle velocity
    const int d = K_.d;
    const double dt_rho = (density(t + h, x) - density(std::max(0.0, t - h), x)) / (t + h - std::max(0.0, t - h));
    auto flux = [&](const Vec& y) -> Vec {
        return density(t, y) * (M_ * measure(t).force(K_, y).head(K_.d) - V_.value(y));
    };
    double div = 0.0;
    for (int a = 0; a < d; ++a)
    {
        const Vec e = h * Vec::Unit(d, a);
        div += (flux(x + e)(a) - flux(x - e)(a)) / (2.0 * h);
    }
    return dt_rho + div;
}

FlowSpec ReferenceSolution::flow(double dt, double T) const
{
    FlowSpec f;
    f.kernel = K_;
    f.M = M_;
    f.V = V_;
    f.dt = dt;
    f.T = T;
    return f;
}

// ---------------------------------------------------------------------------

bool MeSeries::inside_envelope(double rel_tol, double abs_tol) const
{
    for (const MeRow& r : rows)
        if (!(r.corrected <= r.envelope + rel_tol * std::abs(r.envelope) + abs_tol)) return false;
    return true;
}

void MeSeries::save_csv(const std::string& path) const
{
    std::ofstream os(path);
    if (!os) throw ParameterError("cannot write " + path);
    os << std::setprecision(17) << "t,F_N,log_term,error_term,corrected,envelope,grad_u_int,grad_u_int_global\n";
    for (const MeRow& r : rows)
        os << r.t << "," << r.F_N << "," << r.log_term << "," << r.error_term << "," << r.corrected << ","
           << r.envelope << "," << r.grad_u_int << "," << r.grad_u_int_global << "\n";
}

nlohmann::json MeSeries::to_json() const
{
    nlohmann::json j;
    j["N"] = N;
    j["C"] = C;
    j["inside_envelope"] = inside_envelope();
    for (const MeRow& r : rows)
        j["rows"].push_back({{"t", r.t},
                             {"F_N", r.F_N},
                             {"log_term", r.log_term},
                             {"error_term", r.error_term},
                             {"corrected", r.corrected},
                             {"envelope", r.envelope},
                             {"grad_u_int", r.grad_u_int},
                             {"grad_u_int_global", r.grad_u_int_global}});
    return j;
}

MeSeries me_timeseries(const Trajectory& traj, const ReferenceSolution& ref, double C)
{
    MeSeries out;
    out.C = C;
    if (traj.snapshots.empty()) return out;
    const RieszKernel& K = ref.kernel();
    const int d = K.d;
    const std::size_t N = traj.snapshots.front().size();
    out.N = N;
    const double Nd = static_cast<double>(N);
    // 4-point Gauss-Legendre on each save interval for \int sup|grad u|
    static const double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
    static const double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
    double I = 0.0, Ig = 0.0, sup_terms = -std::numeric_limits<double>::infinity(), F0 = 0.0;
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k)
    {
        const double t = traj.times[k];
        if (k > 0)
        {
            const double a = traj.times[k - 1], half = 0.5 * (t - a), mid = 0.5 * (t + a);
            for (int q = 0; q < 4; ++q)
            {
                I += half * gw[q] * ref.grad_u_sup(mid + half * gx[q], true);
                Ig += half * gw[q] * ref.grad_u_sup(mid + half * gx[q], false);
            }
        }
        const BackgroundMeasure mu = ref.measure(t);
        const double sup = ref.sup_density(t);
        MeRow r;
        r.t = t;
        r.F_N = modulated_energy(traj.snapshots[k], mu, K).F_N;
        r.log_term = K.s == 0.0 ? std::log(Nd * sup) / (2.0 * Nd * d) : 0.0;
        r.error_term = C * std::pow(sup, K.s / d) * std::pow(Nd, K.s / d - 1.0);
        r.corrected = r.F_N + r.log_term + r.error_term;
        if (k == 0) F0 = r.F_N;
        sup_terms = std::max(sup_terms, r.log_term + r.error_term);
        r.grad_u_int = I;
        r.grad_u_int_global = Ig;
        r.envelope = std::exp(C * I) * (F0 + sup_terms);
        out.rows.push_back(r);
    }
    return out;
}

}  // namespace rlab
