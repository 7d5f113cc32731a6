// SPDX-License-Identifier: Apache-2.0
//
// Projected gradient ascent on R - omega * tau with J analog steps per
// digital step. With a learned StepSchedule this is the forward pass of the
// unfolded network; with a constant schedule it is plain fixed-step PGA.

#ifndef JCAS_PGA_HPP
#define JCAS_PGA_HPP

#include "jcas/channel.hpp"
#include "jcas/numerics.hpp"
#include "jcas/objective.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace jcas
{

/// Step sizes mu(i, j) for the analog inner steps and lambda(i) for the
/// digital step of outer iteration i.
struct StepSchedule
{
    int outer = 1; ///< I
    int inner = 1; ///< J
    std::vector<double> mu;     ///< row-major I x J
    std::vector<double> lambda; ///< length I

    static StepSchedule constant(int outer, int inner, double mu, double lambda)
    {
        StepSchedule s;
        s.outer = outer;
        s.inner = inner;
        s.mu.assign(static_cast<std::size_t>(outer) * static_cast<std::size_t>(inner), mu);
        s.lambda.assign(static_cast<std::size_t>(outer), lambda);
        s.validate();
        return s;
    }

    double mu_at(int i, int j) const { return mu[static_cast<std::size_t>(i * inner + j)]; }
    std::span<const double> mu_row(int i) const
    {
        return std::span<const double>(mu).subspan(static_cast<std::size_t>(i * inner),
                                                   static_cast<std::size_t>(inner));
    }

    std::size_t parameter_count() const { return mu.size() + lambda.size(); }

    void validate() const
    {
        if (outer < 1 || inner < 1)
            throw ConfigError("StepSchedule: need I >= 1 and J >= 1");
        if (mu.size() != static_cast<std::size_t>(outer) * static_cast<std::size_t>(inner) ||
            lambda.size() != static_cast<std::size_t>(outer))
            throw ConfigError("StepSchedule: mu must hold I*J entries and lambda I entries");
        for (double v : mu)
            if (!std::isfinite(v))
                throw ConfigError("StepSchedule: non-finite mu");
        for (double v : lambda)
            if (!std::isfinite(v))
                throw ConfigError("StepSchedule: non-finite lambda");
    }

    bool operator==(const StepSchedule&) const = default;
};

template <typename Real>
struct IterationRecord
{
    Real objective = 0;
    Real rate = 0;
    Real tau = 0;
    Real modulus_error = 0; ///< max_nm | |A_nm| - 1 |
    Real power_error = 0;   ///< | ||AD||_F^2 - P | / P
};

template <typename Real>
struct Trajectory
{
    std::vector<IterationRecord<Real>> records; ///< initial point first, then one per outer iteration
    Precoders<Real> final;
};

template <typename Real>
CMatrix<Real> project_analog(const CMatrix<Real>& A)
{
    CMatrix<Real> out(A.rows(), A.cols());
    for (Eigen::Index c = 0; c < A.cols(); ++c)
        for (Eigen::Index r = 0; r < A.rows(); ++r)
        {
            const Real mag = std::abs(A(r, c));
            // zero entries carry no phase; map them to 1
            out(r, c) = mag > Real(0) ? A(r, c) / mag : std::complex<Real>(1, 0);
        }
    return out;
}

/// D * sqrt(P) / ||A D||_F
template <typename Real>
CMatrix<Real> project_digital(const CMatrix<Real>& A, const CMatrix<Real>& D, Real power)
{
    const Real norm = (A * D).norm();
    if (!(norm > Real(0)) || !std::isfinite(norm))
        throw NumericalError("project_digital: A D is zero or non-finite, cannot normalize power");
    return D * (std::sqrt(power) / norm);
}

template <typename Real>
IterationRecord<Real> evaluate_point(const CMatrix<Real>& H, const Precoders<Real>& pc, const CMatrix<Real>& psi,
                                     const SystemParams<Real>& params)
{
    IterationRecord<Real> rec;
    rec.rate = sum_rate(H, pc, params.noise_var);
    rec.tau = tau(pc, psi);
    rec.objective = rec.rate - params.omega * rec.tau;
    Real worst = 0;
    for (Eigen::Index c = 0; c < pc.A.cols(); ++c)
        for (Eigen::Index r = 0; r < pc.A.rows(); ++r)
            worst = std::max(worst, std::abs(std::abs(pc.A(r, c)) - Real(1)));
    rec.modulus_error = worst;
    rec.power_error = std::abs((pc.A * pc.D).squaredNorm() - params.power) / params.power;
    return rec;
}

/// grad_A R - omega grad_A tau at (A, D); the tau term is skipped when omega = 0.
template <typename Real>
CMatrix<Real> analog_ascent_direction(const CMatrix<Real>& H, const Precoders<Real>& pc, const CMatrix<Real>& psi,
                                      const SystemParams<Real>& params)
{
    CMatrix<Real> dir = grad_rate_A(H, pc, params.noise_var);
    if (params.omega != Real(0))
        dir -= params.omega * grad_tau_A(pc, psi);
    if (!all_finite(dir))
        throw NumericalError("analog update: non-finite gradient (step sizes too large?)");
    return dir;
}

/// grad_D R - omega eta grad_D tau at (A, D).
template <typename Real>
CMatrix<Real> digital_ascent_direction(const CMatrix<Real>& H, const Precoders<Real>& pc, const CMatrix<Real>& psi,
                                       const SystemParams<Real>& params)
{
    CMatrix<Real> dir = grad_rate_D(H, pc, params.noise_var);
    if (params.omega != Real(0))
        dir -= (params.omega * params.eta) * grad_tau_D(pc, psi);
    if (!all_finite(dir))
        throw NumericalError("digital update: non-finite gradient (step sizes too large?)");
    return dir;
}

/// J analog steps with D held fixed, then unit-modulus projection.
template <typename Real>
CMatrix<Real> analog_inner_loop(const CMatrix<Real>& A, const CMatrix<Real>& D, std::span<const double> mu_row,
                                const CMatrix<Real>& H, const CMatrix<Real>& psi, const SystemParams<Real>& params)
{
    Precoders<Real> work{A, D};
    for (double mu : mu_row)
        work.A += static_cast<Real>(mu) * analog_ascent_direction(H, work, psi, params);
    return project_analog<Real>(work.A);
}

/// One weighted digital step at the updated analog precoder, then power normalization.
template <typename Real>
CMatrix<Real> digital_step(const CMatrix<Real>& A_next, const CMatrix<Real>& D, double lambda, const CMatrix<Real>& H,
                           const CMatrix<Real>& psi, const SystemParams<Real>& params)
{
    const Precoders<Real> at{A_next, D};
    const CMatrix<Real> D_next = D + static_cast<Real>(lambda) * digital_ascent_direction(H, at, psi, params);
    return project_digital<Real>(A_next, D_next, params.power);
}

/// Projects `init` onto the feasible set, then runs the I outer iterations of
/// `schedule`. The objective is recorded at the feasible point after every
/// outer iteration. No line search: non-improving steps are kept.
template <typename Real>
Trajectory<Real> run_pga(const CMatrix<Real>& H, const CMatrix<Real>& psi, const SystemParams<Real>& params,
                         const StepSchedule& schedule, const Precoders<Real>& init)
{
    params.validate();
    schedule.validate();
    detail::check_dims(H, init);

    Trajectory<Real> traj;
    traj.records.reserve(static_cast<std::size_t>(schedule.outer) + 1);
    Precoders<Real> pc;
    pc.A = project_analog<Real>(init.A);
    pc.D = project_digital<Real>(pc.A, init.D, params.power);
    traj.records.push_back(evaluate_point(H, pc, psi, params));

    for (int i = 0; i < schedule.outer; ++i)
    {
        pc.A = analog_inner_loop<Real>(pc.A, pc.D, schedule.mu_row(i), H, psi, params);
        pc.D = digital_step<Real>(pc.A, pc.D, schedule.lambda[static_cast<std::size_t>(i)], H, psi, params);
        traj.records.push_back(evaluate_point(H, pc, psi, params));
    }
    traj.final = std::move(pc);
    return traj;
}

namespace detail
{

template <typename Real>
void check_rf_chains(Eigen::Index n_users, Eigen::Index n_rf, std::size_t n_directions)
{
    if (n_rf < n_users)
        throw ConfigError("initialization: need at least as many RF chains as users (M >= K)");
    if (n_rf > n_users + static_cast<Eigen::Index>(n_directions))
        throw ConfigError("initialization: M must not exceed K + P (users plus sensing directions)");
}

/// D = A^+ X_ZF with X_ZF = H^+, scaled to ||A D||_F^2 = P.
template <typename Real>
CMatrix<Real> zf_fitted_digital(const CMatrix<Real>& H, const CMatrix<Real>& A, Real power)
{
    const CMatrix<Real> x_zf = pseudo_inverse<Real>(H);
    return project_digital<Real>(A, pseudo_inverse<Real>(A) * x_zf, power);
}

template <typename Real>
CMatrix<Real> phase_only(const CMatrix<Real>& G)
{
    return project_analog<Real>(G);
}

} // namespace detail

/// A0 takes the phases of G = [h_1 .. h_K, a(theta_d,1) .. a(theta_d,M-K)],
/// D0 = A0^+ H^+ normalized to the power budget.
template <typename Real>
Precoders<Real> init_proposed(const CMatrix<Real>& H, std::span<const double> directions, Eigen::Index n_rf,
                              Real power)
{
    const Eigen::Index K = H.rows();
    const Eigen::Index N = H.cols();
    detail::check_rf_chains<Real>(K, n_rf, directions.size());
    CMatrix<Real> G(N, n_rf);
    G.leftCols(K) = H.adjoint();
    for (Eigen::Index m = K; m < n_rf; ++m)
        G.col(m) = steering_vector(static_cast<Real>(directions[static_cast<std::size_t>(m - K)]), N);
    Precoders<Real> pc;
    pc.A = detail::phase_only<Real>(G);
    pc.D = detail::zf_fitted_digital<Real>(H, pc.A, power);
    return pc;
}

/// Random analog phases, D0 = (H A0)^+ normalized to the power budget.
template <typename Real>
Precoders<Real> init_random(const CMatrix<Real>& H, Eigen::Index n_rf, std::uint64_t seed, Real power)
{
    if (n_rf < H.rows())
        throw ConfigError("init_random: need M >= K");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    Precoders<Real> pc;
    pc.A.resize(H.cols(), n_rf);
    for (Eigen::Index c = 0; c < pc.A.cols(); ++c)
        for (Eigen::Index r = 0; r < pc.A.rows(); ++r)
            pc.A(r, c) = std::polar(Real(1), static_cast<Real>(phase(rng)));
    const CMatrix<Real> HA = H * pc.A;
    pc.D = project_digital<Real>(pc.A, pseudo_inverse<Real>(HA), power);
    return pc;
}

/// A0 from the top-K right singular vectors of H (left singular vectors of
/// H^H) plus sensing steering vectors, phase-projected to unit modulus;
/// D0 as in init_proposed.
template <typename Real>
Precoders<Real> init_svd(const CMatrix<Real>& H, std::span<const double> directions, Eigen::Index n_rf, Real power)
{
    const Eigen::Index K = H.rows();
    const Eigen::Index N = H.cols();
    detail::check_rf_chains<Real>(K, n_rf, directions.size());
    const CMatrix<Real> Hh = H.adjoint();
    Eigen::JacobiSVD<CMatrix<Real>> svd(Hh, Eigen::ComputeThinU);
    CMatrix<Real> G(N, n_rf);
    G.leftCols(K) = svd.matrixU().leftCols(K);
    for (Eigen::Index m = K; m < n_rf; ++m)
        G.col(m) = steering_vector(static_cast<Real>(directions[static_cast<std::size_t>(m - K)]), N);
    // D0 is fitted to the singular-vector basis itself; only A is then
    // pushed onto the unit circle
    const CMatrix<Real> d0 = pseudo_inverse<Real>(G) * pseudo_inverse<Real>(H);
    Precoders<Real> pc;
    pc.A = detail::phase_only<Real>(G);
    pc.D = project_digital<Real>(pc.A, d0, power);
    return pc;
}

enum class InitKind
{
    proposed,
    random,
    svd,
};

InitKind parse_init_kind(const std::string& name);
std::string to_string(InitKind kind);

template <typename Real>
Precoders<Real> make_init(InitKind kind, const CMatrix<Real>& H, std::span<const double> directions,
                          Eigen::Index n_rf, Real power, std::uint64_t seed)
{
    switch (kind)
    {
    case InitKind::random:
        return init_random<Real>(H, n_rf, seed, power);
    case InitKind::svd:
        return init_svd<Real>(H, directions, n_rf, power);
    case InitKind::proposed:
    default:
        return init_proposed<Real>(H, directions, n_rf, power);
    }
}

} // namespace jcas

#endif // JCAS_PGA_HPP
