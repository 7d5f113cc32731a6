// SPDX-License-Identifier: Apache-2.0
//
// Desired sensing beampatterns on an angular grid, the benchmark covariance
// Psi that best fits a desired pattern under per-antenna power equality and
// PSD constraints, and beampattern error metrics.

#ifndef JCAS_BEAMPATTERN_HPP
#define JCAS_BEAMPATTERN_HPP

#include "jcas/channel.hpp"
#include "jcas/numerics.hpp"
#include "jcas/objective.hpp"

#include <limits>
#include <vector>

namespace jcas
{

struct BeampatternSpec
{
    std::vector<double> grid;       ///< degrees, strictly increasing over [-90, 90]
    std::vector<double> desired;    ///< B_d(theta_t), 0 or 1
    std::vector<double> directions; ///< mainlobe centres, degrees, sorted and unique
    double halfwidth = 5.0;         ///< degrees

    std::size_t size() const { return grid.size(); }
};

/// Uniform grid of `grid_points` angles on [-90, 90] with B_d = 1 within
/// `halfwidth` of any direction. Duplicate directions are collapsed.
BeampatternSpec make_spec(std::vector<double> directions, double halfwidth, int grid_points);

/// Re(a(theta)^H C a(theta))
template <typename Real>
Real beampattern_value(const CMatrix<Real>& C, Real theta_deg)
{
    if (C.rows() != C.cols())
        throw ConfigError("beampattern_value: covariance must be square");
    const CVector<Real> a = steering_vector(theta_deg, C.rows());
    return std::real(a.dot(C * a));
}

/// Pattern of covariance C over the spec grid.
template <typename Real>
RVector<Real> covariance_pattern(const CMatrix<Real>& C, const BeampatternSpec& spec)
{
    if (C.rows() != C.cols())
        throw ConfigError("covariance_pattern: covariance must be square");
    const std::vector<Real> grid(spec.grid.begin(), spec.grid.end());
    const CMatrix<Real> S = steering_matrix<Real>(grid, C.rows());
    const CMatrix<Real> CS = C * S;
    RVector<Real> out(S.cols());
    for (Eigen::Index t = 0; t < S.cols(); ++t)
        out(t) = std::real(S.col(t).dot(CS.col(t)));
    return out;
}

/// Pattern of the covariance F F^H for an N x K effective precoder F,
/// computed as ||F^H a(theta)||^2.
template <typename Real>
RVector<Real> precoder_pattern(const CMatrix<Real>& F, const BeampatternSpec& spec)
{
    const std::vector<Real> grid(spec.grid.begin(), spec.grid.end());
    const CMatrix<Real> S = steering_matrix<Real>(grid, F.rows());
    const CMatrix<Real> FhS = F.adjoint() * S;
    return FhS.colwise().squaredNorm().transpose();
}

template <typename Real>
Real pattern_mse(const RVector<Real>& pattern, const BeampatternSpec& spec)
{
    if (static_cast<std::size_t>(pattern.size()) != spec.size())
        throw ConfigError("pattern_mse: pattern length does not match grid");
    Real acc = 0;
    for (Eigen::Index t = 0; t < pattern.size(); ++t)
    {
        const Real diff = static_cast<Real>(spec.desired[static_cast<std::size_t>(t)]) - pattern(t);
        acc += diff * diff;
    }
    return acc / static_cast<Real>(pattern.size());
}

/// (1/T) sum_t |B_d(theta_t) - a^H A D D^H A^H a|^2
template <typename Real>
Real beampattern_mse(const Precoders<Real>& pc, const BeampatternSpec& spec)
{
    if (pc.A.cols() != pc.D.rows())
        throw ConfigError("beampattern_mse: A and D dimensions disagree");
    return pattern_mse<Real>(precoder_pattern<Real>(pc.A * pc.D, spec), spec);
}

template <typename Real>
Real beampattern_mse_effective(const CMatrix<Real>& F, const BeampatternSpec& spec)
{
    return pattern_mse<Real>(precoder_pattern<Real>(F, spec), spec);
}

template <typename Real>
struct BenchmarkCovariance
{
    CMatrix<Real> psi;
    Real power = 0;
    Real alpha = 0;
    Real residual = 0;         ///< final value of sum_t |alpha B_d - a^H Psi a|^2
    int iterations = 0;
    bool converged = false;
    std::vector<Real> history; ///< objective after each accepted iteration, starting point first

    /// Psi solved at power P scales linearly, so the covariance for another
    /// power is a rescaling.
    CMatrix<Real> scaled_to(Real power_bs) const { return psi * (power_bs / power); }
};

struct CovarianceSolverOptions
{
    int max_iterations = 2000;
    double tolerance = 1e-10; ///< relative objective decrease that counts as converged
    int max_projection_cycles = 50;
};

namespace detail
{

template <typename Real>
Real fit_scale(const std::vector<double>& desired, const RVector<Real>& pattern)
{
    Real num = 0;
    Real den = 0;
    for (Eigen::Index t = 0; t < pattern.size(); ++t)
    {
        const Real b = static_cast<Real>(desired[static_cast<std::size_t>(t)]);
        num += b * pattern(t);
        den += b * b;
    }
    return den > Real(0) ? num / den : Real(0);
}

template <typename Real>
Real fit_residual(const std::vector<double>& desired, const RVector<Real>& pattern, Real alpha)
{
    Real acc = 0;
    for (Eigen::Index t = 0; t < pattern.size(); ++t)
    {
        const Real diff = alpha * static_cast<Real>(desired[static_cast<std::size_t>(t)]) - pattern(t);
        acc += diff * diff;
    }
    return acc;
}

template <typename Real>
RVector<Real> pattern_from_steering(const CMatrix<Real>& psi, const CMatrix<Real>& S)
{
    const CMatrix<Real> PS = psi * S;
    RVector<Real> out(S.cols());
    for (Eigen::Index t = 0; t < S.cols(); ++t)
        out(t) = std::real(S.col(t).dot(PS.col(t)));
    return out;
}

template <typename Real>
void set_diagonal(CMatrix<Real>& x, Real value)
{
    for (Eigen::Index n = 0; n < x.rows(); ++n)
        x(n, n) = std::complex<Real>(value, 0);
}

} // namespace detail

/// Maps a matrix into S = {Hermitian, PSD, diag = diag_value} by cyclic
/// projections (Hermitian part, eigenvalue clipping, diagonal reset). If the
/// cycles stop short of PSD, the iterate is blended toward diag_value * I,
/// which keeps the diagonal and lifts the smallest eigenvalue to zero.
template <typename Real>
CMatrix<Real> project_feasible_covariance(const CMatrix<Real>& x, Real diag_value, int max_cycles = 50)
{
    const Eigen::Index n = x.rows();
    const Real eig_tol = Real(1e-12) * diag_value;
    CMatrix<Real> y = hermitian_part(x);
    bool diag_exact = false;
    Real min_eig = 0;
    for (int cycle = 0; cycle <= max_cycles; ++cycle)
    {
        HermitianEig<Real> eig = hermitian_eig(y);
        min_eig = eig.eigenvalues(0);
        if (diag_exact && min_eig >= -eig_tol)
            return y;
        if (cycle == max_cycles)
            break;
        const RVector<Real> clipped = eig.eigenvalues.cwiseMax(Real(0));
        y = hermitian_part<Real>(eig.eigenvectors * clipped.asDiagonal() * eig.eigenvectors.adjoint());
        detail::set_diagonal(y, diag_value);
        diag_exact = true;
    }
    if (min_eig < 0)
    {
        const Real blend = -min_eig / (diag_value - min_eig);
        y = (Real(1) - blend) * y + blend * diag_value * CMatrix<Real>::Identity(n, n);
        detail::set_diagonal(y, diag_value);
    }
    return y;
}

/// Fits Psi in S and a scale alpha to minimise sum_t |alpha B_d(theta_t) - a^H Psi a|^2.
/// Alternates a closed-form least-squares alpha with a backtracked projected
/// gradient step on Psi, so the recorded objective never increases.
template <typename Real>
BenchmarkCovariance<Real> solve_benchmark_covariance(const BeampatternSpec& spec, Real power,
                                                     Eigen::Index n_antennas,
                                                     const CovarianceSolverOptions& options = {})
{
    if (n_antennas < 2)
        throw ConfigError("solve_benchmark_covariance: need N >= 2");
    if (!(power > 0))
        throw ConfigError("solve_benchmark_covariance: power must be positive");
    if (spec.size() < 2 || spec.desired.size() != spec.size())
        throw ConfigError("solve_benchmark_covariance: malformed beampattern spec");

    const Real diag_value = power / static_cast<Real>(n_antennas);
    const std::vector<Real> grid(spec.grid.begin(), spec.grid.end());
    const CMatrix<Real> S = steering_matrix<Real>(grid, n_antennas);

    BenchmarkCovariance<Real> out;
    out.power = power;
    out.psi = diag_value * CMatrix<Real>::Identity(n_antennas, n_antennas);
    RVector<Real> pattern = detail::pattern_from_steering(out.psi, S);
    out.alpha = detail::fit_scale(spec.desired, pattern);
    out.residual = detail::fit_residual(spec.desired, pattern, out.alpha);
    out.history.push_back(out.residual);

    const Real scale = static_cast<Real>(n_antennas) * static_cast<Real>(n_antennas);
    Real step = Real(1) / (Real(2) * static_cast<Real>(spec.size()) * scale);
    const Real tiny = std::numeric_limits<Real>::min();

    for (int it = 0; it < options.max_iterations; ++it)
    {
        if (out.residual <= tiny)
        {
            out.converged = true;
            break;
        }
        RVector<Real> weights(pattern.size());
        for (Eigen::Index t = 0; t < pattern.size(); ++t)
            weights(t) = Real(-2) * (out.alpha * static_cast<Real>(spec.desired[static_cast<std::size_t>(t)]) - pattern(t));
        const CMatrix<Real> grad = S * weights.asDiagonal() * S.adjoint();

        bool accepted = false;
        CMatrix<Real> candidate;
        RVector<Real> candidate_pattern;
        Real candidate_value = 0;
        for (int backtrack = 0; backtrack < 60; ++backtrack)
        {
            candidate = project_feasible_covariance<Real>(out.psi - step * grad, diag_value,
                                                          options.max_projection_cycles);
            candidate_pattern = detail::pattern_from_steering(candidate, S);
            candidate_value = detail::fit_residual(spec.desired, candidate_pattern, out.alpha);
            if (candidate_value <= out.residual)
            {
                accepted = true;
                break;
            }
            step *= Real(0.5);
        }
        if (!accepted)
        {
            out.converged = true;
            break;
        }

        const Real alpha = detail::fit_scale(spec.desired, candidate_pattern);
        const Real value = std::min(candidate_value, detail::fit_residual(spec.desired, candidate_pattern, alpha));
        const bool alpha_helps = detail::fit_residual(spec.desired, candidate_pattern, alpha) <= candidate_value;
        const Real decrease = (out.residual - value) / std::max(out.residual, tiny);

        out.psi = std::move(candidate);
        pattern = std::move(candidate_pattern);
        if (alpha_helps)
            out.alpha = alpha;
        out.residual = value;
        out.history.push_back(value);
        out.iterations = it + 1;
        step *= Real(2);

        if (decrease < static_cast<Real>(options.tolerance))
        {
            out.converged = true;
            break;
        }
    }
    return out;
}

} // namespace jcas

#endif // JCAS_BEAMPATTERN_HPP
