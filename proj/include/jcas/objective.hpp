// SPDX-License-Identifier: Apache-2.0
//
// Sum rate R, beampattern error tau = ||A D D^H A^H - Psi||_F^2, the JCAS
// objective R - omega * tau, and their conjugate-Wirtinger gradients with
// respect to the analog (A, N x M) and digital (D, M x K) precoders.
//
// The rate gradients are evaluated through the K x K effective channel
// C = H A D. With c_k the k-th row of C, t_k = ||c_k||^2 and s_k the same
// norm with entry k removed, the per-user terms of
//   grad_A R = xi sum_k [ H_k A V / (t_k + s2) - H_k A V_kbar / (s_k + s2) ]
// collapse to xi H^H E D^H, where row k of E is
//   e_k = c_k / (t_k + s2) - c_k^(kbar) / (s_k + s2).
// Likewise grad_D R = xi A^H H^H E. Both cost O(NMK).

#ifndef JCAS_OBJECTIVE_HPP
#define JCAS_OBJECTIVE_HPP

#include "jcas/numerics.hpp"

#include <cmath>
#include <numbers>

namespace jcas
{

template <typename Real>
struct Precoders
{
    CMatrix<Real> A; ///< analog, N x M, unit modulus when feasible
    CMatrix<Real> D; ///< digital, M x K

    CMatrix<Real> effective() const { return A * D; }
};

template <typename Real>
struct SystemParams
{
    Real power = 1;     ///< P_BS in watts
    Real noise_var = 1; ///< sigma_n^2
    Real omega = Real(0.3);
    Real eta = 1;       ///< weight on grad_D tau in the digital update

    /// eta = 1 / N
    static SystemParams for_array(Eigen::Index n_antennas, Real power, Real noise_var, Real omega)
    {
        return {power, noise_var, omega, Real(1) / static_cast<Real>(n_antennas)};
    }

    void validate() const
    {
        if (!(power > 0) || !(noise_var > 0) || !(omega >= 0) || !(eta > 0))
            throw ConfigError("SystemParams: require P_BS > 0, noise > 0, omega >= 0, eta > 0");
    }
};

template <typename Real>
struct GradientPair
{
    CMatrix<Real> dA;
    CMatrix<Real> dD;
};

template <typename Real>
constexpr Real rate_xi()
{
    return Real(1) / std::numbers::ln2_v<Real>;
}

namespace detail
{

template <typename Real>
void check_dims(const CMatrix<Real>& H, const Precoders<Real>& pc)
{
    if (pc.A.rows() != H.cols() || pc.A.cols() != pc.D.rows() || pc.D.cols() != H.rows())
        throw ConfigError("dimension mismatch between H (K x N), A (N x M) and D (M x K)");
}

/// t_k + s2 and s_k + s2 per user, from the effective channel C = H A D.
template <typename Real>
struct RateDenominators
{
    RVector<Real> total;      ///< ||c_k||^2 + s2
    RVector<Real> interfere;  ///< ||c_k||^2 - |c_kk|^2 + s2
};

template <typename Real>
RateDenominators<Real> rate_denominators(const CMatrix<Real>& C, Real noise_var)
{
    const Eigen::Index K = C.rows();
    RateDenominators<Real> out{RVector<Real>(K), RVector<Real>(K)};
    for (Eigen::Index k = 0; k < K; ++k)
    {
        const Real row = C.row(k).squaredNorm();
        out.total(k) = row + noise_var;
        out.interfere(k) = row - std::norm(C(k, k)) + noise_var;
    }
    return out;
}

template <typename Real>
CMatrix<Real> rate_weights(const CMatrix<Real>& C, const RateDenominators<Real>& den)
{
    const Eigen::Index K = C.rows();
    CMatrix<Real> E(K, K);
    for (Eigen::Index k = 0; k < K; ++k)
    {
        const Real inv_t = Real(1) / den.total(k);
        const Real inv_s = Real(1) / den.interfere(k);
        for (Eigen::Index j = 0; j < K; ++j)
            E(k, j) = (j == k) ? C(k, j) * inv_t : C(k, j) * (inv_t - inv_s);
    }
    return E;
}

/// Directional derivative of rate_weights along C_dot.
template <typename Real>
CMatrix<Real> rate_weights_tangent(const CMatrix<Real>& C, const CMatrix<Real>& C_dot,
                                   const RateDenominators<Real>& den)
{
    const Eigen::Index K = C.rows();
    CMatrix<Real> E_dot(K, K);
    for (Eigen::Index k = 0; k < K; ++k)
    {
        const Real t = den.total(k);
        const Real s = den.interfere(k);
        const Real t_dot = Real(2) * std::real(C.row(k).conjugate().cwiseProduct(C_dot.row(k)).sum());
        const Real s_dot = t_dot - Real(2) * std::real(std::conj(C(k, k)) * C_dot(k, k));
        for (Eigen::Index j = 0; j < K; ++j)
        {
            std::complex<Real> v = C_dot(k, j) / t - C(k, j) * (t_dot / (t * t));
            if (j != k)
                v -= C_dot(k, j) / s - C(k, j) * (s_dot / (s * s));
            E_dot(k, j) = v;
        }
    }
    return E_dot;
}

} // namespace detail

/// Sum rate for an arbitrary N x K effective precoder F (column k serves user k).
template <typename Real>
Real sum_rate_effective(const CMatrix<Real>& H, const CMatrix<Real>& F, Real noise_var)
{
    if (F.rows() != H.cols() || F.cols() != H.rows())
        throw ConfigError("sum_rate: precoder must be N x K");
    const CMatrix<Real> C = H * F;
    Real rate = 0;
    for (Eigen::Index k = 0; k < C.rows(); ++k)
    {
        const Real signal = std::norm(C(k, k));
        const Real interference = C.row(k).squaredNorm() - signal;
        rate += std::log2(Real(1) + signal / (interference + noise_var));
    }
    return rate;
}

template <typename Real>
Real sum_rate(const CMatrix<Real>& H, const Precoders<Real>& pc, Real noise_var)
{
    detail::check_dims(H, pc);
    return sum_rate_effective<Real>(H, pc.A * pc.D, noise_var);
}

/// ||F F^H - Psi||_F^2 for an N x K effective precoder.
template <typename Real>
Real tau_effective(const CMatrix<Real>& F, const CMatrix<Real>& psi)
{
    if (psi.rows() != F.rows() || psi.cols() != F.rows())
        throw ConfigError("tau: Psi must be N x N");
    return (F * F.adjoint() - psi).squaredNorm();
}

template <typename Real>
Real tau(const Precoders<Real>& pc, const CMatrix<Real>& psi)
{
    return tau_effective<Real>(pc.A * pc.D, psi);
}

template <typename Real>
Real objective(const CMatrix<Real>& H, const Precoders<Real>& pc, const CMatrix<Real>& psi,
               const SystemParams<Real>& params)
{
    return sum_rate(H, pc, params.noise_var) - params.omega * tau(pc, psi);
}

/// grad_A R and grad_D R sharing one evaluation of H A D.
template <typename Real>
GradientPair<Real> rate_gradients(const CMatrix<Real>& H, const Precoders<Real>& pc, Real noise_var)
{
    detail::check_dims(H, pc);
    const CMatrix<Real> HA = H * pc.A;
    const CMatrix<Real> C = HA * pc.D;
    const CMatrix<Real> E = detail::rate_weights(C, detail::rate_denominators(C, noise_var));
    const CMatrix<Real> HhE = H.adjoint() * E;
    const Real xi = rate_xi<Real>();
    return {xi * (HhE * pc.D.adjoint()), xi * (HA.adjoint() * E)};
}

template <typename Real>
CMatrix<Real> grad_rate_A(const CMatrix<Real>& H, const Precoders<Real>& pc, Real noise_var)
{
    detail::check_dims(H, pc);
    // every factor here has K or M on one side; the lazy products skip the
    // blocking set-up that dominates at these sizes
    const CMatrix<Real> P = pc.A.lazyProduct(pc.D);
    const CMatrix<Real> C = H.lazyProduct(P);
    const CMatrix<Real> E = detail::rate_weights(C, detail::rate_denominators(C, noise_var));
    const CMatrix<Real> ED = E.lazyProduct(pc.D.adjoint());
    return rate_xi<Real>() * H.adjoint().lazyProduct(ED);
}

template <typename Real>
CMatrix<Real> grad_rate_D(const CMatrix<Real>& H, const Precoders<Real>& pc, Real noise_var)
{
    detail::check_dims(H, pc);
    const CMatrix<Real> HA = H * pc.A;
    const CMatrix<Real> C = HA * pc.D;
    const CMatrix<Real> E = detail::rate_weights(C, detail::rate_denominators(C, noise_var));
    return rate_xi<Real>() * (HA.adjoint() * E);
}

/// grad_A tau = 2 (U - Psi) A D D^H and grad_D tau = 2 A^H (U - Psi) A D with
/// U = A D D^H A^H. (U - Psi) A D is formed as P (P^H P) - Psi P, P = A D.
template <typename Real>
GradientPair<Real> tau_gradients(const Precoders<Real>& pc, const CMatrix<Real>& psi)
{
    const CMatrix<Real> P = pc.A * pc.D;
    if (psi.rows() != P.rows() || psi.cols() != P.rows())
        throw ConfigError("tau gradients: Psi must be N x N");
    const CMatrix<Real> Q = P * (P.adjoint() * P) - psi * P;
    return {Real(2) * (Q * pc.D.adjoint()), Real(2) * (pc.A.adjoint() * Q)};
}

namespace detail
{

template <typename Real>
CMatrix<Real> tau_residual_times_p(const CMatrix<Real>& P, const CMatrix<Real>& psi)
{
    if (psi.rows() != P.rows() || psi.cols() != P.rows())
        throw ConfigError("tau gradients: Psi must be N x N");
    const CMatrix<Real> gram = P.adjoint().lazyProduct(P);
    CMatrix<Real> Q = P.lazyProduct(gram);
    // column by column: P has only K columns, and matrix-vector products skip
    // the N x N packing a general product would pay on every call
    for (Eigen::Index k = 0; k < P.cols(); ++k)
        Q.col(k).noalias() -= psi * P.col(k);
    return Q;
}

} // namespace detail

template <typename Real>
CMatrix<Real> grad_tau_A(const Precoders<Real>& pc, const CMatrix<Real>& psi)
{
    const CMatrix<Real> Q = detail::tau_residual_times_p<Real>(pc.A.lazyProduct(pc.D), psi);
    return Real(2) * Q.lazyProduct(pc.D.adjoint());
}

template <typename Real>
CMatrix<Real> grad_tau_D(const Precoders<Real>& pc, const CMatrix<Real>& psi)
{
    return Real(2) * (pc.A.adjoint() * detail::tau_residual_times_p<Real>(pc.A * pc.D, psi));
}

/// Directional derivatives of (grad_A R, grad_D R) along (A_dot, D_dot).
/// Both gradients come from the same real function, so this map is also its
/// own adjoint under Re tr(X^H Y); reverse-mode sweeps rely on that.
template <typename Real>
GradientPair<Real> rate_gradients_tangent(const CMatrix<Real>& H, const Precoders<Real>& pc,
                                          const Precoders<Real>& dir, Real noise_var)
{
    detail::check_dims(H, pc);
    const CMatrix<Real> HA = H * pc.A;
    const CMatrix<Real> C = HA * pc.D;
    const CMatrix<Real> HA_dot = H * dir.A;
    const CMatrix<Real> C_dot = HA_dot * pc.D + HA * dir.D;
    const auto den = detail::rate_denominators(C, noise_var);
    const CMatrix<Real> E = detail::rate_weights(C, den);
    const CMatrix<Real> E_dot = detail::rate_weights_tangent(C, C_dot, den);
    const Real xi = rate_xi<Real>();
    return {xi * (H.adjoint() * (E_dot * pc.D.adjoint() + E * dir.D.adjoint())),
            xi * (HA_dot.adjoint() * E + HA.adjoint() * E_dot)};
}

template <typename Real>
GradientPair<Real> tau_gradients_tangent(const Precoders<Real>& pc, const Precoders<Real>& dir,
                                         const CMatrix<Real>& psi)
{
    const CMatrix<Real> P = pc.A * pc.D;
    const CMatrix<Real> P_dot = dir.A * pc.D + pc.A * dir.D;
    const CMatrix<Real> gram = P.adjoint() * P;
    const CMatrix<Real> Q = P * gram - psi * P;
    const CMatrix<Real> Q_dot =
        P_dot * gram + P * (P_dot.adjoint() * P + P.adjoint() * P_dot) - psi * P_dot;
    return {Real(2) * (Q_dot * pc.D.adjoint() + Q * dir.D.adjoint()),
            Real(2) * (dir.A.adjoint() * Q + pc.A.adjoint() * Q_dot)};
}

} // namespace jcas

#endif // JCAS_OBJECTIVE_HPP
