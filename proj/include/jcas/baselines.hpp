// SPDX-License-Identifier: Apache-2.0
//
// Reference designs: the fully digital zero-forcing precoder of a
// communications-only system, and PGA with the fixed 0.01 step and J = 1.

#ifndef JCAS_BASELINES_HPP
#define JCAS_BASELINES_HPP

#include "jcas/numerics.hpp"
#include "jcas/objective.hpp"
#include "jcas/pga.hpp"

namespace jcas
{

template <typename Real>
struct DigitalPrecoder
{
    CMatrix<Real> X; ///< N x K
    Real power = 0;
};

/// X = H^H (H H^H)^-1 with one global scale so that ||X||_F^2 = P.
template <typename Real>
DigitalPrecoder<Real> zf_digital(const CMatrix<Real>& H, Real power)
{
    if (H.rows() > H.cols())
        throw ConfigError("zf_digital: need K <= N");
    if (!(power > 0))
        throw ConfigError("zf_digital: power must be positive");
    const CMatrix<Real> gram = H * H.adjoint();
    Eigen::FullPivLU<CMatrix<Real>> lu(gram);
    lu.setThreshold(Real(1e-12));
    if (lu.rank() < H.rows())
        throw NumericalError("zf_digital: channel matrix is rank deficient");
    const CMatrix<Real> X = H.adjoint() * lu.inverse();
    return {X * (std::sqrt(power) / X.norm()), power};
}

/// Per-user SINR of the digital precoder; interference is evaluated, not assumed zero.
template <typename Real>
Real zf_sum_rate(const CMatrix<Real>& H, const CMatrix<Real>& X, Real noise_var)
{
    if (X.rows() != H.cols() || X.cols() != H.rows())
        throw ConfigError("zf_sum_rate: X must be N x K");
    Real rate = 0;
    for (Eigen::Index k = 0; k < H.rows(); ++k)
    {
        Real signal = 0;
        Real interference = 0;
        for (Eigen::Index j = 0; j < X.cols(); ++j)
        {
            const Real g = std::norm((H.row(k) * X.col(j))(0, 0));
            (j == k ? signal : interference) += g;
        }
        rate += std::log2(Real(1) + signal / (interference + noise_var));
    }
    return rate;
}

/// Fixed-step PGA: mu = lambda = 0.01, J = 1, I outer iterations.
template <typename Real>
Trajectory<Real> conventional_pga(const CMatrix<Real>& H, const CMatrix<Real>& psi, const SystemParams<Real>& params,
                                  int outer, const Precoders<Real>& init)
{
    if (outer < 0)
        throw ConfigError("conventional_pga: I must be non-negative");
    if (outer == 0)
    {
        Trajectory<Real> traj;
        traj.final.A = project_analog<Real>(init.A);
        traj.final.D = project_digital<Real>(traj.final.A, init.D, params.power);
        traj.records.push_back(evaluate_point(H, traj.final, psi, params));
        return traj;
    }
    return run_pga<Real>(H, psi, params, StepSchedule::constant(outer, 1, 0.01, 0.01), init);
}

} // namespace jcas

#endif // JCAS_BASELINES_HPP
