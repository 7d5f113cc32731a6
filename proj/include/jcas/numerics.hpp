// SPDX-License-Identifier: Apache-2.0
//
// Dense complex linear algebra shared by every module, plus the
// conjugate-Wirtinger central-difference gradient used to validate the
// closed-form gradients.

#ifndef JCAS_NUMERICS_HPP
#define JCAS_NUMERICS_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

namespace jcas
{

template <typename Real>
using CMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Real>
using CVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;

template <typename Real>
using RVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

/// Invalid user-supplied configuration or input dimensions.
class ConfigError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation produced a non-finite or degenerate value.
class NumericalError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& x)
{
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index i = 0; i < x.rows(); ++i)
        {
            const auto v = x(i, j);
            if (!std::isfinite(std::real(v)) || !std::isfinite(std::imag(v)))
                return false;
        }
    return true;
}

template <typename Derived>
typename Derived::RealScalar fro_norm(const Eigen::MatrixBase<Derived>& x)
{
    return x.norm();
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
template <typename Real>
struct HermitianEig
{
    RVector<Real> eigenvalues;
    CMatrix<Real> eigenvectors;
};

/// Only the lower triangle of `x` is read.
template <typename Real>
HermitianEig<Real> hermitian_eig(const CMatrix<Real>& x)
{
    if (x.rows() != x.cols())
        throw ConfigError("hermitian_eig: matrix must be square");
    Eigen::SelfAdjointEigenSolver<CMatrix<Real>> solver(x);
    if (solver.info() != Eigen::Success)
        throw NumericalError("hermitian_eig: eigen-solver did not converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

template <typename Real>
CMatrix<Real> hermitian_part(const CMatrix<Real>& x)
{
    return (x + x.adjoint()) * Real(0.5);
}

/// Moore-Penrose pseudo-inverse; singular values below 1e-12 * sigma_max are
/// treated as zero.
template <typename Real>
CMatrix<Real> pseudo_inverse(const CMatrix<Real>& x)
{
    Eigen::JacobiSVD<CMatrix<Real>> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVector<Real>& s = svd.singularValues();
    const Real cutoff = s.size() > 0 ? Real(1e-12) * s(0) : Real(0);
    RVector<Real> inv_s(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        inv_s(i) = (s(i) > cutoff && s(i) > Real(0)) ? Real(1) / s(i) : Real(0);
    return svd.matrixV() * inv_s.asDiagonal() * svd.matrixU().adjoint();
}

/// Nearest positive semidefinite matrix (Frobenius) to the Hermitian part of x.
template <typename Real>
CMatrix<Real> psd_project(const CMatrix<Real>& x)
{
    if (x.rows() != x.cols())
        throw ConfigError("psd_project: matrix must be square");
    const CMatrix<Real> herm = hermitian_part(x);
    HermitianEig<Real> eig = hermitian_eig(herm);
    const RVector<Real> clipped = eig.eigenvalues.cwiseMax(Real(0));
    CMatrix<Real> out = eig.eigenvectors * clipped.asDiagonal() * eig.eigenvectors.adjoint();
    return hermitian_part(out);
}

/// Central-difference conjugate-Wirtinger gradient of a real function:
///   [grad]_rc = 1/2 (df/dRe[X]_rc + j df/dIm[X]_rc).
/// With this convention d/dX* ||X||_F^2 = X and d/dX* Re tr(B^H X) = B/2.
template <typename Real, typename Function>
CMatrix<Real> wirtinger_fd_gradient(Function&& f, const CMatrix<Real>& x, Real h)
{
    if (!(h > Real(0)))
        throw ConfigError("wirtinger_fd_gradient: step must be positive");
    auto eval = [&](const CMatrix<Real>& point) {
        const Real value = f(point);
        if (!std::isfinite(value))
            throw NumericalError("wirtinger_fd_gradient: non-finite function value");
        return value;
    };

    CMatrix<Real> grad(x.rows(), x.cols());
    CMatrix<Real> probe = x;
    const std::complex<Real> re_step(h, 0);
    const std::complex<Real> im_step(0, h);
    for (Eigen::Index c = 0; c < x.cols(); ++c)
        for (Eigen::Index r = 0; r < x.rows(); ++r)
        {
            const std::complex<Real> original = x(r, c);
            probe(r, c) = original + re_step;
            const Real re_plus = eval(probe);
            probe(r, c) = original - re_step;
            const Real re_minus = eval(probe);
            probe(r, c) = original + im_step;
            const Real im_plus = eval(probe);
            probe(r, c) = original - im_step;
            const Real im_minus = eval(probe);
            probe(r, c) = original;

            const Real d_re = (re_plus - re_minus) / (Real(2) * h);
            const Real d_im = (im_plus - im_minus) / (Real(2) * h);
            grad(r, c) = std::complex<Real>(Real(0.5) * d_re, Real(0.5) * d_im);
        }
    return grad;
}

/// Re tr(X^H Y), the real inner product that matches the Wirtinger convention.
template <typename Real>
Real real_inner(const CMatrix<Real>& x, const CMatrix<Real>& y)
{
    return std::real(x.cwiseProduct(y.conjugate()).sum());
}

/// ||x - y||_F / max(||y||_F, floor)
template <typename Real>
Real relative_error(const CMatrix<Real>& x, const CMatrix<Real>& y,
                    Real floor = std::numeric_limits<Real>::min())
{
    return (x - y).norm() / std::max(y.norm(), floor);
}

} // namespace jcas

#endif // JCAS_NUMERICS_HPP
