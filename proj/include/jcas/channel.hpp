// SPDX-License-Identifier: Apache-2.0

#ifndef JCAS_CHANNEL_HPP
#define JCAS_CHANNEL_HPP

#include "jcas/numerics.hpp"

#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace jcas
{

/// Half-wavelength ULA response toward `theta_deg`: entry n is exp(j n pi sin theta).
template <typename Real>
CVector<Real> steering_vector(Real theta_deg, Eigen::Index n_antennas)
{
    if (!(theta_deg >= Real(-90) && theta_deg <= Real(90)))
        throw ConfigError("steering_vector: angle must lie in [-90, 90] degrees");
    if (n_antennas < 1)
        throw ConfigError("steering_vector: need at least one antenna");
    const Real phase_step = std::numbers::pi_v<Real> * std::sin(theta_deg * std::numbers::pi_v<Real> / Real(180));
    CVector<Real> a(n_antennas);
    for (Eigen::Index n = 0; n < n_antennas; ++n)
        a(n) = std::polar(Real(1), phase_step * static_cast<Real>(n));
    return a;
}

/// Steering vectors for every angle, one per column.
template <typename Real>
CMatrix<Real> steering_matrix(std::span<const Real> angles_deg, Eigen::Index n_antennas)
{
    CMatrix<Real> out(n_antennas, static_cast<Eigen::Index>(angles_deg.size()));
    for (std::size_t t = 0; t < angles_deg.size(); ++t)
        out.col(static_cast<Eigen::Index>(t)) = steering_vector(angles_deg[t], n_antennas);
    return out;
}

/// Parameters of the clustered multipath stand-in for the extended
/// Saleh-Valenzuela channel: `paths` rays with CN(0,1) gains and angles drawn
/// uniformly on [-angle_spread_deg, angle_spread_deg].
struct ChannelModel
{
    int paths = 10;
    double angle_spread_deg = 90.0;

    bool operator==(const ChannelModel&) const = default;
};

/// K downlink channels stacked as rows: H.row(k) = h_k^H.
struct ChannelSet
{
    CMatrix<double> H;
    std::uint64_t seed = 0;
    ChannelModel model;

    Eigen::Index users() const { return H.rows(); }
    Eigen::Index antennas() const { return H.cols(); }
    /// h_k as an N x 1 column.
    CVector<double> user_channel(Eigen::Index k) const { return H.row(k).adjoint(); }
};

/// h = sqrt(N / L) * sum_l gain_l * a(angle_l)
template <typename Real>
CVector<Real> multipath_channel(std::span<const std::complex<Real>> gains, std::span<const Real> angles_deg,
                                Eigen::Index n_antennas)
{
    if (gains.size() != angles_deg.size() || gains.empty())
        throw ConfigError("multipath_channel: need one angle per path and at least one path");
    CVector<Real> h = CVector<Real>::Zero(n_antennas);
    for (std::size_t l = 0; l < gains.size(); ++l)
        h += gains[l] * steering_vector(angles_deg[l], n_antennas);
    return h * std::sqrt(static_cast<Real>(n_antennas) / static_cast<Real>(gains.size()));
}

/// Deterministic per-item seed derived from a base seed (SplitMix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

ChannelSet gen_channels(int n_users, int n_antennas, const ChannelModel& model, std::uint64_t seed);

/// `count` channel sets with seeds derive_seed(seed, i).
std::vector<ChannelSet> gen_channel_corpus(int count, int n_users, int n_antennas, const ChannelModel& model,
                                           std::uint64_t seed);

} // namespace jcas

#endif // JCAS_CHANNEL_HPP
