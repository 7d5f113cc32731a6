// SPDX-License-Identifier: Apache-2.0

#include "jcas/channel.hpp"

namespace jcas
{

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index)
{
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

ChannelSet gen_channels(int n_users, int n_antennas, const ChannelModel& model, std::uint64_t seed)
{
    if (n_users < 1 || n_antennas < n_users)
        throw ConfigError("gen_channels: require 1 <= K <= N");
    if (model.paths < 1)
        throw ConfigError("gen_channels: require at least one path");
    if (!(model.angle_spread_deg > 0.0 && model.angle_spread_deg <= 90.0))
        throw ConfigError("gen_channels: angle spread must lie in (0, 90] degrees");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    std::uniform_real_distribution<double> angle(-model.angle_spread_deg, model.angle_spread_deg);

    ChannelSet out;
    out.seed = seed;
    out.model = model;
    out.H.resize(n_users, n_antennas);
    std::vector<std::complex<double>> gains(static_cast<std::size_t>(model.paths));
    std::vector<double> angles(static_cast<std::size_t>(model.paths));
    for (int k = 0; k < n_users; ++k)
    {
        for (int l = 0; l < model.paths; ++l)
        {
            const double re = gauss(rng);
            const double im = gauss(rng);
            gains[static_cast<std::size_t>(l)] = {re, im};
            angles[static_cast<std::size_t>(l)] = angle(rng);
        }
        const CVector<double> h = multipath_channel<double>(gains, angles, n_antennas);
        out.H.row(k) = h.adjoint();
    }
    return out;
}

std::vector<ChannelSet> gen_channel_corpus(int count, int n_users, int n_antennas, const ChannelModel& model,
                                           std::uint64_t seed)
{
    std::vector<ChannelSet> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i)
        out.push_back(gen_channels(n_users, n_antennas, model, derive_seed(seed, static_cast<std::uint64_t>(i))));
    return out;
}

} // namespace jcas
