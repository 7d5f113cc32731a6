// SPDX-License-Identifier: Apache-2.0
//
// Binary container used for channel datasets, benchmark covariances and
// precoders:
//
//   bytes 0..7    magic "JCASBIN1"
//   bytes 8..15   header length L, uint64 little-endian
//   next L bytes  UTF-8 JSON header; "schema" names the payload layout
//   remainder     float64 little-endian, interleaved (re, im), each matrix
//                 row-major, matrices in header order
//
// Schemas: "channels-v1", "psi-v1", "precoders-v1".

#ifndef JCAS_CONTAINER_HPP
#define JCAS_CONTAINER_HPP

#include "jcas/beampattern.hpp"
#include "jcas/channel.hpp"
#include "jcas/objective.hpp"

#include <filesystem>
#include <stdexcept>
#include <vector>

namespace jcas
{

/// Wrong magic, unknown schema, or a truncated/malformed container.
class FormatError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

void save_dataset(const std::filesystem::path& path, const std::vector<ChannelSet>& channels);
std::vector<ChannelSet> load_dataset(const std::filesystem::path& path);

void save_covariance(const std::filesystem::path& path, const BenchmarkCovariance<double>& cov);
BenchmarkCovariance<double> load_covariance(const std::filesystem::path& path);

void save_precoders(const std::filesystem::path& path, const Precoders<double>& pc);
Precoders<double> load_precoders(const std::filesystem::path& path);

} // namespace jcas

#endif // JCAS_CONTAINER_HPP
