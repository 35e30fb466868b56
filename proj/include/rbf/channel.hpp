// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "rbf/types.hpp"

namespace rbf {

struct Seed {
    std::uint64_t value = 0;
};

/// Independent random streams derived from one run seed.
enum class Stream : std::uint64_t {
    TrainChannels = 1,
    TrainErrors = 2,
    TestChannels = 3,
    TestErrors = 4,
    Adhoc = 5,
};

/// Counter-based split: (seed, stream, index) -> sub-seed. Distinct triples map
/// to statistically independent generators.
Seed derive_seed(Seed seed, Stream stream, std::uint64_t index = 0);

using Rng = std::mt19937_64;
Rng make_rng(Seed seed);

/// Fills M with i.i.d. CN(0, variance) draws (real and imaginary parts N(0, variance/2)).
void fill_complex_normal(Rng& rng, CMatrix& M, double variance);

/// count i.i.d. Rayleigh channels, entries CN(0,1).
std::vector<ChannelMatrix> sample_channels(Seed seed, int L, int K, int count);

struct UncertaintyBatch {
    ChannelMatrix nominal;
    std::vector<ChannelMatrix> samples;
    double sigma_h2 = 0.0;
};

/// B perturbed copies H + E_b, E_b entries CN(0, sigma_h2). The underlying
/// unit-variance draws depend only on (seed, B, dims), so batches for different
/// sigma_h2 share common random numbers.
UncertaintyBatch inject_uncertainty(const ChannelMatrix& H, double sigma_h2, int B, Seed seed);

/// Binary channel dataset ("RBCH" format, little-endian).
void save_channels(const std::filesystem::path& path, const std::vector<ChannelMatrix>& channels);
std::vector<ChannelMatrix> load_channels(const std::filesystem::path& path);

}  // namespace rbf
