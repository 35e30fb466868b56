// SPDX-License-Identifier: Apache-2.0
#include "rbf/channel.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace rbf {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

Seed derive_seed(Seed seed, Stream stream, std::uint64_t index) {
    std::uint64_t h = splitmix64(seed.value);
    h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
    h = splitmix64(h ^ index);
    return Seed{h};
}

Rng make_rng(Seed seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed.value),
                      static_cast<std::uint32_t>(seed.value >> 32)};
    return Rng(seq);
}

void fill_complex_normal(Rng& rng, CMatrix& M, double variance) {
    std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
    // column-major: antenna fastest, then user
    for (Eigen::Index k = 0; k < M.cols(); ++k)
        for (Eigen::Index l = 0; l < M.rows(); ++l) {
            const double re = normal(rng);
            const double im = normal(rng);
            M(l, k) = cd(re, im);
        }
}

std::vector<ChannelMatrix> sample_channels(Seed seed, int L, int K, int count) {
    if (L <= 0 || K <= 0) throw ConfigError("sample_channels: L and K must be positive");
    if (count < 1) throw ConfigError("sample_channels: count must be >= 1");
    auto rng = make_rng(seed);
    std::vector<ChannelMatrix> out(static_cast<std::size_t>(count), ChannelMatrix(L, K));
    for (auto& H : out) fill_complex_normal(rng, H, 1.0);
    return out;
}

UncertaintyBatch inject_uncertainty(const ChannelMatrix& H, double sigma_h2, int B, Seed seed) {
    if (!(sigma_h2 >= 0.0)) throw ConfigError("inject_uncertainty: sigma_h2 must be >= 0");
    if (B < 1) throw ConfigError("inject_uncertainty: B must be >= 1");
    UncertaintyBatch batch;
    batch.nominal = H;
    batch.sigma_h2 = sigma_h2;
    batch.samples.reserve(static_cast<std::size_t>(B));
    auto rng = make_rng(seed);
    const double scale = std::sqrt(sigma_h2);
    CMatrix unit(H.rows(), H.cols());
    for (int b = 0; b < B; ++b) {
        fill_complex_normal(rng, unit, 1.0);
        batch.samples.emplace_back(H + scale * unit);
    }
    return batch;
}

namespace {

constexpr std::array<char, 4> kMagic{'R', 'B', 'C', 'H'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::ostream& os, T value) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(bytes.begin(), bytes.end());
    os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
    std::array<unsigned char, sizeof(T)> bytes{};
    is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T));
    if (!is) throw ConfigError("channel file truncated");
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
}

}  // namespace

void save_channels(const std::filesystem::path& path, const std::vector<ChannelMatrix>& channels) {
    if (channels.empty()) throw ConfigError("save_channels: empty dataset");
    const auto L = channels.front().rows();
    const auto K = channels.front().cols();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
    os.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(os, kVersion);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(L));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(K));
    put_le<std::uint64_t>(os, channels.size());
    for (const auto& H : channels) {
        if (H.rows() != L || H.cols() != K)
            throw ConfigError("save_channels: inconsistent channel dimensions");
        for (Eigen::Index k = 0; k < K; ++k)
            for (Eigen::Index l = 0; l < L; ++l) {
                put_le<double>(os, H(l, k).real());
                put_le<double>(os, H(l, k).imag());
            }
    }
    if (!os) throw ConfigError("write failed for " + path.string());
}

std::vector<ChannelMatrix> load_channels(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open " + path.string());
    std::array<char, 4> magic{};
    is.read(magic.data(), magic.size());
    if (!is || magic != kMagic) throw ConfigError(path.string() + ": bad magic, expected RBCH");
    const auto version = get_le<std::uint32_t>(is);
    if (version != kVersion)
        throw ConfigError(path.string() + ": unsupported version " + std::to_string(version));
    const auto L = get_le<std::uint32_t>(is);
    const auto K = get_le<std::uint32_t>(is);
    const auto count = get_le<std::uint64_t>(is);
    if (L == 0 || K == 0) throw ConfigError(path.string() + ": zero dimension");
    std::vector<ChannelMatrix> out;
    for (std::uint64_t n = 0; n < count; ++n) {
        ChannelMatrix H(L, K);
        for (std::uint32_t k = 0; k < K; ++k)
            for (std::uint32_t l = 0; l < L; ++l) {
                const double re = get_le<double>(is);
                const double im = get_le<double>(is);
                H(l, k) = cd(re, im);
            }
        out.push_back(std::move(H));
    }
    return out;
}

}  // namespace rbf
