// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "rbf/channel.hpp"

using namespace rbf;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
    const auto dir = fs::temp_directory_path() / "rbf_unit";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_SUITE("channel") {

TEST_CASE("seed derivation separates streams and indices") {
    std::set<std::uint64_t> seen;
    for (auto s : {Stream::TrainChannels, Stream::TrainErrors, Stream::TestChannels,
                   Stream::TestErrors, Stream::Adhoc})
        for (std::uint64_t i = 0; i < 100; ++i) seen.insert(derive_seed(Seed{7}, s, i).value);
    CHECK(seen.size() == 500);
    CHECK(derive_seed(Seed{7}, Stream::Adhoc, 3).value == derive_seed(Seed{7}, Stream::Adhoc, 3).value);
    CHECK(derive_seed(Seed{7}, Stream::Adhoc, 3).value != derive_seed(Seed{8}, Stream::Adhoc, 3).value);
}

TEST_CASE("complex normal draws have the requested moments") {
    Rng rng = make_rng(Seed{42});
    CMatrix M(200, 500);
    fill_complex_normal(rng, M, 2.0);
    const double n = static_cast<double>(M.size());
    const cd mean = M.sum() / n;
    const double power = M.cwiseAbs2().sum() / n;
    const double re2 = M.real().array().square().sum() / n;
    const double pseudo = std::abs((M.array() * M.array()).sum() / n);
    // 1e5 samples: standard errors around 0.0045 for the mean, 0.009 for the power.
    CHECK(std::abs(mean) < 0.03);
    CHECK(power == doctest::Approx(2.0).epsilon(0.02));
    CHECK(re2 == doctest::Approx(1.0).epsilon(0.02));
    CHECK(pseudo < 0.05);  // circular symmetry: E[x^2] = 0
}

TEST_CASE("channel sampling is reproducible and shaped") {
    const auto a = sample_channels(Seed{5}, 4, 3, 10);
    const auto b = sample_channels(Seed{5}, 4, 3, 10);
    const auto c = sample_channels(Seed{6}, 4, 3, 10);
    REQUIRE(a.size() == 10);
    CHECK(a[0].rows() == 4);
    CHECK(a[0].cols() == 3);
    for (int i = 0; i < 10; ++i) CHECK(a[i] == b[i]);
    CHECK(a[0] != c[0]);
    CHECK(a[0] != a[1]);
}

TEST_CASE("uncertainty samples share unit draws across error levels") {
    const auto H = sample_channels(Seed{1}, 4, 4, 1)[0];
    const auto lo = inject_uncertainty(H, 0.01, 50, Seed{9});
    const auto hi = inject_uncertainty(H, 0.16, 50, Seed{9});
    const auto none = inject_uncertainty(H, 0.0, 50, Seed{9});
    REQUIRE(lo.samples.size() == 50);
    for (int b = 0; b < 50; ++b) {
        const CMatrix e_lo = lo.samples[b] - H;
        const CMatrix e_hi = hi.samples[b] - H;
        CHECK((e_hi - 4.0 * e_lo).norm() < 1e-12);
        CHECK(none.samples[b] == H);
    }
    CHECK(lo.nominal == H);
}

TEST_CASE("uncertainty error variance") {
    const ChannelMatrix H = ChannelMatrix::Zero(4, 4);
    const auto batch = inject_uncertainty(H, 0.09, 4000, Seed{3});
    double power = 0.0;
    for (const auto& s : batch.samples) power += s.cwiseAbs2().sum();
    power /= 4000.0 * 16.0;
    CHECK(power == doctest::Approx(0.09).epsilon(0.03));
}

TEST_CASE("binary channel files round trip bit-exactly") {
    const auto path = temp_file("roundtrip.rbch");
    const auto channels = sample_channels(Seed{2}, 3, 5, 7);
    save_channels(path, channels);
    const auto back = load_channels(path);
    REQUIRE(back.size() == channels.size());
    for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i] == channels[i]);
    CHECK(fs::file_size(path) == 4 + 4 + 4 + 4 + 8 + 7 * 3 * 5 * 16);
}

TEST_CASE("corrupt channel files are rejected") {
    const auto path = temp_file("bad.rbch");
    {
        std::ofstream os(path, std::ios::binary);
        os << "NOPE and some more bytes";
    }
    CHECK_THROWS_AS(load_channels(path), ConfigError);

    const auto good = temp_file("trunc.rbch");
    save_channels(good, sample_channels(Seed{2}, 2, 2, 3));
    fs::resize_file(good, fs::file_size(good) - 10);
    CHECK_THROWS_AS(load_channels(good), ConfigError);
    CHECK_THROWS_AS(load_channels(temp_file("missing.rbch")), ConfigError);
}

}  // TEST_SUITE
