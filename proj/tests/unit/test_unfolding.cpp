// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "rbf/model.hpp"
#include "rbf/unfolding.hpp"

using namespace rbf;
namespace fs = std::filesystem;

namespace {

std::vector<double> to_std(const RVector& v) { return {v.data(), v.data() + v.size()}; }

fs::path temp_file(const char* name) {
    const auto dir = fs::temp_directory_path() / "rbf_unit";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_SUITE("unfolding") {

TEST_CASE("beamformer gradient matches central differences") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> unif(0.1, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int L = 3 + trial % 3, K = 2 + trial % 3;
        SystemConfig cfg = SystemConfig::make(L, K, 1.0, 10.0);
        for (auto& w : cfg.weights) w = unif(rng);
        const CMatrix H = oracle::random_matrix(rng, L, K);
        const CMatrix V = oracle::random_matrix(rng, L, K);
        AuxiliaryState aux{RVector(K), RVector(K)};
        for (int k = 0; k < K; ++k) {
            aux.g(k) = unif(rng);
            aux.u(k) = unif(rng);
        }
        const auto f = [&](const CMatrix& X) {
            return oracle::quadratic(H, X, to_std(aux.g), to_std(aux.u), cfg.sigma2, cfg.weights);
        };
        const CMatrix fd = oracle::fd_gradient(f, V);
        // (d/dRe, d/dIm) of a real function is twice its conjugate Wirtinger derivative
        const CMatrix analytic = 2.0 * grad_v_objective(H, V, aux, cfg);
        CHECK((analytic - fd).norm() / fd.norm() < 1e-5);
    }
}

TEST_CASE("gradient step improves the quadratic for a small step") {
    std::mt19937_64 rng(42);
    SystemConfig cfg = SystemConfig::make(4, 4, 1.0, 1e6);
    cfg.objective_mode = ObjectiveMode::QuadraticOnly;
    for (int trial = 0; trial < 20; ++trial) {
        const CMatrix H = oracle::random_matrix(rng, 4, 4);
        const CMatrix V = oracle::random_matrix(rng, 4, 4);
        const AuxiliaryState aux = refresh_aux(H, V, cfg);
        const CMatrix next = pgd_step(H, V, aux, 1e-3, cfg);
        CHECK(qt_objective(H, next, aux, cfg) > qt_objective(H, V, aux, cfg));
    }
}

TEST_CASE("matched-filter start uses the full budget") {
    std::mt19937_64 rng(43);
    const CMatrix H = oracle::random_matrix(rng, 4, 3);
    const CMatrix V = init_beamformer(H, 7.0);
    CHECK(total_power(V) == doctest::Approx(7.0).epsilon(1e-14));
    const CMatrix ratio = V.cwiseQuotient(H);
    CHECK(std::abs(ratio(0, 0).imag()) < 1e-14);
    CHECK(std::abs(ratio(2, 1) - ratio(0, 0)) < 1e-12);
    CHECK_THROWS_AS(init_beamformer(CMatrix::Zero(4, 3), 7.0), ConfigError);
}

TEST_CASE("forward pass replays the layer recipe") {
    std::mt19937_64 rng(44);
    SystemConfig cfg = SystemConfig::make(4, 4, 1.0, 10.0);
    RMatrix mu(3, 2);
    mu << 0.7, 1.1, 0.3, 0.9, 1.4, 0.2;
    const StepSizeSchedule schedule(mu);
    for (int trial = 0; trial < 10; ++trial) {
        const CMatrix H = oracle::random_matrix(rng, 4, 4);
        const UnfoldTrace trace = forward(H, schedule, cfg);
        REQUIRE(trace.aux.size() == 3);
        REQUIRE(trace.layer_out.size() == 3);
        CMatrix V = init_beamformer(H, cfg.p_max);
        for (int m = 0; m < 3; ++m) {
            const AuxiliaryState aux = refresh_aux(H, V, cfg);
            CHECK((aux.g - trace.aux[m].g).norm() < 1e-12 * (1.0 + aux.g.norm()));
            CHECK((aux.u - trace.aux[m].u).norm() < 1e-12 * (1.0 + aux.u.norm()));
            for (int n = 0; n < 2; ++n) V = pgd_step(H, V, aux, mu(m, n), cfg);
            CHECK((V - trace.layer_out[m]).norm() < 1e-12 * V.norm());
            CHECK(total_power(trace.layer_out[m]) <= cfg.p_max);
        }
        CHECK(trace.V == trace.layer_out.back());
    }
}

TEST_CASE("zero steps or zero step sizes leave the matched filter in place") {
    std::mt19937_64 rng(45);
    SystemConfig cfg = SystemConfig::make(4, 4, 1.0, 10.0);
    const CMatrix H = oracle::random_matrix(rng, 4, 4);
    const CMatrix mf = init_beamformer(H, cfg.p_max);
    CHECK(forward(H, StepSizeSchedule(3, 0), cfg).V == mf);
    CHECK((forward(H, StepSizeSchedule(2, 4, 0.0), cfg).V - mf).norm() < 1e-14 * mf.norm());
}

TEST_CASE("schedule files round trip exactly") {
    RMatrix mu(2, 3);
    mu << 1.0 / 3.0, -0.25, 1e-17, 2.5, std::nextafter(1.0, 2.0), 0.0;
    const StepSizeSchedule s(mu);
    const auto path = temp_file("sched.txt");
    save_schedule(path, s);
    CHECK(load_schedule(path) == s);
    std::ifstream is(path);
    std::string header;
    std::getline(is, header);
    CHECK(header == "# UI-DUFP schedule M=2 N=3");
}

TEST_CASE("broken schedule files are rejected") {
    CHECK_THROWS_AS(load_schedule(temp_file("nope.txt")), MissingArtifactError);
    const auto path = temp_file("broken.txt");
    {
        std::ofstream os(path);
        os << "# UI-DUFP schedule M=2 N=2\n1 1\n1\n";
    }
    CHECK_THROWS_AS(load_schedule(path), ConfigError);
    {
        std::ofstream os(path);
        os << "garbage\n";
    }
    CHECK_THROWS_AS(load_schedule(path), ConfigError);
    {
        std::ofstream os(path);
        os << "# UI-DUFP schedule M=1 N=2\n1 1 1\n";
    }
    CHECK_THROWS_AS(load_schedule(path), ConfigError);
}

}  // TEST_SUITE
