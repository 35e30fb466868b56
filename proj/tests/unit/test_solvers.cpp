// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rbf/baselines.hpp"
#include "rbf/channel.hpp"
#include "rbf/fp_solver.hpp"
#include "rbf/model.hpp"

using namespace rbf;

namespace {

RVector random_positive(std::mt19937_64& rng, int n, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    RVector v(n);
    for (int i = 0; i < n; ++i) v(i) = d(rng);
    return v;
}

double beam_power(const ChannelMatrix& H, const RVector& u, const RVector& g, double nu,
                  const SystemConfig& cfg) {
    return total_power(solve_v_given_nu(H, u, g, nu, cfg));
}

}  // namespace

TEST_SUITE("fp_solver") {

TEST_CASE("closed-form beams satisfy the stationarity system") {
    std::mt19937_64 rng(21);
    SystemConfig cfg = SystemConfig::make(4, 3, 1.0, 10.0);
    for (int trial = 0; trial < 30; ++trial) {
        const CMatrix H = oracle::random_matrix(rng, 4, 3);
        const RVector u = random_positive(rng, 3, 0.1, 1.0);
        const RVector g = random_positive(rng, 3, 0.0, 4.0);
        const double nu = 0.05 * (trial + 1);
        const CMatrix V = solve_v_given_nu(H, u, g, nu, cfg);
        // (sum_j u_j^2 h_j h_j^H + nu I) v_k = sqrt(w_k (1 + g_k)) u_k h_k, checked column-wise
        for (int k = 0; k < 3; ++k) {
            CVector lhs = nu * V.col(k);
            for (int j = 0; j < 3; ++j)
                lhs += u(j) * u(j) * H.col(j) * H.col(j).dot(V.col(k));
            const CVector rhs = std::sqrt(1.0 + g(k)) * u(k) * H.col(k);
            CHECK((lhs - rhs).norm() < 1e-10 * (1.0 + rhs.norm()));
        }
    }
}

TEST_CASE("unregularized solve on a rank-deficient system fails loudly") {
    SystemConfig cfg = SystemConfig::make(4, 2, 1.0, 10.0);
    std::mt19937_64 rng(22);
    const CMatrix H = oracle::random_matrix(rng, 4, 2);
    CHECK_THROWS_AS(solve_v_given_nu(H, RVector::Ones(2), RVector::Ones(2), 0.0, cfg), SolverError);
    CHECK_NOTHROW(solve_v_given_nu(H, RVector::Ones(2), RVector::Ones(2), 0.1, cfg));
}

TEST_CASE("bisection meets the budget when the constraint binds") {
    std::mt19937_64 rng(23);
    int active = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int K = 2 + trial % 3;
        SystemConfig cfg = SystemConfig::make(4, K, 1.0, 0.5 + trial % 5);
        const CMatrix H = oracle::random_matrix(rng, 4, K);
        const RVector u = random_positive(rng, K, 0.05, 1.0);
        const RVector g = random_positive(rng, K, 0.0, 3.0);
        const NuResult r = find_nu(H, u, g, cfg);
        CHECK(r.nu >= 0.0);
        CHECK(r.power <= cfg.p_max);
        // K < L: when even nu -> 0+ is under budget the bracket collapses onto 0+
        const bool collapsed = r.power < cfg.p_max * (1.0 - 1e-6);
        if (r.nu > 0.0 && !collapsed) {
            ++active;
            CHECK(beam_power(H, u, g, r.nu, cfg) == doctest::Approx(r.power).epsilon(1e-10));
        }
        if (collapsed && r.nu > 0.0) CHECK(K < 4);
    }
    CHECK(active > 20);
}

TEST_CASE("inactive constraint returns nu = 0") {
    // Large u makes the unconstrained beams tiny.
    SystemConfig cfg = SystemConfig::make(3, 3, 1.0, 100.0);
    std::mt19937_64 rng(24);
    const CMatrix H = oracle::random_matrix(rng, 3, 3);
    const NuResult r = find_nu(H, RVector::Constant(3, 5.0), RVector::Ones(3), cfg);
    CHECK(r.nu == 0.0);
    CHECK(r.power < 100.0);
}

TEST_CASE("fp ascent: objective and rate never decrease, beams stay feasible") {
    std::mt19937_64 rng(25);
    for (int trial = 0; trial < 20; ++trial) {
        SystemConfig cfg = SystemConfig::make(4, 4, 1.0, trial % 2 ? 10.0 : 1.0);
        cfg.weights = {1.0, 0.5, 2.0, 1.0};
        const CMatrix H = oracle::random_matrix(rng, 4, 4);
        const FpResult r = run_fp(H, cfg);
        REQUIRE(r.trace.objective.size() == static_cast<std::size_t>(r.trace.iterations));
        for (std::size_t t = 1; t < r.trace.objective.size(); ++t) {
            CHECK(r.trace.objective[t] >= r.trace.objective[t - 1] - 1e-8);
            CHECK(r.trace.wsr[t] >= r.trace.wsr[t - 1] - 1e-8);
        }
        CHECK(total_power(r.V) <= cfg.p_max * (1.0 + 1e-12));
        // objective is a lower bound of the rate it was computed at
        CHECK(r.trace.objective.back() <= r.trace.wsr.back() + 1e-9);
        for (int k = 0; k < 4; ++k) {
            const cd s = H.col(k).dot(r.V.col(k));
            CHECK(std::abs(s.imag()) < 1e-9 * (1.0 + std::abs(s)));
            CHECK(s.real() > 0.0);
        }
    }
}

TEST_CASE("fp converges to a fixed point") {
    std::mt19937_64 rng(26);
    SystemConfig cfg = SystemConfig::make(4, 4, 1.0, 10.0);
    FpSettings s;
    s.max_iters = 2000;
    s.rel_tol = 1e-12;
    const CMatrix H = oracle::random_matrix(rng, 4, 4);
    const FpResult a = run_fp(H, cfg, s);
    CHECK(a.trace.converged);
    FpSettings one = s;
    one.max_iters = 1;
    const FpResult b = run_fp(H, cfg, one, a.V);
    CHECK(oracle::rel(wsr(H, b.V, cfg), wsr(H, a.V, cfg)) < 1e-8);
}

TEST_CASE("single user reaches the matched-filter capacity") {
    std::mt19937_64 rng(27);
    for (int trial = 0; trial < 10; ++trial) {
        SystemConfig cfg = SystemConfig::make(4, 1, 1.0, 10.0);
        const CMatrix h = oracle::random_matrix(rng, 4, 1);
        const double capacity = std::log2(1.0 + cfg.p_max * h.squaredNorm() / cfg.sigma2);
        CHECK(std::abs(wsr(h, run_fp(h, cfg).V, cfg) - capacity) < 1e-6);
        CHECK(std::abs(wsr(h, run_wmmse(h, cfg).V, cfg) - capacity) < 1e-6);
    }
}

TEST_CASE("settings and dimensions are validated") {
    SystemConfig cfg = SystemConfig::make(4, 4, 1.0, 10.0);
    FpSettings s;
    s.max_iters = 0;
    CHECK_THROWS_AS(run_fp(CMatrix::Ones(4, 4), cfg, s), ConfigError);
    CHECK_THROWS_AS(run_fp(CMatrix::Ones(3, 4), cfg), ConfigError);
    WmmseSettings w;
    w.rel_tol = 0.0;
    CHECK_THROWS_AS(run_wmmse(CMatrix::Ones(4, 4), cfg, w), ConfigError);
}

}  // TEST_SUITE

TEST_SUITE("baselines") {

TEST_CASE("wmmse rate is non-decreasing and feasible") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        SystemConfig cfg = SystemConfig::make(4, 4, 1.0, 10.0);
        const CMatrix H = oracle::random_matrix(rng, 4, 4);
        const WmmseResult r = run_wmmse(H, cfg);
        for (std::size_t t = 1; t < r.trace.wsr.size(); ++t)
            CHECK(r.trace.wsr[t] >= r.trace.wsr[t - 1] - 1e-8);
        CHECK(total_power(r.V) <= cfg.p_max * (1.0 + 1e-12));
        CHECK(r.trace.wsr.back() == doctest::Approx(wsr(H, r.V, cfg)).epsilon(1e-12));
    }
}

TEST_CASE("wmmse and fp produce the same rate trajectory from the same start") {
    // Sum-rate WMMSE and the quadratic-transform FP iteration are known to
    // generate identical beamformers; only bisection tolerances separate them.
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 10; ++trial) {
        SystemConfig cfg = SystemConfig::make(4, 4, 1.0, 10.0);
        const CMatrix H = oracle::random_matrix(rng, 4, 4);
        FpSettings fs;
        fs.max_iters = 6;
        fs.rel_tol = 1e-15;
        WmmseSettings ws;
        ws.max_iters = 6;
        ws.rel_tol = 1e-15;
        const FpResult f = run_fp(H, cfg, fs);
        const WmmseResult w = run_wmmse(H, cfg, ws);
        const std::size_t n = std::min(f.trace.wsr.size(), w.trace.wsr.size());
        for (std::size_t t = 0; t < n; ++t)
            CHECK(oracle::rel(w.trace.wsr[t], f.trace.wsr[t]) < 1e-5);
    }
}

TEST_CASE("rzf splits power evenly and approaches zero forcing") {
    std::mt19937_64 rng(33);
    SystemConfig cfg = SystemConfig::make(4, 4, 1.0, 10.0);
    for (int trial = 0; trial < 20; ++trial) {
        const CMatrix H = oracle::random_matrix(rng, 4, 4);
        const CMatrix V = rzf_beamformer(H, 1.0, cfg);
        for (int k = 0; k < 4; ++k) CHECK(V.col(k).squaredNorm() == doctest::Approx(2.5));
        const CMatrix Z = rzf_beamformer(H, 1e-9, cfg);
        const CMatrix G = H.adjoint() * Z;
        for (int k = 0; k < 4; ++k)
            for (int j = 0; j < 4; ++j)
                if (j != k) CHECK(std::abs(G(k, j)) < 1e-6 * std::abs(G(k, k)));
    }
}

TEST_CASE("rzf rejects a singular Gram matrix") {
    // more antennas than users: H H^H has rank K < L
    SystemConfig cfg = SystemConfig::make(3, 2, 1.0, 10.0);
    std::mt19937_64 rng(34);
    CHECK_THROWS_AS(rzf_beamformer(oracle::random_matrix(rng, 3, 2), 0.0, cfg), SolverError);
    CHECK_THROWS_AS(rzf_beamformer(oracle::random_matrix(rng, 3, 2), -1.0, cfg), ConfigError);
}

}  // TEST_SUITE
