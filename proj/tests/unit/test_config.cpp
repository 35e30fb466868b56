// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "rbf/config_file.hpp"

using namespace rbf;

TEST_SUITE("config") {

TEST_CASE("defaults") {
    const ExperimentConfig cfg;
    CHECK(cfg.p_max() == doctest::Approx(10.0));
    CHECK(dbm_to_linear(40.0, PowerConvention::Milliwatt) == doctest::Approx(1e4));
    CHECK(dbm_to_linear(30.0, PowerConvention::Watt) == doctest::Approx(1.0));
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.system().weights == std::vector<double>(4, 1.0));
}

TEST_CASE("parsing keys, lists and comments") {
    const auto cfg = parse_config_text(
        "# comment line\n"
        "L = 8   # trailing comment\n"
        "K=8\n"
        "\n"
        "sigma_h2_list = 0.01, 0.17\n"
        "solvers = fp, dufp\n"
        "eval_mode = surrogate\n"
        "power_convention = milliwatt\n"
        "deep_supervision = false\n"
        "seed = 12345678901\n");
    CHECK(cfg.L == 8);
    CHECK(cfg.K == 8);
    CHECK(cfg.sigma_h2_list == std::vector<double>{0.01, 0.17});
    CHECK(cfg.solvers == std::vector<SolverKind>{SolverKind::FP, SolverKind::DUFP});
    CHECK(cfg.eval_mode == EvalMode::Surrogate);
    CHECK(cfg.p_max() == doctest::Approx(1e4));
    CHECK_FALSE(cfg.deep_supervision);
    CHECK(cfg.seed == 12345678901ULL);
}

TEST_CASE("echo parses back to the same configuration") {
    ExperimentConfig cfg;
    cfg.sigma_h2 = 0.1 + 0.2;  // not exactly representable in short decimal
    cfg.weights = {1.0, 2.0, 0.5, 1.0 / 3.0};
    cfg.loss_mode = LossMode::Standard;
    cfg.solvers = {SolverKind::RZF};
    const std::string text = cfg.to_text();
    const ExperimentConfig back = parse_config_text(text);
    CHECK(back.to_text() == text);
    CHECK(back.sigma_h2 == cfg.sigma_h2);
    CHECK(back.weights == cfg.weights);
}

TEST_CASE("bad input is rejected") {
    CHECK_THROWS_AS(parse_config_text("colour = blue\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("L 4\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("L = four\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("L = 4.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("solvers = fp, magic\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("weights = 1, 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("seed = -1\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/rbf.cfg"), ConfigError);
    ExperimentConfig cfg = parse_config_text("layers_list = \n");
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = parse_config_text("B = 10\n");
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("fast profile") {
    ExperimentConfig cfg;
    cfg.apply_fast();
    CHECK(cfg.train_batches == 200);
    CHECK(cfg.batch_size == 16);
    CHECK(cfg.test_batches == 5);
    CHECK(cfg.B == 200);
    CHECK(cfg.learning_rate == 1e-2);
}

}  // TEST_SUITE
