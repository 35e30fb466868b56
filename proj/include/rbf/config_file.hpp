// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rbf/fp_solver.hpp"
#include "rbf/baselines.hpp"
#include "rbf/training.hpp"
#include "rbf/types.hpp"

namespace rbf {

enum class EvalMode { Surrogate, Shannon };

/// How a dBm budget maps to linear power against sigma2 = 1.
///   Milliwatt: 10^(dBm/10)        (40 dBm -> 1e4)
///   Watt:      10^((dBm-30)/10)   (40 dBm -> 10)
enum class PowerConvention { Milliwatt, Watt };

enum class SolverKind { FP, WMMSE, RZF, DUFP };

std::string to_string(EvalMode mode);
std::string to_string(PowerConvention convention);
std::string to_string(SolverKind kind);
EvalMode parse_eval_mode(const std::string& text);
PowerConvention parse_power_convention(const std::string& text);
SolverKind parse_solver(const std::string& text);

double dbm_to_linear(double dbm, PowerConvention convention);

/// Every setting of a run. Loaded from a line-oriented `key = value` file;
/// '#' starts a comment, lists are comma separated, unknown keys are errors.
struct ExperimentConfig {
    // system
    int L = 4;
    int K = 4;
    double sigma2 = 1.0;
    double p_max_dbm = 40.0;
    PowerConvention power_convention = PowerConvention::Watt;
    std::vector<double> weights;  // empty: all ones
    ObjectiveMode objective_mode = ObjectiveMode::FullLDT;

    // robustness
    double gamma = 0.05;
    double sigma_h2 = 0.05;
    std::vector<double> sigma_h2_list{0.01, 0.05, 0.09, 0.13, 0.17};
    int B = 1000;

    // unfolded network
    int M = 4;
    int N = 4;
    std::vector<int> layers_list{1, 2, 3, 4, 5, 6};
    std::vector<int> pgd_list{4, 8};

    // training
    int train_batches = 8000;
    int batch_size = 64;
    double learning_rate = 1e-3;
    LossMode loss_mode = LossMode::RobustQuantile;
    GradMode grad_mode = GradMode::Analytic;
    bool deep_supervision = true;
    int heldout_every = 50;
    int checkpoint_every = 500;

    // evaluation
    int test_batches = 50;
    EvalMode eval_mode = EvalMode::Shannon;
    std::vector<SolverKind> solvers{SolverKind::DUFP, SolverKind::FP, SolverKind::WMMSE,
                                    SolverKind::RZF};
    int fp_max_iters = 100;
    double rel_tol = 1e-6;
    int baseline_iters = 100;
    double rzf_alpha = 1.0;
    int solve_channels = 16;

    // timing
    std::vector<int> sizes_list{4, 8, 16, 32};
    int reps = 6;
    int timing_channels = 64;

    std::uint64_t seed = 1;
    int threads = 1;

    double p_max() const { return dbm_to_linear(p_max_dbm, power_convention); }
    SystemConfig system(double sigma_h2_value) const;
    SystemConfig system() const { return system(sigma_h2); }
    TrainConfig train() const;
    FpSettings fp(int max_iters) const;
    WmmseSettings wmmse(int max_iters) const;

    /// CI profile: 200 training batches of 16 at learning rate 1e-2, 5 test
    /// batches, B = 200.
    void apply_fast();
    void validate() const;

    /// `key = value` lines covering every setting, in a fixed order.
    std::string to_text() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace rbf
