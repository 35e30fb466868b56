// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rbf/channel.hpp"
#include "rbf/types.hpp"
#include "rbf/unfolding.hpp"

namespace rbf {

enum class LossMode { Standard, RobustQuantile };
enum class GradMode { Analytic, FiniteDifference };

struct QuantilePick {
    double value = 0.0;
    std::size_t index = 0;
};

/// 1-based rank ceil(gamma * count), clamped to [1, count]. Throws when
/// gamma * count < 1.
std::size_t quantile_rank(std::size_t count, double gamma);

/// Empirical gamma-quantile: the element of rank ceil(gamma * B) in ascending
/// order, ties broken by lowest original index.
QuantilePick quantile_select(std::span<const double> values, double gamma);

/// Loss shape shared by the loss and gradient routines.
struct LossSpec {
    LossMode mode = LossMode::RobustQuantile;
    double gamma = 0.05;
    bool deep_supervision = true;  // sum over all layers, else final layer only
};

/// -sum_m R_Q(V_m, g_m, u_m; H) on the nominal channel.
double standard_loss(const UnfoldTrace& trace, const ChannelMatrix& H, const SystemConfig& config,
                     bool deep_supervision = true);

/// -sum_m quantile_gamma_b R_Q(V_m, g_m, u_m; H_b) with aux held fixed.
double robust_loss(const UnfoldTrace& trace, const UncertaintyBatch& batch,
                   const SystemConfig& config, double gamma, bool deep_supervision = true);

/// A mini-batch of nominal channels with their uncertainty samples (one
/// UncertaintyBatch per channel; empty for the standard loss).
struct TrainingBatch {
    std::vector<ChannelMatrix> channels;
    std::vector<UncertaintyBatch> uncertainty;
};

/// Batch loss: per-channel loss averaged over the batch.
double batch_loss(const StepSizeSchedule& schedule, const TrainingBatch& batch,
                  const SystemConfig& config, const LossSpec& spec, int threads = 1);

struct LossGradient {
    double loss = 0.0;
    RMatrix grad;  // d loss / d mu, M x N
};

/// Analytic mode: reverse pass through the unfolded graph (aux updates, PGD
/// steps, projection branches, selected order statistic). FiniteDifference:
/// central differences with step 1e-5 max(1, |mu|).
LossGradient grad_schedule(const StepSizeSchedule& schedule, const TrainingBatch& batch,
                           const SystemConfig& config, const LossSpec& spec, GradMode mode,
                           int threads = 1);

struct AdamState {
    RMatrix m;
    RMatrix v;
    long long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState zeros(int rows, int cols);
};

/// Bias-corrected Adam update of the schedule (minimizes the loss).
void adam_step(StepSizeSchedule& schedule, const RMatrix& grad, AdamState& state,
               double learning_rate);

struct TrainConfig {
    double learning_rate = 1e-3;
    int batches = 8000;
    int batch_size = 64;
    int B = 1000;
    double gamma = 0.05;
    LossMode loss_mode = LossMode::RobustQuantile;
    GradMode grad_mode = GradMode::Analytic;
    bool deep_supervision = true;
    Seed seed{1};
    int heldout_every = 50;
    int checkpoint_every = 500;
    std::optional<std::filesystem::path> checkpoint_dir;
    int threads = 1;

    void validate() const;
};

struct TrainHistory {
    std::vector<double> loss;                   // one per batch
    std::vector<std::optional<double>> heldout;  // robust WSR where evaluated
};

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history);

/// Robust WSR of a schedule on a held-out set; supplied by the caller.
using HeldoutFn = std::function<double(const StepSizeSchedule&)>;

/// Draws the mini-batch used at training step `index`.
TrainingBatch make_training_batch(const TrainConfig& tc, const SystemConfig& config,
                                  std::uint64_t index);

struct TrainResult {
    StepSizeSchedule schedule;
    TrainHistory history;
};

/// Uncertainty-injected training from the all-ones schedule.
TrainResult train(const TrainConfig& tc, const SystemConfig& config, int layers, int steps,
                  const HeldoutFn& heldout = {});

}  // namespace rbf
