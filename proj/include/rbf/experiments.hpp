// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rbf/channel.hpp"
#include "rbf/config_file.hpp"
#include "rbf/training.hpp"
#include "rbf/types.hpp"
#include "rbf/unfolding.hpp"

namespace rbf {

/// Per-sample metric: Shannon WSR on H_b, or R_Q(V, g, u; H_b) with aux fixed.
double sample_metric(const ChannelMatrix& Hb, const BeamformingMatrix& V,
                     const AuxiliaryState& aux, EvalMode mode, const SystemConfig& config);

/// gamma-quantile of the per-sample metric over a prepared batch.
double robust_wsr(const BeamformingMatrix& V, const AuxiliaryState& aux,
                  const UncertaintyBatch& batch, double gamma, EvalMode mode,
                  const SystemConfig& config);

/// Draws B perturbed channels around H from `seed`, then robust_wsr.
double eval_robust_wsr(const BeamformingMatrix& V, const AuxiliaryState& aux,
                       const ChannelMatrix& H, double sigma_h2, int B, double gamma,
                       EvalMode mode, Seed seed, const SystemConfig& config);

struct RobustPair {
    double surrogate = 0.0;
    double shannon = 0.0;

    double get(EvalMode mode) const { return mode == EvalMode::Shannon ? shannon : surrogate; }
};

/// Both modes from one set of draws; aux refreshed at V on the nominal channel.
RobustPair robust_wsr_both(const BeamformingMatrix& V, const UncertaintyBatch& batch,
                           double gamma, const SystemConfig& config);

/// Nominal test channels plus the seed family of their error draws. Error
/// draws are regenerated per sigma_h2 from the same seeds.
struct TestSet {
    std::vector<ChannelMatrix> channels;
    Seed error_seed;

    Seed channel_error_seed(std::size_t i) const;
};

/// test_batches x batch_size channels on the test stream.
TestSet make_test_set(const ExperimentConfig& cfg);

/// Small held-out set (disjoint stream) used for training curves.
TestSet make_heldout_set(const ExperimentConfig& cfg, int count = 16);

struct SolverBudget {
    FpSettings fp;
    WmmseSettings wmmse;
    double rzf_alpha = 1.0;
};

/// Beamformer delivered by one solver. DUFP needs a schedule.
BeamformingMatrix produce_beamformer(SolverKind kind, const ChannelMatrix& H,
                                     const SystemConfig& config, const SolverBudget& budget,
                                     const StepSizeSchedule* schedule = nullptr);

/// Mean over the test set of per-channel robust WSR, both modes.
RobustPair mean_robust_wsr(const std::vector<BeamformingMatrix>& beams, const TestSet& tests,
                           double sigma_h2, const ExperimentConfig& cfg);

/// "FP", "WMMSE", "RZF", "UI-DUFP(4PGD)".
std::string solver_label(SolverKind kind, int pgd_steps = 0);

struct SweepRow {
    std::string solver;
    double x = 0.0;
    double robust_wsr = 0.0;
    EvalMode mode = EvalMode::Shannon;
    std::uint64_t seed = 0;
};

struct TimingRow {
    std::string solver;
    int size = 0;
    int rep = 0;
    double seconds = 0.0;
};

std::string format_sweep_csv(const std::vector<SweepRow>& rows);
std::string format_timing_csv(const std::vector<TimingRow>& rows);
void write_text(const std::filesystem::path& path, const std::string& text);

enum class Sweep { Layers, Error };

std::string sweep_command(Sweep sweep);

/// schedules/dufp_M<M>_N<N>_sh<sigma>.txt under `dir`.
std::filesystem::path schedule_path(const std::filesystem::path& dir, int M, int N,
                                    double sigma_h2);

/// Loads a trained schedule or throws MissingArtifactError naming the
/// training command that produces it.
StepSizeSchedule require_schedule(const std::filesystem::path& dir, int M, int N,
                                  double sigma_h2, Sweep sweep);

struct TrainJob {
    int M = 0;
    int N = 0;
    double sigma_h2 = 0.0;
};

std::vector<TrainJob> training_jobs(const ExperimentConfig& cfg, Sweep sweep);

/// Trains one schedule; held-out curve in cfg.eval_mode.
TrainResult train_schedule(const ExperimentConfig& cfg, int M, int N, double sigma_h2);

/// Trains every schedule a sweep needs, writing schedule and history files.
void train_for_sweep(const ExperimentConfig& cfg, Sweep sweep, const std::filesystem::path& dir,
                     std::ostream* log = nullptr);

/// Layers/iterations 1..6 at cfg.sigma_h2. RZF repeated at every x.
std::vector<SweepRow> run_layer_sweep(const ExperimentConfig& cfg,
                                      const std::filesystem::path& schedule_dir);

/// sigma_h2 sweep; baselines solved once per channel and evaluated at each level.
std::vector<SweepRow> run_error_sweep(const ExperimentConfig& cfg,
                                      const std::filesystem::path& schedule_dir);

/// Single-threaded wall-clock seconds per channel, reps per (solver, size).
/// DUFP runs all-ones schedules: timing does not depend on step values.
std::vector<TimingRow> run_timing_sweep(const ExperimentConfig& cfg);

struct AnchorCheck {
    std::string solver;
    double sigma_h2 = 0.0;
    double expected = 0.0;
    double observed = 0.0;
    double rel_error = 0.0;
};

struct AnchorReport {
    std::vector<AnchorCheck> checks;
    double mean_rel_error = 0.0;
    bool within(double tolerance) const;
};

/// Reference levels: 8.7 for every solver at 0.01; 5.74 (FP, WMMSE) and 6.0
/// (UI-DUFP) at 0.17. Rows for other levels or RZF are ignored.
AnchorReport anchor_report(const std::vector<SweepRow>& rows, EvalMode mode);
std::string format_anchor_report(const AnchorReport& report);

/// version, command, seed, then the full config echo.
void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    const ExperimentConfig& cfg, const std::string& extra = {});

}  // namespace rbf
