// SPDX-License-Identifier: Apache-2.0
#include "rbf/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "rbf/baselines.hpp"
#include "rbf/fp_solver.hpp"
#include "rbf/model.hpp"
#include "rbf/parallel.hpp"

#ifndef RBF_VERSION
#define RBF_VERSION "unknown"
#endif
#ifndef RBF_GIT_REV
#define RBF_GIT_REV "unknown"
#endif

namespace rbf {

namespace {

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

// Compact, locale-independent, deterministic.
std::string num(double v) { return fmt("%.12g", v); }
std::string key(double v) { return fmt("%.6g", v); }

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;  // fixed order: identical across thread counts
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

void push_pair(std::vector<SweepRow>& rows, const std::string& solver, double x,
               const RobustPair& pair, std::uint64_t seed) {
    rows.push_back({solver, x, pair.shannon, EvalMode::Shannon, seed});
    rows.push_back({solver, x, pair.surrogate, EvalMode::Surrogate, seed});
}

std::vector<BeamformingMatrix> solve_all(const std::vector<ChannelMatrix>& channels,
                                         SolverKind kind, const SystemConfig& config,
                                         const SolverBudget& budget,
                                         const StepSizeSchedule* schedule, int threads) {
    std::vector<BeamformingMatrix> out(channels.size());
    parallel_for(channels.size(), threads, [&](std::size_t i) {
        out[i] = produce_beamformer(kind, channels[i], config, budget, schedule);
    });
    return out;
}

SolverBudget budget_for(const ExperimentConfig& cfg, int iters) {
    SolverBudget b;
    b.fp = cfg.fp(iters);
    b.wmmse = cfg.wmmse(iters);
    b.rzf_alpha = cfg.rzf_alpha;
    return b;
}

std::string file_stem(int M, int N, double sigma_h2) {
    return "dufp_M" + std::to_string(M) + "_N" + std::to_string(N) + "_sh" + key(sigma_h2);
}

}  // namespace

double sample_metric(const ChannelMatrix& Hb, const BeamformingMatrix& V,
                     const AuxiliaryState& aux, EvalMode mode, const SystemConfig& config) {
    if (mode == EvalMode::Shannon) return wsr(Hb, V, config);
    return qt_objective(Hb, V, aux, config);
}

double robust_wsr(const BeamformingMatrix& V, const AuxiliaryState& aux,
                  const UncertaintyBatch& batch, double gamma, EvalMode mode,
                  const SystemConfig& config) {
    std::vector<double> values;
    values.reserve(batch.samples.size());
    for (const auto& Hb : batch.samples) values.push_back(sample_metric(Hb, V, aux, mode, config));
    return quantile_select(values, gamma).value;
}

double eval_robust_wsr(const BeamformingMatrix& V, const AuxiliaryState& aux,
                       const ChannelMatrix& H, double sigma_h2, int B, double gamma,
                       EvalMode mode, Seed seed, const SystemConfig& config) {
    if (B < 1 || gamma * B < 1.0 - 1e-12) throw ConfigError("B * gamma must be >= 1");
    return robust_wsr(V, aux, inject_uncertainty(H, sigma_h2, B, seed), gamma, mode, config);
}

RobustPair robust_wsr_both(const BeamformingMatrix& V, const UncertaintyBatch& batch,
                           double gamma, const SystemConfig& config) {
    const AuxiliaryState aux = refresh_aux(batch.nominal, V, config);
    std::vector<double> shannon;
    std::vector<double> surrogate;
    shannon.reserve(batch.samples.size());
    surrogate.reserve(batch.samples.size());
    for (const auto& Hb : batch.samples) {
        const LinkPowers links = link_powers(Hb, V, config.sigma2);
        double rate = 0.0;
        for (Eigen::Index k = 0; k < links.signal.size(); ++k)
            rate += config.weights[static_cast<std::size_t>(k)] *
                    std::log2(1.0 + links.signal(k) / links.interference(k));
        shannon.push_back(rate);
        surrogate.push_back(qt_objective(links, aux, config));
    }
    return {quantile_select(surrogate, gamma).value, quantile_select(shannon, gamma).value};
}

Seed TestSet::channel_error_seed(std::size_t i) const {
    return derive_seed(error_seed, Stream::Adhoc, i);
}

TestSet make_test_set(const ExperimentConfig& cfg) {
    TestSet t;
    t.channels = sample_channels(derive_seed(Seed{cfg.seed}, Stream::TestChannels), cfg.L, cfg.K,
                                 cfg.test_batches * cfg.batch_size);
    t.error_seed = derive_seed(Seed{cfg.seed}, Stream::TestErrors);
    return t;
}

TestSet make_heldout_set(const ExperimentConfig& cfg, int count) {
    TestSet t;
    t.channels = sample_channels(derive_seed(Seed{cfg.seed}, Stream::Adhoc, 1), cfg.L, cfg.K,
                                 count);
    t.error_seed = derive_seed(Seed{cfg.seed}, Stream::Adhoc, 2);
    return t;
}

BeamformingMatrix produce_beamformer(SolverKind kind, const ChannelMatrix& H,
                                     const SystemConfig& config, const SolverBudget& budget,
                                     const StepSizeSchedule* schedule) {
    switch (kind) {
        case SolverKind::FP: return run_fp(H, config, budget.fp).V;
        case SolverKind::WMMSE: return run_wmmse(H, config, budget.wmmse).V;
        case SolverKind::RZF: return rzf_beamformer(H, budget.rzf_alpha, config);
        case SolverKind::DUFP:
            if (!schedule) throw ConfigError("UI-DUFP needs a step-size schedule");
            return forward(H, *schedule, config).V;
    }
    throw ConfigError("unknown solver");
}

RobustPair mean_robust_wsr(const std::vector<BeamformingMatrix>& beams, const TestSet& tests,
                           double sigma_h2, const ExperimentConfig& cfg) {
    if (beams.size() != tests.channels.size())
        throw ConfigError("one beamformer per test channel expected");
    const SystemConfig config = cfg.system(sigma_h2);
    std::vector<double> shannon(beams.size());
    std::vector<double> surrogate(beams.size());
    parallel_for(beams.size(), cfg.threads, [&](std::size_t i) {
        const auto batch =
            inject_uncertainty(tests.channels[i], sigma_h2, cfg.B, tests.channel_error_seed(i));
        const RobustPair p = robust_wsr_both(beams[i], batch, cfg.gamma, config);
        shannon[i] = p.shannon;
        surrogate[i] = p.surrogate;
    });
    return {mean_of(surrogate), mean_of(shannon)};
}

std::string solver_label(SolverKind kind, int pgd_steps) {
    switch (kind) {
        case SolverKind::FP: return "FP";
        case SolverKind::WMMSE: return "WMMSE";
        case SolverKind::RZF: return "RZF";
        case SolverKind::DUFP: return "UI-DUFP(" + std::to_string(pgd_steps) + "PGD)";
    }
    return "?";
}

std::string format_sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "solver,x,robust_wsr,eval_mode,seed\n";
    for (const auto& r : rows)
        out += r.solver + "," + num(r.x) + "," + num(r.robust_wsr) + "," + to_string(r.mode) +
               "," + std::to_string(r.seed) + "\n";
    return out;
}

std::string format_timing_csv(const std::vector<TimingRow>& rows) {
    std::string out = "solver,size,rep,seconds\n";
    for (const auto& r : rows)
        out += r.solver + "," + std::to_string(r.size) + "," + std::to_string(r.rep) + "," +
               fmt("%.9e", r.seconds) + "\n";
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
    os << text;
    if (!os) throw ConfigError("write failed: " + path.string());
}

std::string sweep_command(Sweep sweep) {
    return sweep == Sweep::Layers ? "sweep-layers" : "sweep-error";
}

std::filesystem::path schedule_path(const std::filesystem::path& dir, int M, int N,
                                    double sigma_h2) {
    return dir / "schedules" / (file_stem(M, N, sigma_h2) + ".txt");
}

StepSizeSchedule require_schedule(const std::filesystem::path& dir, int M, int N,
                                  double sigma_h2, Sweep sweep) {
    const auto path = schedule_path(dir, M, N, sigma_h2);
    if (!std::filesystem::exists(path))
        throw MissingArtifactError("missing trained schedule " + path.string() +
                                   "; run `rbf train --config <cfg> --for " +
                                   sweep_command(sweep) + " --out " + dir.string() + "` first");
    StepSizeSchedule s = load_schedule(path);
    if (s.layers() != M || s.steps() != N)
        throw MissingArtifactError("schedule " + path.string() + " has the wrong shape");
    return s;
}

std::vector<TrainJob> training_jobs(const ExperimentConfig& cfg, Sweep sweep) {
    std::vector<TrainJob> jobs;
    bool dufp = false;
    for (auto s : cfg.solvers) dufp = dufp || s == SolverKind::DUFP;
    if (!dufp) return jobs;
    for (int N : cfg.pgd_list) {
        if (sweep == Sweep::Layers)
            for (int M : cfg.layers_list) jobs.push_back({M, N, cfg.sigma_h2});
        else
            for (double s : cfg.sigma_h2_list) jobs.push_back({cfg.M, N, s});
    }
    return jobs;
}

TrainResult train_schedule(const ExperimentConfig& cfg, int M, int N, double sigma_h2) {
    const SystemConfig config = cfg.system(sigma_h2);
    TrainConfig tc = cfg.train();
    const TestSet heldout = make_heldout_set(cfg);
    const HeldoutFn fn = [&](const StepSizeSchedule& s) {
        std::vector<double> values(heldout.channels.size());
        for (std::size_t i = 0; i < heldout.channels.size(); ++i) {
            const auto& H = heldout.channels[i];
            const BeamformingMatrix V = forward(H, s, config).V;
            const auto batch =
                inject_uncertainty(H, sigma_h2, cfg.B, heldout.channel_error_seed(i));
            values[i] = robust_wsr_both(V, batch, cfg.gamma, config).get(cfg.eval_mode);
        }
        return mean_of(values);
    };
    return train(tc, config, M, N, fn);
}

void train_for_sweep(const ExperimentConfig& cfg, Sweep sweep, const std::filesystem::path& dir,
                     std::ostream* log) {
    for (const auto& job : training_jobs(cfg, sweep)) {
        const std::string stem = file_stem(job.M, job.N, job.sigma_h2);
        const auto t0 = std::chrono::steady_clock::now();
        TrainResult r = train_schedule(cfg, job.M, job.N, job.sigma_h2);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        save_schedule(schedule_path(dir, job.M, job.N, job.sigma_h2), r.schedule);
        write_history_csv(dir / "schedules" / (stem + "_history.csv"), r.history);
        if (log)
            *log << "trained " << stem << " in " << fmt("%.1f", secs) << " s, final loss "
                 << num(r.history.loss.back()) << '\n';
    }
}

std::vector<SweepRow> run_layer_sweep(const ExperimentConfig& cfg,
                                      const std::filesystem::path& schedule_dir) {
    cfg.validate();
    std::vector<std::vector<StepSizeSchedule>> schedules(cfg.pgd_list.size());
    if (!training_jobs(cfg, Sweep::Layers).empty())
        for (std::size_t n = 0; n < cfg.pgd_list.size(); ++n)
            for (int M : cfg.layers_list)
                schedules[n].push_back(require_schedule(schedule_dir, M, cfg.pgd_list[n],
                                                        cfg.sigma_h2, Sweep::Layers));

    const SystemConfig config = cfg.system();
    const TestSet tests = make_test_set(cfg);
    std::vector<SweepRow> rows;
    for (SolverKind kind : cfg.solvers) {
        if (kind == SolverKind::DUFP) {
            for (std::size_t n = 0; n < cfg.pgd_list.size(); ++n)
                for (std::size_t m = 0; m < cfg.layers_list.size(); ++m) {
                    const auto beams = solve_all(tests.channels, kind, config, budget_for(cfg, 1),
                                                 &schedules[n][m], cfg.threads);
                    push_pair(rows, solver_label(kind, cfg.pgd_list[n]), cfg.layers_list[m],
                              mean_robust_wsr(beams, tests, cfg.sigma_h2, cfg), cfg.seed);
                }
        } else if (kind == SolverKind::RZF) {
            const auto beams = solve_all(tests.channels, kind, config,
                                         budget_for(cfg, cfg.baseline_iters), nullptr, cfg.threads);
            const RobustPair pair = mean_robust_wsr(beams, tests, cfg.sigma_h2, cfg);
            for (int x : cfg.layers_list) push_pair(rows, solver_label(kind), x, pair, cfg.seed);
        } else {
            for (int x : cfg.layers_list) {
                const auto beams =
                    solve_all(tests.channels, kind, config, budget_for(cfg, x), nullptr, cfg.threads);
                push_pair(rows, solver_label(kind), x,
                          mean_robust_wsr(beams, tests, cfg.sigma_h2, cfg), cfg.seed);
            }
        }
    }
    return rows;
}

std::vector<SweepRow> run_error_sweep(const ExperimentConfig& cfg,
                                      const std::filesystem::path& schedule_dir) {
    cfg.validate();
    std::vector<std::vector<StepSizeSchedule>> schedules(cfg.pgd_list.size());
    if (!training_jobs(cfg, Sweep::Error).empty())
        for (std::size_t n = 0; n < cfg.pgd_list.size(); ++n)
            for (double s : cfg.sigma_h2_list)
                schedules[n].push_back(
                    require_schedule(schedule_dir, cfg.M, cfg.pgd_list[n], s, Sweep::Error));

    const TestSet tests = make_test_set(cfg);
    std::vector<SweepRow> rows;
    for (SolverKind kind : cfg.solvers) {
        if (kind == SolverKind::DUFP) {
            for (std::size_t n = 0; n < cfg.pgd_list.size(); ++n)
                for (std::size_t j = 0; j < cfg.sigma_h2_list.size(); ++j) {
                    const double s = cfg.sigma_h2_list[j];
                    const auto beams = solve_all(tests.channels, kind, cfg.system(s),
                                                 budget_for(cfg, 1), &schedules[n][j], cfg.threads);
                    push_pair(rows, solver_label(kind, cfg.pgd_list[n]), s,
                              mean_robust_wsr(beams, tests, s, cfg), cfg.seed);
                }
        } else {
            const auto beams = solve_all(tests.channels, kind, cfg.system(),
                                         budget_for(cfg, cfg.baseline_iters), nullptr, cfg.threads);
            for (double s : cfg.sigma_h2_list)
                push_pair(rows, solver_label(kind), s, mean_robust_wsr(beams, tests, s, cfg),
                          cfg.seed);
        }
    }
    return rows;
}

std::vector<TimingRow> run_timing_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    struct Entry {
        SolverKind kind;
        int steps;
    };
    std::vector<Entry> entries;
    for (SolverKind kind : cfg.solvers) {
        if (kind == SolverKind::DUFP)
            for (int N : cfg.pgd_list) entries.push_back({kind, N});
        else
            entries.push_back({kind, 0});
    }
    const SolverBudget budget = budget_for(cfg, cfg.fp_max_iters);
    std::vector<TimingRow> rows;
    volatile double sink = 0.0;
    for (int size : cfg.sizes_list) {
        const SystemConfig config = SystemConfig::make(size, size, cfg.sigma2, cfg.p_max());
        const auto channels =
            sample_channels(derive_seed(Seed{cfg.seed}, Stream::Adhoc, 100 + size), size, size,
                            cfg.timing_channels);
        std::vector<std::vector<TimingRow>> per_entry(entries.size());
        // Interleave solvers within each repetition so slow drifts hit all alike.
        for (int rep = 0; rep < cfg.reps; ++rep) {
            for (std::size_t e = 0; e < entries.size(); ++e) {
                const StepSizeSchedule schedule(cfg.M, entries[e].steps, 1.0);
                const auto t0 = std::chrono::steady_clock::now();
                for (const auto& H : channels) {
                    const BeamformingMatrix V =
                        produce_beamformer(entries[e].kind, H, config, budget, &schedule);
                    sink = sink + V(0, 0).real();
                }
                const double secs =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                per_entry[e].push_back({solver_label(entries[e].kind, entries[e].steps), size,
                                        rep, secs / static_cast<double>(channels.size())});
            }
        }
        for (auto& v : per_entry) rows.insert(rows.end(), v.begin(), v.end());
    }
    return rows;
}

bool AnchorReport::within(double tolerance) const {
    for (const auto& c : checks)
        if (c.rel_error > tolerance) return false;
    return !checks.empty();
}

AnchorReport anchor_report(const std::vector<SweepRow>& rows, EvalMode mode) {
    AnchorReport report;
    double total = 0.0;
    for (const auto& r : rows) {
        if (r.mode != mode || r.solver == "RZF") continue;
        const bool dufp = r.solver.rfind("UI-DUFP", 0) == 0;
        double expected = 0.0;
        if (std::abs(r.x - 0.01) < 1e-9) expected = 8.7;
        else if (std::abs(r.x - 0.17) < 1e-9) expected = dufp ? 6.0 : 5.74;
        else continue;
        const double rel = std::abs(r.robust_wsr - expected) / expected;
        report.checks.push_back({r.solver, r.x, expected, r.robust_wsr, rel});
        total += rel;
    }
    if (!report.checks.empty()) report.mean_rel_error = total / report.checks.size();
    return report;
}

std::string format_anchor_report(const AnchorReport& report) {
    std::ostringstream os;
    for (const auto& c : report.checks)
        os << c.solver << " sigma_h2=" << key(c.sigma_h2) << " expected=" << num(c.expected)
           << " observed=" << num(c.observed) << " rel_error=" << fmt("%.4f", c.rel_error)
           << '\n';
    os << "mean_rel_error=" << fmt("%.4f", report.mean_rel_error) << '\n';
    return os.str();
}

void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    const ExperimentConfig& cfg, const std::string& extra) {
    std::ostringstream os;
    os << "version = " << RBF_VERSION << '\n'
       << "git = " << RBF_GIT_REV << '\n'
       << "command = " << command << '\n'
       << "seed = " << cfg.seed << '\n'
       << "p_max_linear = " << num(cfg.p_max()) << '\n'
       << "[config]\n"
       << cfg.to_text();
    if (!extra.empty()) os << "[notes]\n" << extra;
    write_text(dir / "manifest.txt", os.str());
}

}  // namespace rbf
