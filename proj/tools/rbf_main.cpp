// SPDX-License-Identifier: Apache-2.0
// rbf: training, evaluation, baseline solves and experiment sweeps.
#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "rbf/channel.hpp"
#include "rbf/config_file.hpp"
#include "rbf/experiments.hpp"
#include "rbf/model.hpp"
#include "rbf/unfolding.hpp"

namespace fs = std::filesystem;
using namespace rbf;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool fast = false;
    std::optional<int> threads;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "experiment config file")->required();
    cmd->add_option("--out", c.out, "output directory (default: $RB_OUT_DIR, else ./rbf_out)");
    cmd->add_option("--seed", c.seed, "overrides the config seed");
    cmd->add_flag("--fast", c.fast, "CI profile: 200x16 training, 5x16 test, B=200");
    cmd->add_option("--threads", c.threads, "worker threads (default: all cores)")
        ->check(CLI::PositiveNumber);
}

fs::path out_dir(const Common& c) {
    if (!c.out.empty()) return c.out;
    if (const char* env = std::getenv("RB_OUT_DIR"); env && *env) return env;
    return "rbf_out";
}

ExperimentConfig load(const Common& c) {
    ExperimentConfig cfg = load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (c.fast) cfg.apply_fast();
    if (c.threads) cfg.threads = *c.threads;
    else cfg.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    cfg.validate();
    return cfg;
}

std::string command_line(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) s += (i ? " " : "") + std::string(argv[i]);
    return s;
}

std::string row_summary(const std::vector<SweepRow>& rows, EvalMode mode) {
    std::ostringstream os;
    for (const auto& r : rows)
        if (r.mode == mode) os << "  " << r.solver << " x=" << r.x << " " << r.robust_wsr << '\n';
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust multi-user beamforming: FP, WMMSE, RZF and unfolded UI-DUFP"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", std::string(RBF_VERSION));

    Common common;

    auto* train_cmd = app.add_subcommand("train", "train UI-DUFP step sizes");
    add_common(train_cmd, common);
    std::string train_for;
    std::optional<int> train_layers;
    std::optional<int> train_pgd;
    std::optional<double> train_sigma;
    train_cmd->add_option("--for", train_for, "train every schedule a sweep needs")
        ->check(CLI::IsMember({"sweep-layers", "sweep-error"}));
    train_cmd->add_option("--layers", train_layers, "M (default: config M)")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--pgd", train_pgd, "N (default: config N)")
        ->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--sigma-h2", train_sigma, "error variance (default: config sigma_h2)")
        ->check(CLI::NonNegativeNumber);

    auto* eval_cmd = app.add_subcommand("eval", "robust WSR of all solvers at sigma_h2");
    add_common(eval_cmd, common);
    std::string eval_schedules;
    eval_cmd->add_option("--schedules", eval_schedules, "directory holding schedules/ (default: --out)");

    auto* layers_cmd = app.add_subcommand("sweep-layers", "robust WSR vs layers / iterations");
    add_common(layers_cmd, common);
    std::string layers_schedules;
    layers_cmd->add_option("--schedules", layers_schedules, "directory holding schedules/");

    auto* error_cmd = app.add_subcommand("sweep-error", "robust WSR vs channel error variance");
    add_common(error_cmd, common);
    std::string error_schedules;
    error_cmd->add_option("--schedules", error_schedules, "directory holding schedules/");

    auto* timing_cmd = app.add_subcommand("sweep-timing", "per-channel inference time vs L = K");
    add_common(timing_cmd, common);

    auto* solve_cmd = app.add_subcommand("solve", "beamformers for a set of channels");
    add_common(solve_cmd, common);
    std::string solve_solver = "fp";
    std::string solve_channels;
    std::string solve_schedule;
    solve_cmd->add_option("--solver", solve_solver, "fp, wmmse, rzf or dufp")
        ->check(CLI::IsMember({"fp", "wmmse", "rzf", "dufp"}));
    solve_cmd->add_option("--channels", solve_channels, "RBCH channel file (default: sampled)");
    solve_cmd->add_option("--schedule", solve_schedule, "schedule file for dufp (default: all ones)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e, std::cerr, std::cerr);
        return 1;
    }

    try {
        const ExperimentConfig cfg = load(common);
        const fs::path out = out_dir(common);
        fs::create_directories(out);
        const std::string cmdline = command_line(argc, argv);
        const auto pick = [&](const std::string& s) { return s.empty() ? out : fs::path(s); };

        if (train_cmd->parsed()) {
            if (!train_for.empty()) {
                const Sweep sweep = train_for == "sweep-layers" ? Sweep::Layers : Sweep::Error;
                train_for_sweep(cfg, sweep, out, &std::cout);
            } else {
                const int M = train_layers.value_or(cfg.M);
                const int N = train_pgd.value_or(cfg.N);
                const double s = train_sigma.value_or(cfg.sigma_h2);
                ExperimentConfig one = cfg;
                one.solvers = {SolverKind::DUFP};
                const TrainResult r = train_schedule(one, M, N, s);
                const fs::path path = schedule_path(out, M, N, s);
                save_schedule(path, r.schedule);
                fs::path history = path;
                history.replace_filename(path.stem().string() + "_history.csv");
                write_history_csv(history, r.history);
                std::cout << "wrote " << path.string() << '\n';
            }
        } else if (eval_cmd->parsed()) {
            ExperimentConfig one = cfg;
            one.sigma_h2_list = {cfg.sigma_h2};
            one.pgd_list = {cfg.N};
            const auto rows = run_error_sweep(one, pick(eval_schedules));
            write_text(out / "eval.csv", format_sweep_csv(rows));
            std::cout << row_summary(rows, cfg.eval_mode);
        } else if (layers_cmd->parsed()) {
            const auto rows = run_layer_sweep(cfg, pick(layers_schedules));
            write_text(out / "sweep_layers.csv", format_sweep_csv(rows));
            std::cout << row_summary(rows, cfg.eval_mode);
        } else if (error_cmd->parsed()) {
            const auto rows = run_error_sweep(cfg, pick(error_schedules));
            write_text(out / "sweep_error.csv", format_sweep_csv(rows));
            std::string notes;
            for (EvalMode mode : {EvalMode::Shannon, EvalMode::Surrogate}) {
                const AnchorReport rep = anchor_report(rows, mode);
                notes += "anchors " + to_string(mode) + " " + to_string(cfg.power_convention) +
                         "\n" + format_anchor_report(rep);
            }
            write_text(out / "anchors.txt", notes);
            write_manifest(out, cmdline, cfg, notes);
            std::cout << row_summary(rows, cfg.eval_mode);
            return 0;
        } else if (timing_cmd->parsed()) {
            ExperimentConfig single = cfg;
            single.threads = 1;
            const auto rows = run_timing_sweep(single);
            write_text(out / "sweep_timing.csv", format_timing_csv(rows));
            write_manifest(out, cmdline, single);
            return 0;
        } else if (solve_cmd->parsed()) {
            const SystemConfig config = cfg.system();
            const std::vector<ChannelMatrix> channels =
                solve_channels.empty()
                    ? sample_channels(derive_seed(Seed{cfg.seed}, Stream::TestChannels), cfg.L,
                                      cfg.K, cfg.solve_channels)
                    : load_channels(solve_channels);
            const SolverKind kind = parse_solver(solve_solver);
            const StepSizeSchedule schedule = solve_schedule.empty()
                                                  ? StepSizeSchedule(cfg.M, cfg.N, 1.0)
                                                  : load_schedule(solve_schedule);
            SolverBudget budget;
            budget.fp = cfg.fp(cfg.fp_max_iters);
            budget.wmmse = cfg.wmmse(cfg.baseline_iters);
            budget.rzf_alpha = cfg.rzf_alpha;
            std::string beams = "channel,user,antenna,re,im\n";
            std::string rates = "channel,wsr\n";
            char buf[160];
            for (std::size_t c = 0; c < channels.size(); ++c) {
                const auto& H = channels[c];
                if (H.rows() != cfg.L || H.cols() != cfg.K)
                    throw ConfigError("channel file dimensions differ from config L, K");
                const BeamformingMatrix V = produce_beamformer(kind, H, config, budget, &schedule);
                for (int k = 0; k < V.cols(); ++k)
                    for (int l = 0; l < V.rows(); ++l) {
                        std::snprintf(buf, sizeof buf, "%zu,%d,%d,%.17g,%.17g\n", c, k, l,
                                      V(l, k).real(), V(l, k).imag());
                        beams += buf;
                    }
                std::snprintf(buf, sizeof buf, "%zu,%.17g\n", c, wsr(H, V, config));
                rates += buf;
            }
            write_text(out / "beamformers.csv", beams);
            write_text(out / "wsr.csv", rates);
        }
        write_manifest(out, cmdline, cfg);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const MissingArtifactError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
