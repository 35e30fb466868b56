// SPDX-License-Identifier: Apache-2.0
#include "rbf/config_file.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

namespace rbf {

std::string to_string(EvalMode mode) {
    return mode == EvalMode::Shannon ? "shannon" : "surrogate";
}

std::string to_string(PowerConvention convention) {
    return convention == PowerConvention::Watt ? "watt" : "milliwatt";
}

std::string to_string(SolverKind kind) {
    switch (kind) {
        case SolverKind::FP: return "fp";
        case SolverKind::WMMSE: return "wmmse";
        case SolverKind::RZF: return "rzf";
        case SolverKind::DUFP: return "dufp";
    }
    return "?";
}

EvalMode parse_eval_mode(const std::string& text) {
    if (text == "shannon") return EvalMode::Shannon;
    if (text == "surrogate") return EvalMode::Surrogate;
    throw ConfigError("eval_mode must be shannon or surrogate, got '" + text + "'");
}

PowerConvention parse_power_convention(const std::string& text) {
    if (text == "watt") return PowerConvention::Watt;
    if (text == "milliwatt") return PowerConvention::Milliwatt;
    throw ConfigError("power_convention must be watt or milliwatt, got '" + text + "'");
}

SolverKind parse_solver(const std::string& text) {
    if (text == "fp") return SolverKind::FP;
    if (text == "wmmse") return SolverKind::WMMSE;
    if (text == "rzf") return SolverKind::RZF;
    if (text == "dufp") return SolverKind::DUFP;
    throw ConfigError("unknown solver '" + text + "' (expected fp, wmmse, rzf or dufp)");
}

double dbm_to_linear(double dbm, PowerConvention convention) {
    const double offset = convention == PowerConvention::Watt ? 30.0 : 0.0;
    return std::pow(10.0, (dbm - offset) / 10.0);
}

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(text);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& key, const std::string& text) {
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end)
        throw ConfigError("key '" + key + "': expected a number, got '" + text + "'");
    return value;
}

long long parse_integer(const std::string& key, const std::string& text) {
    long long value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end)
        throw ConfigError("key '" + key + "': expected an integer, got '" + text + "'");
    return value;
}

int parse_int(const std::string& key, const std::string& text) {
    const auto v = parse_integer(key, text);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw ConfigError("key '" + key + "': value out of range");
    return static_cast<int>(v);
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError("key '" + key + "': expected true or false, got '" + text + "'");
}

std::vector<double> parse_doubles(const std::string& key, const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(parse_double(key, item));
    return out;
}

std::vector<int> parse_ints(const std::string& key, const std::string& text) {
    std::vector<int> out;
    for (const auto& item : split_list(text)) out.push_back(parse_int(key, item));
    return out;
}

template <typename T>
std::string join(const std::vector<T>& values) {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < values.size(); ++i) os << (i ? ", " : "") << values[i];
    return os.str();
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"L", [](auto& c, auto& k, auto& v) { c.L = parse_int(k, v); }},
        {"K", [](auto& c, auto& k, auto& v) { c.K = parse_int(k, v); }},
        {"sigma2", [](auto& c, auto& k, auto& v) { c.sigma2 = parse_double(k, v); }},
        {"p_max_dbm", [](auto& c, auto& k, auto& v) { c.p_max_dbm = parse_double(k, v); }},
        {"power_convention",
         [](auto& c, auto&, auto& v) { c.power_convention = parse_power_convention(v); }},
        {"weights", [](auto& c, auto& k, auto& v) { c.weights = parse_doubles(k, v); }},
        {"objective_mode",
         [](auto& c, auto&, auto& v) {
             if (v == "full_ldt") c.objective_mode = ObjectiveMode::FullLDT;
             else if (v == "quadratic_only") c.objective_mode = ObjectiveMode::QuadraticOnly;
             else throw ConfigError("objective_mode must be full_ldt or quadratic_only");
         }},
        {"gamma", [](auto& c, auto& k, auto& v) { c.gamma = parse_double(k, v); }},
        {"sigma_h2", [](auto& c, auto& k, auto& v) { c.sigma_h2 = parse_double(k, v); }},
        {"sigma_h2_list",
         [](auto& c, auto& k, auto& v) { c.sigma_h2_list = parse_doubles(k, v); }},
        {"B", [](auto& c, auto& k, auto& v) { c.B = parse_int(k, v); }},
        {"M", [](auto& c, auto& k, auto& v) { c.M = parse_int(k, v); }},
        {"N", [](auto& c, auto& k, auto& v) { c.N = parse_int(k, v); }},
        {"layers_list", [](auto& c, auto& k, auto& v) { c.layers_list = parse_ints(k, v); }},
        {"pgd_list", [](auto& c, auto& k, auto& v) { c.pgd_list = parse_ints(k, v); }},
        {"train_batches", [](auto& c, auto& k, auto& v) { c.train_batches = parse_int(k, v); }},
        {"batch_size", [](auto& c, auto& k, auto& v) { c.batch_size = parse_int(k, v); }},
        {"learning_rate",
         [](auto& c, auto& k, auto& v) { c.learning_rate = parse_double(k, v); }},
        {"loss_mode",
         [](auto& c, auto&, auto& v) {
             if (v == "robust") c.loss_mode = LossMode::RobustQuantile;
             else if (v == "standard") c.loss_mode = LossMode::Standard;
             else throw ConfigError("loss_mode must be robust or standard");
         }},
        {"grad_mode",
         [](auto& c, auto&, auto& v) {
             if (v == "analytic") c.grad_mode = GradMode::Analytic;
             else if (v == "fd") c.grad_mode = GradMode::FiniteDifference;
             else throw ConfigError("grad_mode must be analytic or fd");
         }},
        {"deep_supervision",
         [](auto& c, auto& k, auto& v) { c.deep_supervision = parse_bool(k, v); }},
        {"heldout_every", [](auto& c, auto& k, auto& v) { c.heldout_every = parse_int(k, v); }},
        {"checkpoint_every",
         [](auto& c, auto& k, auto& v) { c.checkpoint_every = parse_int(k, v); }},
        {"test_batches", [](auto& c, auto& k, auto& v) { c.test_batches = parse_int(k, v); }},
        {"eval_mode", [](auto& c, auto&, auto& v) { c.eval_mode = parse_eval_mode(v); }},
        {"solvers",
         [](auto& c, auto&, auto& v) {
             c.solvers.clear();
             for (const auto& item : split_list(v)) c.solvers.push_back(parse_solver(item));
         }},
        {"fp_max_iters", [](auto& c, auto& k, auto& v) { c.fp_max_iters = parse_int(k, v); }},
        {"rel_tol", [](auto& c, auto& k, auto& v) { c.rel_tol = parse_double(k, v); }},
        {"baseline_iters",
         [](auto& c, auto& k, auto& v) { c.baseline_iters = parse_int(k, v); }},
        {"rzf_alpha", [](auto& c, auto& k, auto& v) { c.rzf_alpha = parse_double(k, v); }},
        {"solve_channels",
         [](auto& c, auto& k, auto& v) { c.solve_channels = parse_int(k, v); }},
        {"sizes_list", [](auto& c, auto& k, auto& v) { c.sizes_list = parse_ints(k, v); }},
        {"reps", [](auto& c, auto& k, auto& v) { c.reps = parse_int(k, v); }},
        {"timing_channels",
         [](auto& c, auto& k, auto& v) { c.timing_channels = parse_int(k, v); }},
        {"seed",
         [](auto& c, auto& k, auto& v) {
             const auto s = parse_integer(k, v);
             if (s < 0) throw ConfigError("seed must be non-negative");
             c.seed = static_cast<std::uint64_t>(s);
         }},
        {"threads", [](auto& c, auto& k, auto& v) { c.threads = parse_int(k, v); }},
    };
    return table;
}

}  // namespace

SystemConfig ExperimentConfig::system(double sigma_h2_value) const {
    SystemConfig s = SystemConfig::make(L, K, sigma2, p_max());
    if (!weights.empty()) s.weights = weights;
    s.gamma = gamma;
    s.sigma_h2 = sigma_h2_value;
    s.objective_mode = objective_mode;
    return s;
}

TrainConfig ExperimentConfig::train() const {
    TrainConfig t;
    t.learning_rate = learning_rate;
    t.batches = train_batches;
    t.batch_size = batch_size;
    t.B = B;
    t.gamma = gamma;
    t.loss_mode = loss_mode;
    t.grad_mode = grad_mode;
    t.deep_supervision = deep_supervision;
    t.seed = Seed{seed};
    t.heldout_every = heldout_every;
    t.checkpoint_every = checkpoint_every;
    t.threads = threads;
    return t;
}

FpSettings ExperimentConfig::fp(int max_iters) const {
    FpSettings s;
    s.max_iters = max_iters;
    s.rel_tol = rel_tol;
    return s;
}

WmmseSettings ExperimentConfig::wmmse(int max_iters) const {
    WmmseSettings s;
    s.max_iters = max_iters;
    s.rel_tol = rel_tol;
    return s;
}

void ExperimentConfig::apply_fast() {
    train_batches = 200;
    batch_size = 16;
    test_batches = 5;
    B = 200;
    // 40x fewer steps than the full run; 1e-3 would leave mu within 0.2 of its start.
    learning_rate = 1e-2;
}

void ExperimentConfig::validate() const {
    system().validate();
    for (double s : sigma_h2_list)
        if (!(s >= 0.0)) throw ConfigError("sigma_h2_list entries must be >= 0");
    if (sigma_h2_list.empty() || layers_list.empty() || pgd_list.empty() || sizes_list.empty() ||
        solvers.empty())
        throw ConfigError("sweep lists must be non-empty");
    for (int m : layers_list)
        if (m < 1) throw ConfigError("layers_list entries must be >= 1");
    for (int n : pgd_list)
        if (n < 0) throw ConfigError("pgd_list entries must be >= 0");
    for (int s : sizes_list)
        if (s < 1) throw ConfigError("sizes_list entries must be >= 1");
    if (M < 1 || N < 0) throw ConfigError("M must be >= 1 and N >= 0");
    if (test_batches < 1 || reps < 1 || timing_channels < 1 || solve_channels < 1)
        throw ConfigError("test_batches, reps, timing_channels, solve_channels must be >= 1");
    if (fp_max_iters < 1 || baseline_iters < 1 || !(rel_tol > 0.0))
        throw ConfigError("iteration budgets and rel_tol must be positive");
    if (!(rzf_alpha >= 0.0)) throw ConfigError("rzf_alpha must be >= 0");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (gamma * B < 1.0 - 1e-12) throw ConfigError("B * gamma must be >= 1");
    train().validate();
}

std::string ExperimentConfig::to_text() const {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    const auto bool_text = [](bool b) { return b ? "true" : "false"; };
    std::vector<std::string> solver_names;
    for (auto s : solvers) solver_names.push_back(to_string(s));
    os << "L = " << L << '\n'
       << "K = " << K << '\n'
       << "sigma2 = " << sigma2 << '\n'
       << "p_max_dbm = " << p_max_dbm << '\n'
       << "power_convention = " << to_string(power_convention) << '\n';
    if (!weights.empty()) os << "weights = " << join(weights) << '\n';
    os << "objective_mode = "
       << (objective_mode == ObjectiveMode::FullLDT ? "full_ldt" : "quadratic_only") << '\n'
       << "gamma = " << gamma << '\n'
       << "sigma_h2 = " << sigma_h2 << '\n'
       << "sigma_h2_list = " << join(sigma_h2_list) << '\n'
       << "B = " << B << '\n'
       << "M = " << M << '\n'
       << "N = " << N << '\n'
       << "layers_list = " << join(layers_list) << '\n'
       << "pgd_list = " << join(pgd_list) << '\n'
       << "train_batches = " << train_batches << '\n'
       << "batch_size = " << batch_size << '\n'
       << "learning_rate = " << learning_rate << '\n'
       << "loss_mode = " << (loss_mode == LossMode::RobustQuantile ? "robust" : "standard")
       << '\n'
       << "grad_mode = " << (grad_mode == GradMode::Analytic ? "analytic" : "fd") << '\n'
       << "deep_supervision = " << bool_text(deep_supervision) << '\n'
       << "heldout_every = " << heldout_every << '\n'
       << "checkpoint_every = " << checkpoint_every << '\n'
       << "test_batches = " << test_batches << '\n'
       << "eval_mode = " << to_string(eval_mode) << '\n'
       << "solvers = " << join(solver_names) << '\n'
       << "fp_max_iters = " << fp_max_iters << '\n'
       << "rel_tol = " << rel_tol << '\n'
       << "baseline_iters = " << baseline_iters << '\n'
       << "rzf_alpha = " << rzf_alpha << '\n'
       << "solve_channels = " << solve_channels << '\n'
       << "sizes_list = " << join(sizes_list) << '\n'
       << "reps = " << reps << '\n'
       << "timing_channels = " << timing_channels << '\n'
       << "seed = " << seed << '\n'
       << "threads = " << threads << '\n';
    return os.str();
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    const auto& table = setters();
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = table.find(key);
        if (it == table.end())
            throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        it->second(cfg, key, value);
    }
    if (!cfg.weights.empty() && static_cast<int>(cfg.weights.size()) != cfg.K)
        throw ConfigError("weights must list exactly K values");
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config file not found: " + path.string());
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace rbf
