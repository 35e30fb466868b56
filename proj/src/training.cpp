// SPDX-License-Identifier: Apache-2.0
#include "rbf/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "rbf/model.hpp"
#include "rbf/parallel.hpp"
#include "unfold_tape.hpp"

namespace rbf {

std::size_t quantile_rank(std::size_t count, double gamma) {
    if (count == 0) throw ConfigError("quantile of an empty list");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0,1)");
    const double x = gamma * static_cast<double>(count);
    if (x < 1.0 - 1e-12) throw ConfigError("gamma * B must be >= 1");
    // guard against 0.07 * 100 = 7.000000000000001 style rounding
    const auto rank = static_cast<std::size_t>(std::ceil(x - 1e-9));
    return std::clamp<std::size_t>(rank, 1, count);
}

QuantilePick quantile_select(std::span<const double> values, double gamma) {
    const std::size_t rank = quantile_rank(values.size(), gamma);
    for (double v : values)
        if (std::isnan(v)) throw ConfigError("quantile_select: NaN in input");
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto before = [&](std::size_t a, std::size_t b) {
        return values[a] < values[b] || (values[a] == values[b] && a < b);
    };
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                     order.end(), before);
    const std::size_t idx = order[rank - 1];
    return {values[idx], idx};
}

namespace {

double layer_value(const ChannelMatrix& H, const CMatrix& V, const AuxiliaryState& aux,
                   const SystemConfig& config) {
    return qt_objective(link_powers(H, V, config.sigma2), aux, config);
}

bool layer_active(std::size_t m, std::size_t layers, bool deep_supervision) {
    return deep_supervision || m + 1 == layers;
}

double re_inner(const CMatrix& A, const CMatrix& B) {
    return (A.array().conjugate() * B.array()).sum().real();
}

struct ChannelOutcome {
    double loss = 0.0;
    RMatrix grad;
};

/// Forward pass plus per-layer loss terms; fills the selected channel per layer.
double channel_loss(const UnfoldTrace& trace, const ChannelMatrix& H,
                    const UncertaintyBatch* unc, const SystemConfig& config, const LossSpec& spec,
                    std::vector<const ChannelMatrix*>* selected) {
    const std::size_t M = trace.layer_out.size();
    double loss = 0.0;
    std::vector<double> values;
    if (selected) selected->assign(M, nullptr);
    for (std::size_t m = 0; m < M; ++m) {
        if (!layer_active(m, M, spec.deep_supervision)) continue;
        const auto& V = trace.layer_out[m];
        const auto& aux = trace.aux[m];
        if (spec.mode == LossMode::Standard) {
            loss -= layer_value(H, V, aux, config);
            if (selected) (*selected)[m] = &H;
            continue;
        }
        if (!unc || unc->samples.empty())
            throw ConfigError("robust loss needs uncertainty samples for every channel");
        values.resize(unc->samples.size());
        for (std::size_t b = 0; b < values.size(); ++b)
            values[b] = layer_value(unc->samples[b], V, aux, config);
        const auto pick = quantile_select(values, spec.gamma);
        loss -= pick.value;
        if (selected) (*selected)[m] = &unc->samples[pick.index];
    }
    return loss;
}

ChannelOutcome channel_gradient(const StepSizeSchedule& schedule, const ChannelMatrix& H,
                                const UncertaintyBatch* unc, const SystemConfig& config,
                                const LossSpec& spec) {
    detail::ForwardTape tape;
    const auto trace = detail::forward_recorded(H, schedule, config, &tape);
    std::vector<const ChannelMatrix*> selected;
    ChannelOutcome out;
    out.loss = channel_loss(trace, H, unc, config, spec, &selected);

    const auto K = H.cols();
    const int M = schedule.layers();
    const int N = schedule.steps();
    const RVector w = Eigen::Map<const RVector>(config.weights.data(), K);
    const double sigma2 = config.sigma2;
    const double kappa =
        config.objective_mode == ObjectiveMode::FullLDT ? 1.0 / std::numbers::ln2 : 1.0;
    const double sqrt_p = std::sqrt(config.p_max);

    out.grad = RMatrix::Zero(M, N);
    CMatrix Vbar = CMatrix::Zero(H.rows(), K);
    for (int m = M - 1; m >= 0; --m) {
        const auto& lt = tape.layers[static_cast<std::size_t>(m)];
        RVector ubar = RVector::Zero(K);
        RVector cbar = RVector::Zero(K);
        RVector gbar = RVector::Zero(K);

        // loss term of this layer: s * R(V_out, g, u; H_sel), s = -1
        if (const ChannelMatrix* Hs = selected[static_cast<std::size_t>(m)]) {
            const CMatrix Gs = Hs->adjoint() * lt.V_out;
            const RMatrix Ps = Gs.cwiseAbs2();
            const RVector Ts = Ps.rowwise().sum();
            Vbar -= 2.0 * kappa * detail::ascent_direction(*Hs, Gs, lt.u, lt.c);
            for (Eigen::Index k = 0; k < K; ++k) {
                const double rs = std::sqrt(Ps(k, k));
                ubar(k) -= kappa * (2.0 * lt.c(k) * rs - 2.0 * lt.u(k) * (Ts(k) + sigma2));
                cbar(k) -= kappa * 2.0 * lt.u(k) * rs;
                if (config.objective_mode == ObjectiveMode::FullLDT)
                    gbar(k) -= kappa * w(k) * (1.0 / (1.0 + lt.g(k)) - 1.0);
            }
        }

        for (int n = N - 1; n >= 0; --n) {
            const auto& st = lt.steps[static_cast<std::size_t>(n)];
            CMatrix Xbar;
            if (st.projected) {
                const double r2 = st.X.squaredNorm();
                const double r = std::sqrt(r2);
                Xbar = (sqrt_p / r) * Vbar - (sqrt_p / (r * r2) * re_inner(Vbar, st.X)) * st.X;
            } else {
                Xbar = Vbar;
            }
            out.grad(m, n) += re_inner(Xbar, st.D);

            const double mu = schedule(m, n);
            const CMatrix W = H.adjoint() * (mu * Xbar);
            CMatrix Gbar = -(lt.u.cwiseAbs2().cast<cd>().asDiagonal() * W);
            for (Eigen::Index k = 0; k < K; ++k) {
                const cd Gkk = st.G(k, k);
                const double r = std::abs(Gkk);
                const cd phase = r > 0.0 ? Gkk / r : cd(1.0, 0.0);
                const double wphi = (std::conj(W(k, k)) * phase).real();
                const double cross = (W.row(k).conjugate().cwiseProduct(st.G.row(k))).sum().real();
                ubar(k) += -2.0 * lt.u(k) * cross + lt.c(k) * wphi;
                cbar(k) += lt.u(k) * wphi;
                if (r > 0.0) {
                    const cd a = lt.u(k) * lt.c(k) * std::conj(W(k, k));
                    Gbar(k, k) += -(a * phase).imag() * cd(0.0, 1.0) * phase / r;
                }
            }
            Vbar = Xbar + H * Gbar;
        }

        // aux refresh at the layer input: u = c sqrt(S)/(T + sigma2), g = S/(T - S + sigma2)
        RVector Sbar(K);
        RVector Tbar(K);
        for (Eigen::Index k = 0; k < K; ++k) {
            const double S = lt.S(k);
            const double denom = lt.T(k) + sigma2;
            const double root = std::sqrt(S);
            cbar(k) += ubar(k) * root / denom;
            Sbar(k) = root > 0.0 ? ubar(k) * lt.c(k) / (2.0 * root * denom) : 0.0;
            Tbar(k) = -ubar(k) * lt.c(k) * root / (denom * denom);
            gbar(k) += cbar(k) * w(k) / (2.0 * lt.c(k));
            const double I = lt.T(k) - S + sigma2;
            Sbar(k) += gbar(k) * (I + S) / (I * I);
            Tbar(k) -= gbar(k) * S / (I * I);
        }
        CMatrix Gin_bar = 2.0 * (Tbar.cast<cd>().asDiagonal() * lt.G_in);
        for (Eigen::Index k = 0; k < K; ++k) Gin_bar(k, k) += 2.0 * Sbar(k) * lt.G_in(k, k);
        Vbar += H * Gin_bar;
    }
    return out;
}

void check_batch(const TrainingBatch& batch, const LossSpec& spec) {
    if (batch.channels.empty()) throw ConfigError("training batch has no channels");
    if (spec.mode == LossMode::RobustQuantile &&
        batch.uncertainty.size() != batch.channels.size())
        throw ConfigError("robust loss needs one uncertainty batch per channel");
}

const UncertaintyBatch* uncertainty_for(const TrainingBatch& batch, std::size_t i) {
    return i < batch.uncertainty.size() ? &batch.uncertainty[i] : nullptr;
}

}  // namespace

double standard_loss(const UnfoldTrace& trace, const ChannelMatrix& H, const SystemConfig& config,
                     bool deep_supervision) {
    LossSpec spec;
    spec.mode = LossMode::Standard;
    spec.deep_supervision = deep_supervision;
    return channel_loss(trace, H, nullptr, config, spec, nullptr);
}

double robust_loss(const UnfoldTrace& trace, const UncertaintyBatch& batch,
                   const SystemConfig& config, double gamma, bool deep_supervision) {
    LossSpec spec;
    spec.mode = LossMode::RobustQuantile;
    spec.gamma = gamma;
    spec.deep_supervision = deep_supervision;
    quantile_rank(batch.samples.size(), gamma);
    return channel_loss(trace, batch.nominal, &batch, config, spec, nullptr);
}

double batch_loss(const StepSizeSchedule& schedule, const TrainingBatch& batch,
                  const SystemConfig& config, const LossSpec& spec, int threads) {
    check_batch(batch, spec);
    std::vector<double> losses(batch.channels.size());
    parallel_for(losses.size(), threads, [&](std::size_t i) {
        const auto& H = batch.channels[i];
        const auto trace = forward(H, schedule, config);
        losses[i] = channel_loss(trace, H, uncertainty_for(batch, i), config, spec, nullptr);
    });
    return std::accumulate(losses.begin(), losses.end(), 0.0) /
           static_cast<double>(losses.size());
}

LossGradient grad_schedule(const StepSizeSchedule& schedule, const TrainingBatch& batch,
                           const SystemConfig& config, const LossSpec& spec, GradMode mode,
                           int threads) {
    check_batch(batch, spec);
    const int M = schedule.layers();
    const int N = schedule.steps();
    LossGradient out;
    out.grad = RMatrix::Zero(M, N);
    if (mode == GradMode::Analytic) {
        std::vector<ChannelOutcome> parts(batch.channels.size());
        parallel_for(parts.size(), threads, [&](std::size_t i) {
            parts[i] = channel_gradient(schedule, batch.channels[i], uncertainty_for(batch, i),
                                        config, spec);
        });
        for (const auto& p : parts) {
            out.loss += p.loss;
            out.grad += p.grad;
        }
        const double scale = 1.0 / static_cast<double>(parts.size());
        out.loss *= scale;
        out.grad *= scale;
        return out;
    }

    out.loss = batch_loss(schedule, batch, config, spec, threads);
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
            const double h = 1e-5 * std::max(1.0, std::abs(schedule(m, n)));
            StepSizeSchedule plus = schedule;
            StepSizeSchedule minus = schedule;
            plus(m, n) += h;
            minus(m, n) -= h;
            const double lp = batch_loss(plus, batch, config, spec, threads);
            const double lm = batch_loss(minus, batch, config, spec, threads);
            out.grad(m, n) = (lp - lm) / (plus(m, n) - minus(m, n));
        }
    return out;
}

AdamState AdamState::zeros(int rows, int cols) {
    AdamState s;
    s.m = RMatrix::Zero(rows, cols);
    s.v = RMatrix::Zero(rows, cols);
    return s;
}

void adam_step(StepSizeSchedule& schedule, const RMatrix& grad, AdamState& state,
               double learning_rate) {
    auto& mu = schedule.values();
    if (grad.rows() != mu.rows() || grad.cols() != mu.cols())
        throw ConfigError("adam_step: gradient shape does not match the schedule");
    if (state.m.size() == 0) state = AdamState::zeros(static_cast<int>(mu.rows()),
                                                      static_cast<int>(mu.cols()));
    ++state.step;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    const auto m_hat = state.m.array() / c1;
    const auto v_hat = state.v.array() / c2;
    mu.array() -= learning_rate * m_hat / (v_hat.sqrt() + state.eps);
}

void TrainConfig::validate() const {
    std::ostringstream err;
    if (!(learning_rate > 0.0)) err << "learning_rate must be > 0; ";
    if (batches < 1) err << "batches must be >= 1; ";
    if (batch_size < 1) err << "batch_size must be >= 1; ";
    if (B < 1) err << "B must be >= 1; ";
    if (!(gamma > 0.0 && gamma < 1.0)) err << "gamma must lie in (0,1); ";
    else if (loss_mode == LossMode::RobustQuantile && gamma * B < 1.0 - 1e-12)
        err << "B * gamma must be >= 1; ";
    if (heldout_every < 1 || checkpoint_every < 1) err << "intervals must be >= 1; ";
    const auto msg = err.str();
    if (!msg.empty()) throw ConfigError("invalid TrainConfig: " + msg);
}

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
    os << "batch,loss,heldout_robust_wsr\n";
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < history.loss.size(); ++i) {
        os << (i + 1) << ',' << history.loss[i] << ',';
        if (i < history.heldout.size() && history.heldout[i]) os << *history.heldout[i];
        os << '\n';
    }
}

TrainingBatch make_training_batch(const TrainConfig& tc, const SystemConfig& config,
                                  std::uint64_t index) {
    TrainingBatch batch;
    batch.channels = sample_channels(derive_seed(tc.seed, Stream::TrainChannels, index), config.L,
                                     config.K, tc.batch_size);
    if (tc.loss_mode == LossMode::RobustQuantile) {
        const Seed errors = derive_seed(tc.seed, Stream::TrainErrors, index);
        batch.uncertainty.reserve(batch.channels.size());
        for (std::size_t c = 0; c < batch.channels.size(); ++c)
            batch.uncertainty.push_back(inject_uncertainty(batch.channels[c], config.sigma_h2,
                                                           tc.B,
                                                           derive_seed(errors, Stream::Adhoc, c)));
    }
    return batch;
}

TrainResult train(const TrainConfig& tc, const SystemConfig& config, int layers, int steps,
                  const HeldoutFn& heldout) {
    tc.validate();
    config.validate();
    TrainResult out{StepSizeSchedule(layers, steps, 1.0), {}};
    auto adam = AdamState::zeros(layers, steps);
    const LossSpec spec{tc.loss_mode, tc.gamma, tc.deep_supervision};
    if (tc.checkpoint_dir) std::filesystem::create_directories(*tc.checkpoint_dir);

    for (int i = 0; i < tc.batches; ++i) {
        const auto batch = make_training_batch(tc, config, static_cast<std::uint64_t>(i));
        const auto lg = grad_schedule(out.schedule, batch, config, spec, tc.grad_mode, tc.threads);
        if (!std::isfinite(lg.loss) || !lg.grad.allFinite()) {
            std::ostringstream err;
            err << "non-finite loss or gradient at batch " << i << " (run seed " << tc.seed.value
                << ", batch seed " << derive_seed(tc.seed, Stream::TrainChannels, i).value << ")";
            throw SolverError(err.str());
        }
        adam_step(out.schedule, lg.grad, adam, tc.learning_rate);
        out.history.loss.push_back(lg.loss);

        const bool last = i + 1 == tc.batches;
        if (heldout && ((i + 1) % tc.heldout_every == 0 || last))
            out.history.heldout.emplace_back(heldout(out.schedule));
        else
            out.history.heldout.emplace_back(std::nullopt);

        if (tc.checkpoint_dir && (i + 1) % tc.checkpoint_every == 0) {
            std::ostringstream name;
            name << "schedule_ckpt_" << std::setw(6) << std::setfill('0') << (i + 1) << ".txt";
            save_schedule(*tc.checkpoint_dir / name.str(), out.schedule);
        }
    }
    return out;
}

}  // namespace rbf
