// SPDX-License-Identifier: Apache-2.0
#include "rbf/unfolding.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "rbf/model.hpp"
#include "unfold_tape.hpp"

namespace rbf {

StepSizeSchedule::StepSizeSchedule(int layers, int steps, double value) {
    if (layers < 1 || steps < 0) throw ConfigError("schedule needs M >= 1 and N >= 0");
    mu_ = RMatrix::Constant(layers, steps, value);
}

StepSizeSchedule::StepSizeSchedule(RMatrix mu) : mu_(std::move(mu)) {
    if (mu_.rows() < 1) throw ConfigError("schedule needs M >= 1");
    if (!mu_.allFinite()) throw ConfigError("schedule entries must be finite");
}

void save_schedule(const std::filesystem::path& path, const StepSizeSchedule& schedule) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
    os << "# UI-DUFP schedule M=" << schedule.layers() << " N=" << schedule.steps() << '\n';
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (int m = 0; m < schedule.layers(); ++m) {
        for (int n = 0; n < schedule.steps(); ++n) os << (n ? " " : "") << schedule(m, n);
        os << '\n';
    }
    if (!os) throw ConfigError("write failed for " + path.string());
}

StepSizeSchedule load_schedule(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw MissingArtifactError("schedule not found: " + path.string());
    std::string header;
    std::getline(is, header);
    int M = 0;
    int N = -1;
    if (std::sscanf(header.c_str(), "# UI-DUFP schedule M=%d N=%d", &M, &N) != 2 || M < 1 ||
        N < 0)
        throw ConfigError(path.string() + ": malformed schedule header");
    RMatrix mu(M, N);
    std::string line;
    for (int m = 0; m < M; ++m) {
        if (!std::getline(is, line)) throw ConfigError(path.string() + ": missing layer line");
        std::istringstream ls(line);
        for (int n = 0; n < N; ++n)
            if (!(ls >> mu(m, n))) throw ConfigError(path.string() + ": short layer line");
        std::string extra;
        if (ls >> extra) throw ConfigError(path.string() + ": too many values on a layer line");
    }
    return StepSizeSchedule(std::move(mu));
}

BeamformingMatrix init_beamformer(const ChannelMatrix& H, double p_max) {
    if (!(p_max > 0.0)) throw ConfigError("p_max must be > 0");
    const double energy = H.squaredNorm();
    if (!(energy > 0.0)) throw ConfigError("matched filter undefined for an all-zero channel");
    return H * std::sqrt(p_max / energy);
}

namespace detail {

CMatrix ascent_direction(const ChannelMatrix& H, const CMatrix& G, const RVector& u,
                         const RVector& c) {
    const auto K = H.cols();
    CMatrix E = -(u.cwiseAbs2().cast<cd>().asDiagonal() * G);
    for (Eigen::Index k = 0; k < K; ++k) {
        const double r = std::abs(G(k, k));
        const cd phase = r > 0.0 ? G(k, k) / r : cd(1.0, 0.0);
        E(k, k) += u(k) * c(k) * phase;
    }
    return H * E;
}

UnfoldTrace forward_recorded(const ChannelMatrix& H, const StepSizeSchedule& schedule,
                             const SystemConfig& config, ForwardTape* tape) {
    if (static_cast<Eigen::Index>(config.weights.size()) != H.cols())
        throw ConfigError("weights length does not match the number of users");
    const auto K = H.cols();
    const RVector w = Eigen::Map<const RVector>(config.weights.data(), K);
    UnfoldTrace trace;
    CMatrix V = init_beamformer(H, config.p_max);
    if (tape) tape->layers.clear();
    for (int m = 0; m < schedule.layers(); ++m) {
        LayerTape layer;
        layer.V_in = V;
        layer.G_in = H.adjoint() * V;
        const RMatrix P = layer.G_in.cwiseAbs2();
        layer.S = P.diagonal();
        layer.T = P.rowwise().sum();
        const RVector interference = ((layer.T - layer.S).array() + config.sigma2).matrix();
        layer.g = layer.S.cwiseQuotient(interference);
        layer.c = (w.array() * (1.0 + layer.g.array())).sqrt().matrix();
        layer.u = (layer.c.array() * layer.S.array().sqrt() /
                   (layer.S + interference).array()).matrix();

        for (int n = 0; n < schedule.steps(); ++n) {
            StepTape step;
            step.G = H.adjoint() * V;
            step.D = ascent_direction(H, step.G, layer.u, layer.c);
            step.X = V + schedule(m, n) * step.D;
            step.projected = step.X.squaredNorm() > config.p_max;
            CMatrix next = project_power(step.X, config.p_max);
            if (tape) {
                step.V_prev = std::move(V);
                layer.steps.push_back(std::move(step));
            }
            V = std::move(next);
        }
        layer.V_out = V;
        trace.aux.push_back({layer.g, layer.u});
        trace.layer_out.push_back(V);
        if (tape) tape->layers.push_back(std::move(layer));
    }
    trace.V = V;
    return trace;
}

}  // namespace detail

CMatrix grad_v_objective(const ChannelMatrix& H, const BeamformingMatrix& V,
                         const AuxiliaryState& aux, const SystemConfig& config) {
    check_dims(H, V);
    const auto K = H.cols();
    if (aux.g.size() != K || aux.u.size() != K)
        throw ConfigError("auxiliary state dimensions do not match K");
    if (static_cast<Eigen::Index>(config.weights.size()) != K)
        throw ConfigError("weights length does not match the number of users");
    RVector c(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        if (aux.g(k) < -1.0) throw ConfigError("auxiliary g_k must be >= -1");
        c(k) = std::sqrt(config.weights[k] * (1.0 + aux.g(k)));
    }
    return detail::ascent_direction(H, H.adjoint() * V, aux.u, c);
}

BeamformingMatrix pgd_step(const ChannelMatrix& H, const BeamformingMatrix& V,
                           const AuxiliaryState& aux, double mu, const SystemConfig& config) {
    return project_power(V + mu * grad_v_objective(H, V, aux, config), config.p_max);
}

UnfoldTrace forward(const ChannelMatrix& H, const StepSizeSchedule& schedule,
                    const SystemConfig& config) {
    return detail::forward_recorded(H, schedule, config, nullptr);
}

}  // namespace rbf
