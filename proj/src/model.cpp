// SPDX-License-Identifier: Apache-2.0
#include "rbf/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace rbf {

void SystemConfig::validate() const {
    std::ostringstream err;
    if (L <= 0) err << "L must be positive; ";
    if (K <= 0) err << "K must be positive; ";
    if (!(sigma2 > 0.0)) err << "sigma2 must be > 0; ";
    if (!(p_max > 0.0)) err << "p_max must be > 0; ";
    if (static_cast<int>(weights.size()) != K) err << "weights length must equal K; ";
    for (double w : weights)
        if (!(w > 0.0)) {
            err << "weights must be > 0; ";
            break;
        }
    if (!(gamma > 0.0 && gamma < 1.0)) err << "gamma must lie in (0,1); ";
    if (!(sigma_h2 >= 0.0)) err << "sigma_h2 must be >= 0; ";
    const auto msg = err.str();
    if (!msg.empty()) throw ConfigError("invalid SystemConfig: " + msg);
}

SystemConfig SystemConfig::make(int L, int K, double sigma2, double p_max) {
    SystemConfig c;
    c.L = L;
    c.K = K;
    c.sigma2 = sigma2;
    c.p_max = p_max;
    c.weights.assign(static_cast<std::size_t>(std::max(K, 0)), 1.0);
    return c;
}

void check_dims(const ChannelMatrix& H, const BeamformingMatrix& V) {
    if (H.rows() != V.rows() || H.cols() != V.cols()) {
        std::ostringstream err;
        err << "dimension mismatch: H is " << H.rows() << "x" << H.cols() << ", V is " << V.rows()
            << "x" << V.cols();
        throw ConfigError(err.str());
    }
}

namespace {

void check_user(const ChannelMatrix& H, int k) {
    if (k < 0 || k >= H.cols()) throw ConfigError("user index out of range");
}

void check_weights(const ChannelMatrix& H, const SystemConfig& config) {
    if (static_cast<Eigen::Index>(config.weights.size()) != H.cols())
        throw ConfigError("weights length does not match the number of users");
}

}  // namespace

LinkPowers link_powers(const ChannelMatrix& H, const BeamformingMatrix& V, double sigma2) {
    check_dims(H, V);
    const CMatrix G = H.adjoint() * V;  // G(k, j) = h_k^H v_j
    const RMatrix P = G.cwiseAbs2();
    LinkPowers out;
    out.signal = P.diagonal();
    out.interference = P.rowwise().sum() - out.signal + RVector::Constant(H.cols(), sigma2);
    return out;
}

double signal_power(const ChannelMatrix& H, const BeamformingMatrix& V, int k) {
    check_dims(H, V);
    check_user(H, k);
    return std::norm(H.col(k).dot(V.col(k)));
}

double interference_plus_noise(const ChannelMatrix& H, const BeamformingMatrix& V,
                               double sigma2, int k) {
    check_dims(H, V);
    check_user(H, k);
    double acc = sigma2;
    for (Eigen::Index j = 0; j < V.cols(); ++j)
        if (j != k) acc += std::norm(H.col(k).dot(V.col(j)));
    return acc;
}

double sinr(const ChannelMatrix& H, const BeamformingMatrix& V, double sigma2, int k) {
    return signal_power(H, V, k) / interference_plus_noise(H, V, sigma2, k);
}

double wsr(const ChannelMatrix& H, const BeamformingMatrix& V, const SystemConfig& config) {
    check_weights(H, config);
    const auto links = link_powers(H, V, config.sigma2);
    double acc = 0.0;
    for (Eigen::Index k = 0; k < H.cols(); ++k)
        acc += config.weights[k] * std::log2(1.0 + links.signal(k) / links.interference(k));
    return acc;
}

namespace {

void check_aux(const AuxiliaryState& aux, Eigen::Index K) {
    if (aux.g.size() != K || aux.u.size() != K)
        throw ConfigError("auxiliary state dimensions do not match K");
    for (Eigen::Index k = 0; k < K; ++k)
        if (!(aux.g(k) >= -1.0)) throw ConfigError("auxiliary g_k must be >= -1");
}

double quadratic_part(const LinkPowers& links, const AuxiliaryState& aux,
                      const SystemConfig& config) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < links.signal.size(); ++k) {
        const double S = links.signal(k);
        const double u = aux.u(k);
        acc += 2.0 * u * std::sqrt(config.weights[k] * (1.0 + aux.g(k)) * S) -
               u * u * (S + links.interference(k));
    }
    return acc;
}

}  // namespace

double qt_objective(const LinkPowers& links, const AuxiliaryState& aux,
                    const SystemConfig& config) {
    const auto K = links.signal.size();
    check_aux(aux, K);
    if (static_cast<Eigen::Index>(config.weights.size()) != K)
        throw ConfigError("weights length does not match the number of users");
    const double quad = quadratic_part(links, aux, config);
    if (config.objective_mode == ObjectiveMode::QuadraticOnly) return quad;
    double ldt = 0.0;
    for (Eigen::Index k = 0; k < K; ++k)
        ldt += config.weights[k] * (std::log1p(aux.g(k)) - aux.g(k));
    return (ldt + quad) / std::numbers::ln2;
}

double qt_quadratic(const ChannelMatrix& H, const BeamformingMatrix& V,
                    const AuxiliaryState& aux, const SystemConfig& config) {
    check_weights(H, config);
    check_aux(aux, H.cols());
    return quadratic_part(link_powers(H, V, config.sigma2), aux, config);
}

double qt_objective(const ChannelMatrix& H, const BeamformingMatrix& V,
                    const AuxiliaryState& aux, const SystemConfig& config) {
    return qt_objective(link_powers(H, V, config.sigma2), aux, config);
}

BeamformingMatrix project_power(const BeamformingMatrix& V, double p_max) {
    if (!(p_max > 0.0)) throw ConfigError("p_max must be > 0");
    const double power = V.squaredNorm();
    if (power <= p_max) return V;
    double scale = std::sqrt(p_max) / std::sqrt(power);
    BeamformingMatrix out = V * scale;
    // Rounding can leave ||out||^2 a few ulps above p_max; shrink until the
    // result is feasible as computed, which also makes projection idempotent.
    while (out.squaredNorm() > p_max) {
        scale = std::nextafter(scale, 0.0);
        out = V * scale;
    }
    return out;
}

RVector update_g(const ChannelMatrix& H, const BeamformingMatrix& V, const SystemConfig& config) {
    const auto links = link_powers(H, V, config.sigma2);
    return links.signal.cwiseQuotient(links.interference);
}

RVector update_u(const ChannelMatrix& H, const BeamformingMatrix& V, const RVector& g,
                 const SystemConfig& config) {
    check_weights(H, config);
    if (g.size() != H.cols()) throw ConfigError("g length does not match K");
    const auto links = link_powers(H, V, config.sigma2);
    RVector u(H.cols());
    for (Eigen::Index k = 0; k < H.cols(); ++k) {
        const double S = links.signal(k);
        if (g(k) < -1.0) throw ConfigError("auxiliary g_k must be >= -1");
        u(k) = std::sqrt(config.weights[k] * (1.0 + g(k)) * S) / (S + links.interference(k));
    }
    return u;
}

AuxiliaryState refresh_aux(const ChannelMatrix& H, const BeamformingMatrix& V,
                           const SystemConfig& config) {
    AuxiliaryState aux;
    aux.g = update_g(H, V, config);
    aux.u = update_u(H, V, aux.g, config);
    return aux;
}

}  // namespace rbf
