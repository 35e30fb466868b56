// SPDX-License-Identifier: Apache-2.0
#include "rbf/baselines.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "beam_system.hpp"
#include "rbf/model.hpp"
#include "rbf/unfolding.hpp"

namespace rbf {

void WmmseSettings::validate() const {
    if (max_iters <= 0 || !(rel_tol > 0.0) || !(bisect_tol > 0.0) || bisect_max_steps <= 0)
        throw ConfigError("WmmseSettings: all settings must be positive");
}

WmmseResult run_wmmse(const ChannelMatrix& H, const SystemConfig& config,
                      const WmmseSettings& settings) {
    config.validate();
    settings.validate();
    if (H.rows() != config.L || H.cols() != config.K)
        throw ConfigError("run_wmmse: channel dimensions do not match the configuration");
    const auto K = H.cols();
    constexpr double kMinMse = 1e-12;

    WmmseResult out;
    out.V = init_beamformer(H, config.p_max);
    double prev = wsr(H, out.V, config);
    for (int it = 0; it < settings.max_iters; ++it) {
        const CMatrix G = H.adjoint() * out.V;  // G(k, j) = h_k^H v_j
        const RVector total = G.cwiseAbs2().rowwise().sum();
        RVector d(K);
        CVector c(K);
        for (Eigen::Index k = 0; k < K; ++k) {
            const cd a = G(k, k) / (total(k) + config.sigma2);
            double e = 1.0 - (std::conj(a) * G(k, k)).real();
            if (!(e > kMinMse)) {
                e = kMinMse;
                ++out.trace.clamped;
            }
            const double t = config.weights[k] / e;
            d(k) = t * std::norm(a);
            c(k) = t * a;
        }
        const detail::RegularizedBeamSystem sys(H, d, c);
        const auto sol = detail::bisect_nu(sys, config.p_max,
                                           {settings.bisect_tol, settings.bisect_max_steps});
        out.V = sys.beams(sol.nu);

        const double rate = wsr(H, out.V, config);
        if (!std::isfinite(rate)) throw SolverError("run_wmmse: non-finite rate");
        out.trace.objective.push_back(rate);
        out.trace.wsr.push_back(rate);
        out.trace.iterations = it + 1;
        if (std::abs(rate - prev) < settings.rel_tol * std::abs(prev)) {
            out.trace.converged = true;
            break;
        }
        prev = rate;
    }
    return out;
}

BeamformingMatrix rzf_beamformer(const ChannelMatrix& H, double alpha_reg,
                                 const SystemConfig& config) {
    if (!(alpha_reg >= 0.0)) throw ConfigError("rzf: alpha_reg must be >= 0");
    if (!(config.p_max > 0.0)) throw ConfigError("rzf: p_max must be > 0");
    const auto L = H.rows();
    const auto K = H.cols();
    CMatrix M = H * H.adjoint();
    M.diagonal().array() += alpha_reg;
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(M, Eigen::EigenvaluesOnly);
    const double largest = eig.eigenvalues().maxCoeff();
    if (!(largest > 0.0) || eig.eigenvalues().minCoeff() <= 1e-12 * largest)
        throw SolverError("rzf: regularized Gram matrix is singular");
    const CMatrix D = M.ldlt().solve(H);

    BeamformingMatrix V(L, K);
    const double per_user = config.p_max / static_cast<double>(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        const double n = D.col(k).norm();
        if (n == 0.0) throw SolverError("rzf: zero direction for a user");
        V.col(k) = D.col(k) * (std::sqrt(per_user) / n);
    }
    return V;
}

}  // namespace rbf
