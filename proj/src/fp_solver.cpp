// SPDX-License-Identifier: Apache-2.0
#include "rbf/fp_solver.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "beam_system.hpp"
#include "rbf/model.hpp"
#include "rbf/unfolding.hpp"

namespace rbf {

void FpSettings::validate() const {
    if (max_iters <= 0 || !(rel_tol > 0.0) || !(bisect_tol > 0.0) || bisect_max_steps <= 0)
        throw ConfigError("FpSettings: all settings must be positive");
}

namespace {

CVector fp_coefficients(const RVector& u, const RVector& g, const SystemConfig& config) {
    if (u.size() != g.size() || static_cast<std::size_t>(u.size()) != config.weights.size())
        throw ConfigError("u, g and weights must all have length K");
    CVector c(u.size());
    for (Eigen::Index k = 0; k < u.size(); ++k) {
        if (g(k) < -1.0) throw ConfigError("auxiliary g_k must be >= -1");
        c(k) = std::sqrt(config.weights[k] * (1.0 + g(k))) * u(k);
    }
    return c;
}

detail::BisectionSettings bisection(const FpSettings& s) {
    return {s.bisect_tol, s.bisect_max_steps};
}

}  // namespace

BeamformingMatrix solve_v_given_nu(const ChannelMatrix& H, const RVector& u, const RVector& g,
                                   double nu, const SystemConfig& config) {
    if (!(nu >= 0.0)) throw ConfigError("nu must be >= 0");
    const CVector c = fp_coefficients(u, g, config);
    CMatrix M = H * u.cwiseAbs2().cast<cd>().asDiagonal() * H.adjoint();
    M.diagonal().array() += nu;
    if (nu == 0.0) {
        Eigen::SelfAdjointEigenSolver<CMatrix> eig(M, Eigen::EigenvaluesOnly);
        const double largest = eig.eigenvalues().maxCoeff();
        if (!(largest > 0.0) || eig.eigenvalues().minCoeff() <= 1e-12 * largest)
            throw SolverError("unconstrained solution undefined: singular system at nu = 0");
    }
    Eigen::LDLT<CMatrix> ldlt(M);
    if (ldlt.info() != Eigen::Success) throw SolverError("regularized system is singular");
    return ldlt.solve(H * c.asDiagonal());
}

NuResult find_nu(const ChannelMatrix& H, const RVector& u, const RVector& g,
                 const SystemConfig& config, const FpSettings& settings) {
    const detail::RegularizedBeamSystem sys(H, u.cwiseAbs2(), fp_coefficients(u, g, config));
    const auto sol = detail::bisect_nu(sys, config.p_max, bisection(settings));
    return {sol.nu, sol.power, sol.steps};
}

FpResult run_fp(const ChannelMatrix& H, const SystemConfig& config, const FpSettings& settings,
                const std::optional<BeamformingMatrix>& V0) {
    config.validate();
    settings.validate();
    if (H.rows() != config.L || H.cols() != config.K)
        throw ConfigError("run_fp: channel dimensions do not match the configuration");

    SystemConfig ldt = config;
    ldt.objective_mode = ObjectiveMode::FullLDT;

    FpResult out;
    out.V = V0 ? project_power(*V0, config.p_max) : init_beamformer(H, config.p_max);
    check_dims(H, out.V);
    double prev = 0.0;
    for (int it = 0; it < settings.max_iters; ++it) {
        out.aux = refresh_aux(H, out.V, config);
        if (it == 0 && out.aux.u.cwiseAbs().maxCoeff() == 0.0) {
            // degenerate start (e.g. V0 = 0): every u_k vanishes and V would stay zero
            out.V = init_beamformer(H, config.p_max);
            out.aux = refresh_aux(H, out.V, config);
        }
        const detail::RegularizedBeamSystem sys(H, out.aux.u.cwiseAbs2(),
                                                fp_coefficients(out.aux.u, out.aux.g, config));
        const auto sol = detail::bisect_nu(sys, config.p_max, bisection(settings));
        out.V = sys.beams(sol.nu);

        const double obj = qt_objective(H, out.V, out.aux, ldt);
        out.trace.objective.push_back(obj);
        out.trace.wsr.push_back(wsr(H, out.V, config));
        out.trace.iterations = it + 1;
        if (!std::isfinite(obj)) throw SolverError("run_fp: non-finite objective");
        if (it > 0 && std::abs(obj - prev) < settings.rel_tol * std::abs(prev)) {
            out.trace.converged = true;
            break;
        }
        prev = obj;
    }
    return out;
}

}  // namespace rbf
