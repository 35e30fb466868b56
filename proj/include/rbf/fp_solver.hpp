// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "rbf/types.hpp"

namespace rbf {

struct FpSettings {
    int max_iters = 100;
    double rel_tol = 1e-6;
    double bisect_tol = 1e-8;  // relative power gap
    int bisect_max_steps = 200;

    void validate() const;
};

/// Per-iteration record of an iterative solver.
struct SolveTrace {
    std::vector<double> objective;  // FullLDT objective in bits (FP); WSR (WMMSE)
    std::vector<double> wsr;
    int iterations = 0;
    bool converged = false;
    int clamped = 0;  // WMMSE: number of MSE values clamped at 1e-12
};

struct FpResult {
    BeamformingMatrix V;
    AuxiliaryState aux;  // the (g, u) that produced V
    SolveTrace trace;
};

/// v_k = sqrt(w_k (1 + g_k)) u_k (sum_j u_j^2 h_j h_j^H + nu I)^{-1} h_k.
/// nu = 0 requires a numerically invertible system; otherwise SolverError.
BeamformingMatrix solve_v_given_nu(const ChannelMatrix& H, const RVector& u, const RVector& g,
                                   double nu, const SystemConfig& config);

struct NuResult {
    double nu = 0.0;
    double power = 0.0;  // sum_k ||v_k(nu)||^2
    int steps = 0;
};

/// Smallest nu >= 0 whose beamformers meet the power budget config.p_max.
NuResult find_nu(const ChannelMatrix& H, const RVector& u, const RVector& g,
                 const SystemConfig& config, const FpSettings& settings = {});

/// Alternating g, u and constrained V updates from the matched-filter start, or
/// from V0 when given. Stops on relative FullLDT objective change < rel_tol.
FpResult run_fp(const ChannelMatrix& H, const SystemConfig& config,
                const FpSettings& settings = {},
                const std::optional<BeamformingMatrix>& V0 = std::nullopt);

}  // namespace rbf
