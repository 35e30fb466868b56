// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rbf/fp_solver.hpp"
#include "rbf/types.hpp"

namespace rbf {

struct WmmseSettings {
    int max_iters = 100;
    double rel_tol = 1e-6;
    double bisect_tol = 1e-8;
    int bisect_max_steps = 200;

    void validate() const;
};

struct WmmseResult {
    BeamformingMatrix V;
    SolveTrace trace;  // objective == wsr for WMMSE
};

/// Sum-rate WMMSE: MMSE receivers a_k, MSE weights t_k = w_k / e_k, then the
/// power-constrained transmit update with nu found by bisection.
WmmseResult run_wmmse(const ChannelMatrix& H, const SystemConfig& config,
                      const WmmseSettings& settings = {});

/// Regularized zero-forcing directions (HH^H + alpha I)^{-1} h_k, each user at
/// power p_max / K.
BeamformingMatrix rzf_beamformer(const ChannelMatrix& H, double alpha_reg,
                                 const SystemConfig& config);

}  // namespace rbf
