// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rbf/types.hpp"

namespace rbf {

/// Per-user link quantities for a beamformer: S_k = |h_k^H v_k|^2 and
/// I_k = sum_{j != k} |h_k^H v_j|^2 + sigma^2.
struct LinkPowers {
    RVector signal;
    RVector interference;
};

LinkPowers link_powers(const ChannelMatrix& H, const BeamformingMatrix& V, double sigma2);

double signal_power(const ChannelMatrix& H, const BeamformingMatrix& V, int k);
double interference_plus_noise(const ChannelMatrix& H, const BeamformingMatrix& V,
                               double sigma2, int k);
double sinr(const ChannelMatrix& H, const BeamformingMatrix& V, double sigma2, int k);

/// Weighted sum rate in bits/s/Hz.
double wsr(const ChannelMatrix& H, const BeamformingMatrix& V, const SystemConfig& config);

/// Quadratic part: sum_k 2 u_k sqrt(w_k (1 + g_k) S_k) - u_k^2 (S_k + I_k).
double qt_quadratic(const ChannelMatrix& H, const BeamformingMatrix& V,
                    const AuxiliaryState& aux, const SystemConfig& config);

/// Transformed objective. QuadraticOnly returns qt_quadratic verbatim. FullLDT
/// returns (sum_k w_k ln(1 + g_k) - w_k g_k + qt_quadratic) / ln 2, which equals
/// wsr() when g and u are set to their closed-form optima.
double qt_objective(const ChannelMatrix& H, const BeamformingMatrix& V,
                    const AuxiliaryState& aux, const SystemConfig& config);

/// Same as qt_objective but with precomputed link powers.
double qt_objective(const LinkPowers& links, const AuxiliaryState& aux,
                    const SystemConfig& config);

/// Power-ball projection: V if Tr(VV^H) <= p_max, else V sqrt(p_max) / ||V||_F.
BeamformingMatrix project_power(const BeamformingMatrix& V, double p_max);

/// Tr(VV^H).
inline double total_power(const BeamformingMatrix& V) { return V.squaredNorm(); }

/// g_k = S_k / I_k.
RVector update_g(const ChannelMatrix& H, const BeamformingMatrix& V, const SystemConfig& config);

/// u_k = sqrt(w_k (1 + g_k) S_k) / (S_k + I_k).
RVector update_u(const ChannelMatrix& H, const BeamformingMatrix& V, const RVector& g,
                 const SystemConfig& config);

/// g then u, both from the same beamformer.
AuxiliaryState refresh_aux(const ChannelMatrix& H, const BeamformingMatrix& V,
                           const SystemConfig& config);

void check_dims(const ChannelMatrix& H, const BeamformingMatrix& V);

}  // namespace rbf
