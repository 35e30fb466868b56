// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "rbf/unfolding.hpp"

namespace rbf::detail {

struct StepTape {
    CMatrix V_prev;   // V^(n-1)
    CMatrix G;        // H^H V^(n-1)
    CMatrix D;        // ascent direction at V^(n-1)
    CMatrix X;        // V^(n-1) + mu D, before projection
    bool projected = false;
};

struct LayerTape {
    CMatrix V_in;
    CMatrix G_in;  // H^H V_in
    RVector S, T;  // signal and sum_j |h_k^H v_j|^2 at V_in
    RVector g, u, c;
    std::vector<StepTape> steps;
    CMatrix V_out;
};

struct ForwardTape {
    std::vector<LayerTape> layers;
};

/// Ascent direction for fixed (u, c) given G = H^H V.
CMatrix ascent_direction(const ChannelMatrix& H, const CMatrix& G, const RVector& u,
                         const RVector& c);

/// forward() that also records every intermediate needed for the adjoint pass.
UnfoldTrace forward_recorded(const ChannelMatrix& H, const StepSizeSchedule& schedule,
                             const SystemConfig& config, ForwardTape* tape);

}  // namespace rbf::detail
