// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <vector>

#include "rbf/types.hpp"

namespace rbf {

/// Trainable PGD step sizes mu(m, n): M layers, N steps per layer.
class StepSizeSchedule {
public:
    StepSizeSchedule() = default;
    StepSizeSchedule(int layers, int steps, double value = 1.0);
    explicit StepSizeSchedule(RMatrix mu);

    int layers() const { return static_cast<int>(mu_.rows()); }
    int steps() const { return static_cast<int>(mu_.cols()); }
    double operator()(int m, int n) const { return mu_(m, n); }
    double& operator()(int m, int n) { return mu_(m, n); }
    const RMatrix& values() const { return mu_; }
    RMatrix& values() { return mu_; }

    bool operator==(const StepSizeSchedule& other) const { return mu_ == other.mu_; }

private:
    RMatrix mu_;
};

/// Text format: header "# UI-DUFP schedule M=<M> N=<N>", then one line per
/// layer with N whitespace-separated decimals.
void save_schedule(const std::filesystem::path& path, const StepSizeSchedule& schedule);
StepSizeSchedule load_schedule(const std::filesystem::path& path);

struct UnfoldTrace {
    std::vector<AuxiliaryState> aux;          // (g_m, u_m) per layer
    std::vector<BeamformingMatrix> layer_out;  // V_m^(N) per layer
    BeamformingMatrix V;                       // final beamformer

    const AuxiliaryState& final_aux() const { return aux.back(); }
};

/// Matched filter alpha H at exactly full power.
BeamformingMatrix init_beamformer(const ChannelMatrix& H, double p_max);

/// Conjugate Wirtinger gradient dR/dV* of the quadratic objective
///   R(V) = sum_k 2 u_k c_k |h_k^H v_k| - u_k^2 (S_k + I_k),  c_k = sqrt(w_k (1 + g_k)).
/// Column k is u_k c_k phi_k h_k - (sum_j u_j^2 h_j h_j^H) v_k with
/// phi_k = h_k^H v_k / |h_k^H v_k| (phi_k = 1 when h_k^H v_k = 0).
CMatrix grad_v_objective(const ChannelMatrix& H, const BeamformingMatrix& V,
                         const AuxiliaryState& aux, const SystemConfig& config);

/// project_power(V + mu * grad_v_objective(V)). Ascent orientation.
BeamformingMatrix pgd_step(const ChannelMatrix& H, const BeamformingMatrix& V,
                           const AuxiliaryState& aux, double mu, const SystemConfig& config);

/// M layers: refresh g then u from the layer input, then N projected gradient
/// steps with mu(m, 0..N-1). Layer output seeds the next layer.
UnfoldTrace forward(const ChannelMatrix& H, const StepSizeSchedule& schedule,
                    const SystemConfig& config);

}  // namespace rbf
