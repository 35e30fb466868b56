// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rbf/types.hpp"

namespace rbf::detail {

/// Beamformers of the form v_k(nu) = c_k (sum_j d_j h_j h_j^H + nu I)^{-1} h_k,
/// shared by the FP and WMMSE transmit updates. The Hermitian matrix is
/// eigendecomposed once so power(nu) and beams(nu) are cheap for every nu.
class RegularizedBeamSystem {
public:
    RegularizedBeamSystem(const ChannelMatrix& H, const RVector& d, const CVector& c);

    double power(double nu) const;
    BeamformingMatrix beams(double nu) const;

    /// Smallest eigenvalue above 1e-12 times the largest (nu = 0 is solvable).
    bool invertible_at_zero() const;
    bool all_zero() const { return zero_; }

private:
    CMatrix basis_;      // eigenvectors Q
    RVector eig_;        // eigenvalues, ascending
    CMatrix projected_;  // Q^H H diag(c)
    RMatrix weights_;    // |projected_|^2
    bool zero_ = false;
};

struct BisectionSettings {
    double tol = 1e-8;
    int max_steps = 200;
};

struct NuSolution {
    double nu = 0.0;
    double power = 0.0;
    int steps = 0;
};

/// Smallest nu >= 0 with power(nu) <= p_max, returning the feasible bracket end.
NuSolution bisect_nu(const RegularizedBeamSystem& sys, double p_max, const BisectionSettings& s);

}  // namespace rbf::detail
