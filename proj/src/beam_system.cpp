// SPDX-License-Identifier: Apache-2.0
#include "beam_system.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace rbf::detail {

namespace {
// Feasibility is judged against a slightly tightened budget so that rounding in
// the final beam assembly cannot push Tr(VV^H) above p_max.
constexpr double kFeasibleSlack = 1e-12;
constexpr double kEigenFloor = 1e-12;
constexpr double kNullWeight = 1e-20;
}  // namespace

RegularizedBeamSystem::RegularizedBeamSystem(const ChannelMatrix& H, const RVector& d,
                                             const CVector& c) {
    if (d.size() != H.cols() || c.size() != H.cols())
        throw ConfigError("beam system: coefficient length does not match K");
    const CMatrix M = H * d.cast<cd>().asDiagonal() * H.adjoint();
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(M);
    if (solver.info() != Eigen::Success) throw SolverError("eigendecomposition failed");
    basis_ = solver.eigenvectors();
    eig_ = solver.eigenvalues();
    projected_ = basis_.adjoint() * H * c.asDiagonal();
    weights_ = projected_.cwiseAbs2();
    zero_ = c.cwiseAbs2().sum() == 0.0;

    // With K < L the targets h_k lie in the range of M, so their weight on the
    // null space is pure rounding. Dropping it keeps power(nu) stable as nu -> 0+.
    const double largest = eig_.size() ? eig_.maxCoeff() : 0.0;
    double null_weight = 0.0;
    for (Eigen::Index l = 0; l < eig_.size(); ++l)
        if (eig_(l) <= kEigenFloor * largest) null_weight += weights_.row(l).sum();
    if (largest > 0.0 && null_weight <= kNullWeight * weights_.sum())
        for (Eigen::Index l = 0; l < eig_.size(); ++l)
            if (eig_(l) <= kEigenFloor * largest) {
                eig_(l) = 0.0;
                projected_.row(l).setZero();
                weights_.row(l).setZero();
            }
}

double RegularizedBeamSystem::power(double nu) const {
    double acc = 0.0;
    for (Eigen::Index l = 0; l < eig_.size(); ++l) {
        const double denom = eig_(l) + nu;
        if (denom > 0.0) acc += weights_.row(l).sum() / (denom * denom);
    }
    return acc;
}

BeamformingMatrix RegularizedBeamSystem::beams(double nu) const {
    RVector inv(eig_.size());
    for (Eigen::Index l = 0; l < eig_.size(); ++l)
        inv(l) = eig_(l) + nu > 0.0 ? 1.0 / (eig_(l) + nu) : 0.0;
    return basis_ * (inv.cast<cd>().asDiagonal() * projected_);
}

bool RegularizedBeamSystem::invertible_at_zero() const {
    const double largest = eig_.maxCoeff();
    return largest > 0.0 && eig_.minCoeff() > kEigenFloor * largest;
}

NuSolution bisect_nu(const RegularizedBeamSystem& sys, double p_max, const BisectionSettings& s) {
    NuSolution out;
    const double budget = p_max * (1.0 - kFeasibleSlack);
    if (sys.all_zero()) return out;
    if (sys.invertible_at_zero()) {
        out.power = sys.power(0.0);
        if (out.power <= budget) return out;
    }

    double hi = 1.0;
    double p_hi = sys.power(hi);
    int doublings = 0;
    while (!(p_hi <= budget)) {
        hi *= 2.0;
        p_hi = sys.power(hi);
        if (++doublings > 2100 || !std::isfinite(hi))
            throw SolverError("nu bisection: no feasible upper bracket found");
    }
    const double hi0 = hi;
    double lo = 0.0;
    for (int step = 0; step < s.max_steps; ++step) {
        // converged on the power gap, or the bracket collapsed onto nu -> 0+
        if (p_hi >= p_max * (1.0 - s.tol) || hi <= 1e-15 * hi0) {
            out.nu = hi;
            out.power = p_hi;
            out.steps = step;
            return out;
        }
        const double mid = 0.5 * (lo + hi);
        const double p_mid = sys.power(mid);
        if (p_mid <= budget) {
            hi = mid;
            p_hi = p_mid;
        } else {
            lo = mid;
        }
    }
    std::ostringstream err;
    err << "nu bisection did not converge after " << s.max_steps << " steps: bracket [" << lo
        << ", " << hi << "], power(hi)=" << p_hi << ", p_max=" << p_max;
    throw SolverError(err.str());
}

}  // namespace rbf::detail
