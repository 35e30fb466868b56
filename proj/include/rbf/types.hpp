// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rbf {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

/// L x K complex matrix; column k is the channel h_k of user k.
using ChannelMatrix = CMatrix;
/// L x K complex matrix; column k is the beamformer v_k of user k.
using BeamformingMatrix = CMatrix;

/// Invalid input or configuration (dimension mismatch, out-of-range value, bad file).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure inside a solver or training loop.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A required artifact (e.g. a trained schedule) is not present on disk.
class MissingArtifactError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ObjectiveMode { QuadraticOnly, FullLDT };

struct SystemConfig {
    int L = 4;
    int K = 4;
    double sigma2 = 1.0;
    double p_max = 10.0;
    std::vector<double> weights = std::vector<double>(4, 1.0);
    double gamma = 0.05;
    double sigma_h2 = 0.05;
    ObjectiveMode objective_mode = ObjectiveMode::FullLDT;

    /// Throws ConfigError when any bound is violated.
    void validate() const;

    /// Unit weights, otherwise default values.
    static SystemConfig make(int L, int K, double sigma2, double p_max);
};

/// Per-user quadratic-transform auxiliaries.
struct AuxiliaryState {
    RVector g;
    RVector u;
};

}  // namespace rbf
