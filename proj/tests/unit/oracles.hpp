// SPDX-License-Identifier: Apache-2.0
// Reference implementations written without the library's matrix code paths:
// plain loops over std::complex, full sorts, central differences.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "rbf/types.hpp"

namespace oracle {

using cd = std::complex<double>;

inline cd inner(const rbf::CMatrix& H, int k, const rbf::CMatrix& V, int j) {
    cd s = 0.0;
    for (int l = 0; l < H.rows(); ++l) s += std::conj(H(l, k)) * V(l, j);
    return s;
}

inline double sinr(const rbf::CMatrix& H, const rbf::CMatrix& V, double sigma2, int k) {
    double interference = sigma2;
    for (int j = 0; j < V.cols(); ++j)
        if (j != k) interference += std::norm(inner(H, k, V, j));
    return std::norm(inner(H, k, V, k)) / interference;
}

inline double wsr(const rbf::CMatrix& H, const rbf::CMatrix& V, double sigma2,
                  const std::vector<double>& w) {
    double r = 0.0;
    for (int k = 0; k < H.cols(); ++k) r += w[k] * std::log2(1.0 + sinr(H, V, sigma2, k));
    return r;
}

/// sum_k 2 u_k sqrt(w_k (1 + g_k) S_k) - u_k^2 (S_k + I_k)
inline double quadratic(const rbf::CMatrix& H, const rbf::CMatrix& V, const std::vector<double>& g,
                        const std::vector<double>& u, double sigma2, const std::vector<double>& w) {
    double r = 0.0;
    for (int k = 0; k < H.cols(); ++k) {
        const double S = std::norm(inner(H, k, V, k));
        double total = sigma2;
        for (int j = 0; j < V.cols(); ++j) total += std::norm(inner(H, k, V, j));
        r += 2.0 * u[k] * std::sqrt(w[k] * (1.0 + g[k]) * S) - u[k] * u[k] * total;
    }
    return r;
}

/// Central-difference gradient of f with respect to the real and imaginary
/// parts of every entry of V. Returns (df/dRe, df/dIm) packed as a complex.
inline rbf::CMatrix fd_gradient(const std::function<double(const rbf::CMatrix&)>& f,
                                const rbf::CMatrix& V, double h = 1e-6) {
    rbf::CMatrix out(V.rows(), V.cols());
    for (int j = 0; j < V.cols(); ++j)
        for (int l = 0; l < V.rows(); ++l) {
            rbf::CMatrix a = V, b = V;
            a(l, j) += h;
            b(l, j) -= h;
            const double dre = (f(a) - f(b)) / (2 * h);
            a = V;
            b = V;
            a(l, j) += cd(0, h);
            b(l, j) -= cd(0, h);
            const double dim = (f(a) - f(b)) / (2 * h);
            out(l, j) = cd(dre, dim);
        }
    return out;
}

/// Element of 1-based rank r after a full stable sort.
inline std::pair<double, std::size_t> sorted_rank(const std::vector<double>& v, std::size_t r) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    return {v[idx[r - 1]], idx[r - 1]};
}

inline rbf::CMatrix random_matrix(std::mt19937_64& rng, int rows, int cols, double var = 1.0) {
    std::normal_distribution<double> n(0.0, std::sqrt(var / 2.0));
    rbf::CMatrix M(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) M(i, j) = cd(n(rng), n(rng));
    return M;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace oracle
