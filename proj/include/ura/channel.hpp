#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ura/codebook.hpp"
#include "ura/rng.hpp"

namespace ura {

// Column indices chosen by the active users in one coherence block.
// A multiset: several users may land on the same column.
struct SlotTransmission {
    int slot = 0;
    std::vector<std::uint32_t> indices;
};

// Received n x M block and its sample covariance (1/M) Y Y^H.
struct SlotObservation {
    Eigen::MatrixXcd Y;
    Eigen::MatrixXcd sample_cov;
};

inline Eigen::MatrixXcd sample_covariance(const Eigen::MatrixXcd& Y) {
    if (Y.cols() < 1) throw std::invalid_argument("sample_covariance: need at least one antenna column");
    Eigen::MatrixXcd cov = Eigen::MatrixXcd::Zero(Y.rows(), Y.rows());
    cov.selfadjointView<Eigen::Lower>().rankUpdate(Y, 1.0 / static_cast<double>(Y.cols()));
    cov.triangularView<Eigen::StrictlyUpper>() = cov.adjoint();
    return cov;
}

// Block-fading MIMO synthesis: Y = sum_k a_{i_k} h_k^T + Z with
// h_k ~ CN(0, I_M) and noise entries CN(0, N0). Colliding users superpose
// physically, each with its own channel vector.
inline SlotObservation simulate_slot(const Codebook& codebook, const SlotTransmission& tx, int M, double N0,
                                     Rng& rng) {
    if (M < 1) throw std::invalid_argument("simulate_slot: M must be positive");
    if (N0 < 0.0) throw std::invalid_argument("simulate_slot: negative noise power");
    const int n = codebook.n;
    SlotObservation obs;
    obs.Y = Eigen::MatrixXcd::Zero(n, M);
    Eigen::VectorXcd h(M);
    for (std::uint32_t idx : tx.indices) {
        if (idx >= codebook.num_columns()) throw std::invalid_argument("simulate_slot: column index out of range");
        for (int m = 0; m < M; ++m) h(m) = rng.complex_normal();
        obs.Y.noalias() += codebook.columns.col(static_cast<Eigen::Index>(idx)) * h.transpose();
    }
    const double noise_scale = std::sqrt(N0);
    if (noise_scale > 0.0) {
        for (int m = 0; m < M; ++m)  // antenna-major draw order
            for (int t = 0; t < n; ++t) obs.Y(t, m) += noise_scale * rng.complex_normal();
    }
    obs.sample_cov = sample_covariance(obs.Y);
    return obs;
}

}  // namespace ura
