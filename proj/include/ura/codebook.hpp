#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ura/bits.hpp"
#include "ura/rng.hpp"
#include "ura/tree_code.hpp"

namespace ura {

// Common per-slot codebook: n x 2^{v} complex matrix whose columns all have
// squared norm nP. Shared by every user and by the decoder.
struct Codebook {
    int slot = 0;
    int n = 0;
    double power = 0.0;
    Eigen::MatrixXcd columns;

    std::size_t num_columns() const { return static_cast<std::size_t>(columns.cols()); }
};

// Columns drawn uniformly from the complex sphere of radius sqrt(nP):
// i.i.d. CN(0,1) entries rescaled to the exact norm.
inline Codebook generate_codebook(std::uint64_t seed, int n, int v_bits, double power, int slot = 0) {
    if (n < 1 || v_bits < 1 || v_bits > 30 || power <= 0.0)
        throw std::invalid_argument("generate_codebook: bad dimensions or power");
    Codebook cb;
    cb.slot = slot;
    cb.n = n;
    cb.power = power;
    const std::size_t cols = std::size_t{1} << v_bits;
    cb.columns.resize(n, static_cast<Eigen::Index>(cols));
    Rng stream(seed, {0xc0de, static_cast<std::uint64_t>(slot)});
    const double target = std::sqrt(static_cast<double>(n) * power);
    for (Eigen::Index j = 0; j < cb.columns.cols(); ++j) {
        for (Eigen::Index i = 0; i < n; ++i) cb.columns(i, j) = stream.complex_normal();
        cb.columns.col(j) *= target / cb.columns.col(j).norm();
    }
    return cb;
}

// [v(l)]_2 with the first bit most significant.
inline std::uint32_t subblock_index(const BitVec& subblock) { return bits_to_index(subblock); }

// The restricted column index set S_l the detector is allowed to search.
struct SupportSet {
    int slot = 0;
    std::vector<std::uint32_t> indices;  // strictly increasing

    std::size_t size() const { return indices.size(); }
};

inline SupportSet full_support(int v_bits, int slot = 0) {
    SupportSet s;
    s.slot = slot;
    s.indices.resize(std::size_t{1} << v_bits);
    for (std::size_t i = 0; i < s.indices.size(); ++i) s.indices[i] = static_cast<std::uint32_t>(i);
    return s;
}

// S_l = { [w||p]_2 : w in {0,1}^{w_bits}, p in patterns }, so |S_l| is
// exactly 2^{w_bits} * |patterns|.
inline SupportSet admissible_support(const ParityPatternSet& patterns, int w_bits) {
    SupportSet s;
    s.slot = patterns.slot;
    const std::uint32_t info_count = std::uint32_t{1} << w_bits;
    s.indices.reserve(static_cast<std::size_t>(info_count) * patterns.patterns.size());
    // patterns are sorted, so info-major emission keeps indices increasing
    for (std::uint32_t w = 0; w < info_count; ++w)
        for (std::uint32_t pat : patterns.patterns) s.indices.push_back((w << patterns.p_bits) | pat);
    return s;
}

}  // namespace ura
