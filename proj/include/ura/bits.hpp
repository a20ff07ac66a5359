#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace ura {

// A binary vector with one byte per bit (values 0/1). Small enough at the
// payload sizes involved (B <= a few hundred) that packing is not worth it.
using BitVec = std::vector<std::uint8_t>;

// Integer whose radix-2 representation is `bits`, first bit most significant.
// With sub-blocks laid out as info||parity this makes the column index
// decompose as index = [info]_2 * 2^p + [parity]_2.
inline std::uint32_t bits_to_index(std::span<const std::uint8_t> bits) {
    if (bits.size() > 31) throw std::invalid_argument("bits_to_index: more than 31 bits");
    std::uint32_t idx = 0;
    for (std::uint8_t b : bits) idx = (idx << 1) | (b & 1u);
    return idx;
}

// Inverse of bits_to_index: `len`-bit MSB-first expansion of `idx`.
inline BitVec index_to_bits(std::uint32_t idx, int len) {
    BitVec bits(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) bits[static_cast<std::size_t>(i)] = (idx >> (len - 1 - i)) & 1u;
    return bits;
}

inline BitVec concat_bits(const BitVec& a, const BitVec& b) {
    BitVec out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

}  // namespace ura
