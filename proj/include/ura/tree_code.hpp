#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "ura/bits.hpp"
#include "ura/rng.hpp"

namespace ura {

// Per-slot split of a B-bit payload into w_l information bits plus p_l
// parity bits, with sub-block length v_l = w_l + p_l.
struct ParityProfile {
    int B = 0;
    int L = 0;
    std::vector<int> p;  // parity bits per slot
    std::vector<int> v;  // sub-block length per slot
    std::vector<int> w;  // info bits per slot, w[l] = v[l] - p[l]

    ParityProfile() = default;

    ParityProfile(int payload_bits, std::vector<int> parity, std::vector<int> subblock) {
        B = payload_bits;
        p = std::move(parity);
        v = std::move(subblock);
        L = static_cast<int>(p.size());
        if (v.size() != p.size() || L == 0) throw std::invalid_argument("parity profile: p and v sizes differ");
        if (p[0] != 0) throw std::invalid_argument("parity profile: first slot must carry no parity");
        w.resize(static_cast<std::size_t>(L));
        long long wsum = 0;
        for (int l = 0; l < L; ++l) {
            if (v[l] < 1 || v[l] > 30) throw std::invalid_argument("parity profile: v out of range [1,30]");
            if (p[l] < 0 || p[l] > v[l]) throw std::invalid_argument("parity profile: p out of range [0,v]");
            w[l] = v[l] - p[l];
            wsum += w[l];
        }
        if (wsum != B) throw std::invalid_argument("parity profile: info bits do not sum to B");
    }

    // Uniform sub-block length (B + sum p) / L, the usual CCS layout.
    static ParityProfile uniform(int payload_bits, const std::vector<int>& parity) {
        long long psum = 0;
        for (int pl : parity) psum += pl;
        const int L = static_cast<int>(parity.size());
        if (L == 0) throw std::invalid_argument("parity profile: empty");
        long long total = payload_bits + psum;
        if (total % L != 0) throw std::invalid_argument("parity profile: B + sum(p) not divisible by L");
        std::vector<int> v(static_cast<std::size_t>(L), static_cast<int>(total / L));
        return ParityProfile(payload_bits, parity, v);
    }

    std::size_t codebook_size(int l) const { return std::size_t{1} << v[static_cast<std::size_t>(l)]; }
};

// Random GF(2) generator matrices G[j][l] of shape w_j x p_l for j < l.
// Rows are stored as packed parity words (bit p_l-1-t holds entry t) so a
// parity evaluation is a handful of XORs.
class ParityGenerators {
  public:
    static ParityGenerators generate(const ParityProfile& profile, std::uint64_t seed) {
        ParityGenerators g;
        g.profile_ = profile;
        const int L = profile.L;
        g.rows_.resize(static_cast<std::size_t>(L));
        Rng stream(seed, {0x9c5});
        for (int l = 1; l < L; ++l) {
            auto& per_j = g.rows_[static_cast<std::size_t>(l)];
            per_j.resize(static_cast<std::size_t>(l));
            for (int j = 0; j < l; ++j) {
                auto& rows = per_j[static_cast<std::size_t>(j)];
                rows.assign(static_cast<std::size_t>(profile.w[static_cast<std::size_t>(j)]), 0u);
                const int pl = profile.p[static_cast<std::size_t>(l)];
                for (auto& row : rows)
                    for (int t = 0; t < pl; ++t) row |= stream.next_bit() << (pl - 1 - t);
            }
        }
        return g;
    }

    // Explicit matrices, G[l][j] as rows of {0,1} entries (shape w_j x p_l for j < l).
    static ParityGenerators from_matrices(const ParityProfile& profile,
                                          const std::vector<std::vector<std::vector<BitVec>>>& G) {
        ParityGenerators g;
        g.profile_ = profile;
        if (static_cast<int>(G.size()) != profile.L)
            throw std::invalid_argument("parity generators: dimension mismatch");
        g.rows_.resize(static_cast<std::size_t>(profile.L));
        for (int l = 1; l < profile.L; ++l) {
            if (static_cast<int>(G[static_cast<std::size_t>(l)].size()) != l)
                throw std::invalid_argument("parity generators: dimension mismatch");
            auto& per_j = g.rows_[static_cast<std::size_t>(l)];
            per_j.resize(static_cast<std::size_t>(l));
            for (int j = 0; j < l; ++j) {
                const auto& mat = G[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)];
                if (static_cast<int>(mat.size()) != profile.w[static_cast<std::size_t>(j)])
                    throw std::invalid_argument("parity generators: dimension mismatch");
                auto& rows = per_j[static_cast<std::size_t>(j)];
                for (const BitVec& row : mat) {
                    if (static_cast<int>(row.size()) != profile.p[static_cast<std::size_t>(l)])
                        throw std::invalid_argument("parity generators: dimension mismatch");
                    rows.push_back(bits_to_index(row));
                }
            }
        }
        return g;
    }

    const ParityProfile& profile() const { return profile_; }

    // Packed rows of G_{j,l}; row r is the parity-word contribution of info bit r of slot j.
    std::span<const std::uint32_t> rows(int j, int l) const {
        return rows_[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)];
    }

  private:
    ParityProfile profile_;
    std::vector<std::vector<std::vector<std::uint32_t>>> rows_;
};

struct CodedMessage {
    std::vector<BitVec> subblocks;  // subblock l has length v_l, laid out info||parity
};

// One partial reconstruction in the decoding tree: the chosen fragment index
// per slot so far, plus the accumulated detector score.
struct ActivePath {
    std::uint32_t root = 0;            // slot-0 fragment index
    std::vector<std::uint32_t> frags;  // fragment index per decoded slot
    double score = 0.0;
};

// The set P_l of parity words reachable from the current active paths.
struct ParityPatternSet {
    int slot = 0;
    int p_bits = 0;                       // parity length at this slot
    std::vector<std::uint32_t> patterns;  // sorted, unique, each < 2^{p_bits}

    // Every parity word, i.e. no pruning at all.
    static ParityPatternSet saturated(int slot, int p_bits) {
        ParityPatternSet s;
        s.slot = slot;
        s.p_bits = p_bits;
        s.patterns.resize(std::size_t{1} << p_bits);
        for (std::size_t i = 0; i < s.patterns.size(); ++i) s.patterns[i] = static_cast<std::uint32_t>(i);
        return s;
    }
};

// A codebook column index with its detector confidence gamma.
struct ScoredFragment {
    std::uint32_t index = 0;
    double score = 0.0;
};

inline std::vector<BitVec> split_payload(const BitVec& payload, const ParityProfile& profile) {
    if (static_cast<int>(payload.size()) != profile.B)
        throw std::invalid_argument("split_payload: payload length does not match B");
    std::vector<BitVec> frags;
    frags.reserve(static_cast<std::size_t>(profile.L));
    std::size_t pos = 0;
    for (int l = 0; l < profile.L; ++l) {
        const auto wl = static_cast<std::size_t>(profile.w[static_cast<std::size_t>(l)]);
        frags.emplace_back(payload.begin() + static_cast<std::ptrdiff_t>(pos),
                           payload.begin() + static_cast<std::ptrdiff_t>(pos + wl));
        pos += wl;
    }
    return frags;
}

// Parity word for slot l from the packed info words of slots 0..l-1.
// info_words[j] = [w(j)]_2.  All arithmetic is XOR over GF(2).
inline std::uint32_t compute_parity(std::span<const std::uint32_t> info_words, const ParityGenerators& gens,
                                    int l) {
    const auto& profile = gens.profile();
    if (l < 1 || l >= profile.L || static_cast<int>(info_words.size()) < l)
        throw std::invalid_argument("compute_parity: bad slot index or missing prefix");
    std::uint32_t parity = 0;
    for (int j = 0; j < l; ++j) {
        const int wj = profile.w[static_cast<std::size_t>(j)];
        if (wj == 0) continue;
        const std::uint32_t word = info_words[static_cast<std::size_t>(j)];
        auto rows = gens.rows(j, l);
        for (int r = 0; r < wj; ++r)
            if ((word >> (wj - 1 - r)) & 1u) parity ^= rows[static_cast<std::size_t>(r)];
    }
    return parity;
}

// Bit-vector front end of compute_parity; validates fragment dimensions.
inline BitVec compute_parity_bits(const std::vector<BitVec>& info_frags, const ParityGenerators& gens, int l) {
    const auto& profile = gens.profile();
    if (l < 1 || l >= profile.L || static_cast<int>(info_frags.size()) < l)
        throw std::invalid_argument("compute_parity: bad slot index or missing prefix");
    std::vector<std::uint32_t> words(static_cast<std::size_t>(l));
    for (int j = 0; j < l; ++j) {
        if (static_cast<int>(info_frags[static_cast<std::size_t>(j)].size()) != profile.w[static_cast<std::size_t>(j)])
            throw std::invalid_argument("compute_parity: fragment length does not match generator dimensions");
        words[static_cast<std::size_t>(j)] = bits_to_index(info_frags[static_cast<std::size_t>(j)]);
    }
    return index_to_bits(compute_parity(words, gens, l), profile.p[static_cast<std::size_t>(l)]);
}

inline CodedMessage encode_outer(const BitVec& payload, const ParityGenerators& gens,
                                 const ParityProfile& profile) {
    auto info = split_payload(payload, profile);
    std::vector<std::uint32_t> words(static_cast<std::size_t>(profile.L));
    for (int l = 0; l < profile.L; ++l) words[static_cast<std::size_t>(l)] = bits_to_index(info[static_cast<std::size_t>(l)]);
    CodedMessage msg;
    msg.subblocks.resize(static_cast<std::size_t>(profile.L));
    msg.subblocks[0] = info[0];
    for (int l = 1; l < profile.L; ++l) {
        std::uint32_t parity = compute_parity({words.data(), static_cast<std::size_t>(l)}, gens, l);
        msg.subblocks[static_cast<std::size_t>(l)] =
            concat_bits(info[static_cast<std::size_t>(l)], index_to_bits(parity, profile.p[static_cast<std::size_t>(l)]));
    }
    return msg;
}

// Per-slot codebook column indices for a payload, index = [info||parity]_2.
inline std::vector<std::uint32_t> encode_indices(const BitVec& payload, const ParityGenerators& gens,
                                                 const ParityProfile& profile) {
    auto info = split_payload(payload, profile);
    std::vector<std::uint32_t> words(static_cast<std::size_t>(profile.L));
    for (int l = 0; l < profile.L; ++l) words[static_cast<std::size_t>(l)] = bits_to_index(info[static_cast<std::size_t>(l)]);
    std::vector<std::uint32_t> idx(static_cast<std::size_t>(profile.L));
    idx[0] = words[0];
    for (int l = 1; l < profile.L; ++l) {
        std::uint32_t parity = compute_parity({words.data(), static_cast<std::size_t>(l)}, gens, l);
        idx[static_cast<std::size_t>(l)] =
            (words[static_cast<std::size_t>(l)] << profile.p[static_cast<std::size_t>(l)]) | parity;
    }
    return idx;
}

namespace detail {

inline std::uint32_t path_info_word(const ParityProfile& profile, std::uint32_t frag_index, int l) {
    return frag_index >> profile.p[static_cast<std::size_t>(l)];
}

inline std::uint32_t path_parity(const ActivePath& path, const ParityGenerators& gens, int l) {
    const auto& profile = gens.profile();
    std::vector<std::uint32_t> words(static_cast<std::size_t>(l));
    for (int j = 0; j < l; ++j)
        words[static_cast<std::size_t>(j)] = path_info_word(profile, path.frags[static_cast<std::size_t>(j)], j);
    return compute_parity(words, gens, l);
}

}  // namespace detail

// Default bound on surviving paths per root before the root is declared failed.
inline constexpr std::size_t kDefaultPathCap = std::size_t{1} << 16;

// Extends every stage-(l-1) path with the slot-l fragments whose parity word
// matches the parity implied by the path's information prefix. Scores add the
// fragment's gamma. Roots whose path count would exceed `path_cap` are
// removed and reported through `overflowed_roots`.
inline std::vector<ActivePath> extend_paths(const std::vector<ActivePath>& paths,
                                            const std::vector<ScoredFragment>& fragments,
                                            const ParityGenerators& gens, int l,
                                            std::size_t path_cap = kDefaultPathCap,
                                            std::set<std::uint32_t>* overflowed_roots = nullptr) {
    const auto& profile = gens.profile();
    if (l < 1 || l >= profile.L) throw std::invalid_argument("extend_paths: bad slot index");
    const std::uint32_t parity_mask = (std::uint32_t{1} << profile.p[static_cast<std::size_t>(l)]) - 1u;

    // Bucket candidate fragments by their parity segment.
    std::unordered_map<std::uint32_t, std::vector<const ScoredFragment*>> by_parity;
    by_parity.reserve(fragments.size());
    for (const auto& frag : fragments) by_parity[frag.index & parity_mask].push_back(&frag);

    std::vector<ActivePath> extended;
    std::unordered_map<std::uint32_t, std::size_t> per_root;
    for (const auto& path : paths) {
        auto it = by_parity.find(detail::path_parity(path, gens, l));
        if (it == by_parity.end()) continue;
        for (const ScoredFragment* frag : it->second) {
            ActivePath next = path;
            next.frags.push_back(frag->index);
            next.score += frag->score;
            ++per_root[next.root];
            extended.push_back(std::move(next));
        }
    }

    // Enforce the per-root width cap.
    std::set<std::uint32_t> overflow;
    for (const auto& [root, count] : per_root)
        if (count > path_cap) overflow.insert(root);
    if (!overflow.empty())
        std::erase_if(extended, [&](const ActivePath& p) { return overflow.count(p.root) > 0; });
    if (overflowed_roots) overflowed_roots->insert(overflow.begin(), overflow.end());
    return extended;
}

// P_l: the deduplicated parity words reachable from the active paths.
inline ParityPatternSet permissible_parities(const std::vector<ActivePath>& paths, const ParityGenerators& gens,
                                             int l) {
    if (l < 1 || l >= gens.profile().L) throw std::invalid_argument("permissible_parities: bad slot index");
    std::set<std::uint32_t> unique;
    for (const auto& path : paths) unique.insert(detail::path_parity(path, gens, l));
    ParityPatternSet out;
    out.slot = l;
    out.p_bits = gens.profile().p[static_cast<std::size_t>(l)];
    out.patterns.assign(unique.begin(), unique.end());
    return out;
}

// Payload bits reconstructed from a full path (concatenated info segments).
inline BitVec path_payload(const ActivePath& path, const ParityProfile& profile) {
    BitVec payload;
    payload.reserve(static_cast<std::size_t>(profile.B));
    for (int l = 0; l < profile.L; ++l) {
        const int wl = profile.w[static_cast<std::size_t>(l)];
        if (wl == 0) continue;
        std::uint32_t word = detail::path_info_word(profile, path.frags[static_cast<std::size_t>(l)], l);
        BitVec bits = index_to_bits(word, wl);
        payload.insert(payload.end(), bits.begin(), bits.end());
    }
    return payload;
}

// Deduplicates full-length paths into payloads, ranks by descending score
// (ties by payload bits for determinism) and keeps at most K_a of them.
inline std::vector<BitVec> finalize_paths(const std::vector<ActivePath>& paths, const ParityProfile& profile,
                                          int ka) {
    std::map<BitVec, double> best;
    for (const auto& path : paths) {
        if (static_cast<int>(path.frags.size()) != profile.L)
            throw std::invalid_argument("finalize_paths: path does not span all slots");
        BitVec payload = path_payload(path, profile);
        auto [it, inserted] = best.emplace(std::move(payload), path.score);
        if (!inserted && path.score > it->second) it->second = path.score;
    }
    std::vector<std::pair<BitVec, double>> ranked(best.begin(), best.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (static_cast<int>(ranked.size()) > ka) ranked.resize(static_cast<std::size_t>(std::max(ka, 0)));
    std::vector<BitVec> out;
    out.reserve(ranked.size());
    for (auto& [payload, score] : ranked) out.push_back(std::move(payload));
    return out;
}

struct TreeDecodeResult {
    std::vector<BitVec> recovered;
    std::vector<std::size_t> stage_path_counts;  // surviving paths after each stage
};

// Baseline outer decoder: grows one tree per slot-0 fragment through every
// stage; a root yields a payload only when exactly one of its paths survives
// to the last stage. Results are ranked and truncated to K_a.
inline TreeDecodeResult tree_decode_baseline(const std::vector<std::vector<ScoredFragment>>& slot_fragments,
                                             const ParityGenerators& gens, const ParityProfile& profile, int ka,
                                             std::size_t path_cap = kDefaultPathCap) {
    if (static_cast<int>(slot_fragments.size()) != profile.L)
        throw std::invalid_argument("tree_decode_baseline: need one fragment list per slot");
    TreeDecodeResult result;
    std::vector<ActivePath> paths;
    for (const auto& frag : slot_fragments[0]) paths.push_back({frag.index, {frag.index}, frag.score});
    result.stage_path_counts.push_back(paths.size());

    std::set<std::uint32_t> failed_roots;
    for (int l = 1; l < profile.L; ++l) {
        paths = extend_paths(paths, slot_fragments[static_cast<std::size_t>(l)], gens, l, path_cap, &failed_roots);
        result.stage_path_counts.push_back(paths.size());
        if (paths.empty()) break;
    }

    // Keep only roots with a unique survivor; anything else is a decoding failure.
    std::unordered_map<std::uint32_t, std::size_t> per_root;
    for (const auto& path : paths) ++per_root[path.root];
    std::vector<ActivePath> valid;
    for (auto& path : paths)
        if (per_root[path.root] == 1 && failed_roots.count(path.root) == 0) valid.push_back(std::move(path));
    if (!valid.empty() && static_cast<int>(valid[0].frags.size()) == profile.L)
        result.recovered = finalize_paths(valid, profile, ka);
    return result;
}

}  // namespace ura
