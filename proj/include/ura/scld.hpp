#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ura/activity_detection.hpp"
#include "ura/channel.hpp"
#include "ura/codebook.hpp"
#include "ura/tree_code.hpp"

namespace ura {

enum class DecoderMode { baseline, scld };

struct DecodeOptions {
    int ka = 1;
    ADConfig ad;
    double N0 = 1.0;
    std::uint64_t shuffle_seed_base = 0;  // per-slot CD shuffle streams derive from this; mode-independent
    bool saturate_pruning = false;        // scld only: keep every parity pattern (no codebook pruning)
    bool collect_paths = false;           // scld only: record the active path list after each stage
    std::size_t path_cap = kDefaultPathCap;
};

struct DecodeResult {
    std::vector<BitVec> recovered;
    std::vector<std::size_t> support_sizes;               // |S_l| searched per slot
    std::vector<std::size_t> pattern_counts;              // |P_l| per slot (1 at slot 0: empty parity)
    std::vector<std::size_t> path_list_sizes;             // active paths after each stage
    std::vector<std::vector<ScoredFragment>> slot_fragments;  // detector output per slot
    std::vector<std::vector<ActivePath>> stage_paths;         // only when collect_paths is set
    std::vector<double> slot_seconds;
    double total_seconds = 0.0;
    int died_at_stage = -1;  // scld: first stage with no surviving path, -1 if none

    std::size_t support_sum() const {
        std::size_t sum = 0;
        for (std::size_t s : support_sizes) sum += s;
        return sum;
    }
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

inline void check_decode_inputs(const std::vector<SlotObservation>& observations,
                                const std::vector<Codebook>& codebooks, const ParityProfile& profile) {
    if (static_cast<int>(observations.size()) != profile.L || static_cast<int>(codebooks.size()) != profile.L)
        throw std::invalid_argument("decode: need one observation and codebook per slot");
    for (int l = 0; l < profile.L; ++l)
        if (codebooks[static_cast<std::size_t>(l)].num_columns() != profile.codebook_size(l))
            throw std::invalid_argument("decode: codebook size does not match profile");
}

}  // namespace detail

// Original two-stage decoder: every slot is detected independently over the
// full codebook, then the tree decoder disambiguates.
inline DecodeResult decode_baseline(const std::vector<SlotObservation>& observations,
                                    const std::vector<Codebook>& codebooks, const ParityGenerators& gens,
                                    const ParityProfile& profile, const DecodeOptions& opts) {
    detail::check_decode_inputs(observations, codebooks, profile);
    DecodeResult result;
    const auto t_total = detail::Clock::now();
    for (int l = 0; l < profile.L; ++l) {
        const auto ls = static_cast<std::size_t>(l);
        const auto t_slot = detail::Clock::now();
        SupportSet support = full_support(profile.v[ls], l);
        ADResult ad = coordinate_descent(observations[ls].sample_cov, codebooks[ls], support, opts.ad, opts.N0,
                                         mix_seed(opts.shuffle_seed_base, {static_cast<std::uint64_t>(l)}));
        result.slot_fragments.push_back(select_fragments(ad.estimate, opts.ka, opts.ad.delta));
        result.slot_seconds.push_back(detail::seconds_since(t_slot));
        result.support_sizes.push_back(support.size());
        result.pattern_counts.push_back(std::size_t{1} << profile.p[ls]);
    }
    TreeDecodeResult tree = tree_decode_baseline(result.slot_fragments, gens, profile, opts.ka, opts.path_cap);
    result.recovered = std::move(tree.recovered);
    result.path_list_sizes = std::move(tree.stage_path_counts);
    result.total_seconds = detail::seconds_since(t_total);
    return result;
}

// Successive cancellation list decoder: after each slot the active tree paths
// define the permissible parity patterns for the next slot, and detection is
// restricted to the correspondingly pruned column set S_l.
inline DecodeResult decode_scld(const std::vector<SlotObservation>& observations,
                                const std::vector<Codebook>& codebooks, const ParityGenerators& gens,
                                const ParityProfile& profile, const DecodeOptions& opts) {
    detail::check_decode_inputs(observations, codebooks, profile);
    DecodeResult result;
    const auto t_total = detail::Clock::now();

    // Slot 0 has no parity, so detection always runs over the full codebook.
    std::vector<ActivePath> paths;
    {
        const auto t_slot = detail::Clock::now();
        SupportSet support = full_support(profile.v[0], 0);
        ADResult ad = coordinate_descent(observations[0].sample_cov, codebooks[0], support, opts.ad, opts.N0,
                                         mix_seed(opts.shuffle_seed_base, {0}));
        auto fragments = select_fragments(ad.estimate, opts.ka, opts.ad.delta);
        for (const auto& frag : fragments) paths.push_back({frag.index, {frag.index}, frag.score});
        result.slot_fragments.push_back(std::move(fragments));
        result.slot_seconds.push_back(detail::seconds_since(t_slot));
        result.support_sizes.push_back(support.size());
        result.pattern_counts.push_back(1);
        result.path_list_sizes.push_back(paths.size());
        if (opts.collect_paths) result.stage_paths.push_back(paths);
    }
    if (paths.empty()) result.died_at_stage = 0;

    for (int l = 1; l < profile.L && result.died_at_stage < 0; ++l) {
        const auto ls = static_cast<std::size_t>(l);
        const auto t_slot = detail::Clock::now();
        ParityPatternSet patterns = opts.saturate_pruning ? ParityPatternSet::saturated(l, profile.p[ls])
                                                          : permissible_parities(paths, gens, l);
        SupportSet support = admissible_support(patterns, profile.w[ls]);
        ADResult ad = coordinate_descent(observations[ls].sample_cov, codebooks[ls], support, opts.ad, opts.N0,
                                         mix_seed(opts.shuffle_seed_base, {static_cast<std::uint64_t>(l)}));
        auto fragments = select_fragments(ad.estimate, opts.ka, opts.ad.delta);
        paths = extend_paths(paths, fragments, gens, l, opts.path_cap);
        result.slot_fragments.push_back(std::move(fragments));
        result.slot_seconds.push_back(detail::seconds_since(t_slot));
        result.support_sizes.push_back(support.size());
        result.pattern_counts.push_back(patterns.patterns.size());
        result.path_list_sizes.push_back(paths.size());
        if (opts.collect_paths) result.stage_paths.push_back(paths);
        if (paths.empty()) result.died_at_stage = l;  // no admissible continuation; skip remaining slots
    }

    if (result.died_at_stage < 0) result.recovered = finalize_paths(paths, profile, opts.ka);
    result.total_seconds = detail::seconds_since(t_total);
    return result;
}

inline DecodeResult decode(DecoderMode mode, const std::vector<SlotObservation>& observations,
                           const std::vector<Codebook>& codebooks, const ParityGenerators& gens,
                           const ParityProfile& profile, const DecodeOptions& opts) {
    return mode == DecoderMode::baseline ? decode_baseline(observations, codebooks, gens, profile, opts)
                                         : decode_scld(observations, codebooks, gens, profile, opts);
}

}  // namespace ura
