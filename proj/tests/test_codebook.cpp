#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "ura/codebook.hpp"

using namespace ura;

TEST_CASE("generate_codebook") {
    SECTION("column norms hit nP exactly") {
        auto cb = generate_codebook(42, 16, 6, 0.5);
        REQUIRE(cb.columns.rows() == 16);
        REQUIRE(cb.columns.cols() == 64);
        const double target = 16 * 0.5;
        for (Eigen::Index j = 0; j < cb.columns.cols(); ++j)
            REQUIRE(cb.columns.col(j).squaredNorm() == Catch::Approx(target).epsilon(1e-12));
    }

    SECTION("full-scale dimensions") {
        auto cb = generate_codebook(1, 100, 12, 0.03);
        REQUIRE(cb.columns.rows() == 100);
        REQUIRE(cb.columns.cols() == 4096);
        REQUIRE(cb.columns.col(0).squaredNorm() == Catch::Approx(100 * 0.03).epsilon(1e-12));
        REQUIRE(cb.columns.col(4095).squaredNorm() == Catch::Approx(100 * 0.03).epsilon(1e-12));
    }

    SECTION("reproducible from seed, distinct across seeds and slots") {
        auto a = generate_codebook(7, 8, 4, 1.0, 2);
        auto b = generate_codebook(7, 8, 4, 1.0, 2);
        REQUIRE(a.columns == b.columns);
        auto c = generate_codebook(8, 8, 4, 1.0, 2);
        auto d = generate_codebook(7, 8, 4, 1.0, 3);
        REQUIRE(a.columns != c.columns);
        REQUIRE(a.columns != d.columns);
        // columns of independent draws are not aligned
        for (Eigen::Index j = 0; j < a.columns.cols(); ++j) {
            const double corr = std::abs(a.columns.col(j).dot(c.columns.col(j))) /
                                (a.columns.col(j).norm() * c.columns.col(j).norm());
            REQUIRE(corr < 1.0);
        }
    }

    SECTION("rejects bad arguments") {
        REQUIRE_THROWS_AS(generate_codebook(1, 0, 4, 1.0), std::invalid_argument);
        REQUIRE_THROWS_AS(generate_codebook(1, 8, 0, 1.0), std::invalid_argument);
        REQUIRE_THROWS_AS(generate_codebook(1, 8, 4, 0.0), std::invalid_argument);
    }
}

TEST_CASE("subblock_index") {
    REQUIRE(subblock_index({0, 0, 0}) == 0);
    REQUIRE(subblock_index({1, 0, 1}) == 5);

    SECTION("bijective over 12-bit sub-blocks") {
        std::set<std::uint32_t> seen;
        for (std::uint32_t i = 0; i < 4096; ++i) seen.insert(subblock_index(index_to_bits(i, 12)));
        REQUIRE(seen.size() == 4096);
        REQUIRE(*seen.begin() == 0);
        REQUIRE(*seen.rbegin() == 4095);
    }
}

TEST_CASE("admissible_support") {
    SECTION("cardinality is 2^w * |P|") {
        ParityPatternSet pats;
        pats.slot = 1;
        pats.p_bits = 4;
        pats.patterns = {1, 3, 7, 9, 14};
        auto s = admissible_support(pats, 3);
        REQUIRE(s.size() == 40);
        REQUIRE(std::is_sorted(s.indices.begin(), s.indices.end()));
        REQUIRE(std::adjacent_find(s.indices.begin(), s.indices.end()) == s.indices.end());
    }

    SECTION("saturated set covers the whole codebook") {
        auto pats = ParityPatternSet::saturated(2, 3);
        auto s = admissible_support(pats, 3);
        REQUIRE(s.size() == 64);
        for (std::uint32_t i = 0; i < 64; ++i) REQUIRE(s.indices[i] == i);
    }

    SECTION("zero info bits keeps just the patterns") {
        ParityPatternSet pats;
        pats.slot = 3;
        pats.p_bits = 6;
        pats.patterns = {5, 17, 33};
        auto s = admissible_support(pats, 0);
        REQUIRE(s.indices == std::vector<std::uint32_t>{5, 17, 33});
    }

    SECTION("monotone in the pattern set") {
        ParityPatternSet small, large;
        small.p_bits = large.p_bits = 4;
        small.patterns = {2, 8};
        large.patterns = {2, 5, 8, 12};
        auto ss = admissible_support(small, 2);
        auto sl = admissible_support(large, 2);
        REQUIRE(std::includes(sl.indices.begin(), sl.indices.end(), ss.indices.begin(), ss.indices.end()));
    }

    SECTION("contains the true sub-block index when its pattern is present") {
        auto profile = ParityProfile::uniform(12, {0, 3, 3, 6});
        auto gens = ParityGenerators::generate(profile, 4);
        Rng rng(5);
        for (int rep = 0; rep < 50; ++rep) {
            BitVec payload(12);
            for (auto& b : payload) b = static_cast<std::uint8_t>(rng.next_bit());
            auto idx = encode_indices(payload, gens, profile);
            for (int l = 1; l < profile.L; ++l) {
                ParityPatternSet pats;
                pats.slot = l;
                pats.p_bits = profile.p[l];
                const std::uint32_t true_pat = idx[l] & ((1u << profile.p[l]) - 1u);
                pats.patterns = {true_pat};
                // sprinkle extra patterns around the true one
                while (pats.patterns.size() < 3) {
                    auto extra = static_cast<std::uint32_t>(rng.bounded(1u << profile.p[l]));
                    if (std::find(pats.patterns.begin(), pats.patterns.end(), extra) == pats.patterns.end())
                        pats.patterns.push_back(extra);
                }
                std::sort(pats.patterns.begin(), pats.patterns.end());
                auto s = admissible_support(pats, profile.w[l]);
                REQUIRE(std::binary_search(s.indices.begin(), s.indices.end(), idx[l]));
            }
        }
    }
}
