#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ura/experiment.hpp"

using namespace ura;

namespace {

// Small, fast configuration: L=4 slots of 6 bits, n=16, B=12.
ExperimentConfig micro_config() {
    ExperimentConfig c;
    c.B = 12;
    c.L = 4;
    c.n = 16;
    c.parity_profile = {0, 3, 3, 6};
    c.m = {64};
    c.ka = {2};
    c.delta = 2;
    c.trials = 8;
    c.seed = 42;
    c.ebn0_db = 10.0 * std::log10(16.0 / 3.0);  // P = 1 at B=12, N=64
    return c;
}

}  // namespace

TEST_CASE("pupe") {
    BitVec a{0, 1}, b{1, 0}, c{1, 1};
    REQUIRE(pupe({a, b}, {a, b}) == 0.0);
    REQUIRE(pupe({a, b, c, {0, 0}}, {a, b, c}) == 0.25);

    SECTION("duplicate payloads count per user") {
        REQUIRE(pupe({a, a}, {a}) == 0.0);
        REQUIRE(pupe({a, a}, {b}) == 1.0);
    }

    SECTION("no users is rejected") { REQUIRE_THROWS_AS(pupe({}, {}), std::invalid_argument); }
}

TEST_CASE("wilson_interval") {
    auto [lo0, hi0] = wilson_interval(0, 100);
    REQUIRE(lo0 == 0.0);
    REQUIRE(hi0 > 0.0);
    REQUIRE(hi0 < 0.05);

    auto [lo, hi] = wilson_interval(50, 100);
    REQUIRE(lo < 0.5);
    REQUIRE(hi > 0.5);
    REQUIRE(hi - lo < 0.2);

    auto [loa, hia] = wilson_interval(100, 100);
    REQUIRE(hia == 1.0);
    REQUIRE(loa > 0.95);
}

TEST_CASE("config defaults and derived quantities") {
    ExperimentConfig c;
    REQUIRE(c.total_channel_uses() == 3200);
    REQUIRE(c.power() == Catch::Approx(0.03).epsilon(1e-12));  // 96 / 3200 at 0 dB
    auto profile = c.profile();
    REQUIRE(profile.L == 32);
    for (int l = 0; l < 32; ++l) REQUIRE(profile.v[l] == 12);
    c.validate();
}

TEST_CASE("config parsing") {
    SECTION("round trips through json") {
        auto c = micro_config();
        auto j = nlohmann::json::parse(c.to_json().dump());
        auto parsed = ExperimentConfig::from_json(j);
        REQUIRE(parsed.to_json() == c.to_json());
    }

    SECTION("unknown keys are a hard error") {
        nlohmann::json j = {{"B", 12}, {"bogus_knob", 3}};
        REQUIRE_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
    }

    SECTION("type errors are rejected") {
        REQUIRE_THROWS_AS(ExperimentConfig::from_json({{"trials", "many"}}), ConfigError);
        REQUIRE_THROWS_AS(ExperimentConfig::from_json({{"M", 3.5}}), ConfigError);
        REQUIRE_THROWS_AS(ExperimentConfig::from_json({{"modes", "baseline"}}), ConfigError);
    }

    SECTION("invalid values are rejected") {
        REQUIRE_THROWS_AS(ExperimentConfig::from_json({{"trials", 0}}), ConfigError);
        REQUIRE_THROWS_AS(ExperimentConfig::from_json({{"modes", {"turbo"}}}), ConfigError);
        REQUIRE_THROWS_AS(ExperimentConfig::from_json({{"coordinate_order", "sorted"}}), ConfigError);
        // parity profile incompatible with B and L
        REQUIRE_THROWS_AS(ExperimentConfig::from_json({{"B", 95}}), ConfigError);
        REQUIRE_THROWS_AS(ExperimentConfig::from_json({{"parity_profile", {1, 9}}}), ConfigError);
    }

    SECTION("scalar M and K_a are accepted") {
        auto c = ExperimentConfig::from_json({{"M", 25}, {"K_a", 10}});
        REQUIRE(c.m == std::vector<int>{25});
        REQUIRE(c.ka == std::vector<int>{10});
    }

    SECTION("from_file") {
        const auto path = std::filesystem::temp_directory_path() / "ura_test_config.json";
        {
            std::ofstream f(path);
            f << micro_config().to_json().dump(2);
        }
        auto c = ExperimentConfig::from_file(path);
        REQUIRE(c.B == 12);
        REQUIRE(c.seed == 42);
        std::filesystem::remove(path);
        REQUIRE_THROWS_AS(ExperimentConfig::from_file(path), ConfigError);
    }
}

TEST_CASE("run_trial") {
    auto config = micro_config();
    auto ctx = ExperimentContext::create(config);

    SECTION("bit-identical given (seed, trial index)") {
        auto a = run_trial(config, ctx, 2, 64, 3);
        auto b = run_trial(config, ctx, 2, 64, 3);
        REQUIRE(a.sent == b.sent);
        REQUIRE(a.observation_digest == b.observation_digest);
        for (const auto& [mode, outcome] : a.outcomes) {
            REQUIRE(outcome.missed == b.outcomes.at(mode).missed);
            REQUIRE(outcome.decode.recovered == b.outcomes.at(mode).decode.recovered);
            REQUIRE(outcome.support_sum == b.outcomes.at(mode).support_sum);
        }
        auto c = run_trial(config, ctx, 2, 64, 4);
        REQUIRE(a.observation_digest != c.observation_digest);
    }

    SECTION("observations do not depend on the mode list") {
        auto base_only = config;
        base_only.modes = {"baseline"};
        auto scld_only = config;
        scld_only.modes = {"scld"};
        auto a = run_trial(base_only, ctx, 2, 64, 5);
        auto b = run_trial(scld_only, ctx, 2, 64, 5);
        REQUIRE(a.observation_digest == b.observation_digest);
        REQUIRE(a.outcomes.count(DecoderMode::baseline) == 1);
        REQUIRE(b.outcomes.count(DecoderMode::scld) == 1);
    }

    SECTION("single user at the noiseless limit is always recovered") {
        for (int trial = 0; trial < 10; ++trial) {
            auto result = run_trial(config, ctx, 1, 4096, trial);
            REQUIRE(result.outcomes.at(DecoderMode::baseline).missed == 0);
            REQUIRE(result.outcomes.at(DecoderMode::scld).missed == 0);
        }
    }

    SECTION("recovered set never exceeds K_a") {
        for (int trial = 0; trial < 10; ++trial) {
            auto result = run_trial(config, ctx, 2, 16, trial);
            for (const auto& [mode, outcome] : result.outcomes) {
                REQUIRE(outcome.decode.recovered.size() <= 2);
                REQUIRE(outcome.missed >= 0);
                REQUIRE(outcome.missed <= 2);
            }
        }
    }
}

TEST_CASE("run_experiment") {
    auto config = micro_config();

    SECTION("report shape and reproducibility modulo timing") {
        auto r1 = run_experiment(config, 2);
        auto r2 = run_experiment(config, 1);  // different pool size must not matter
        REQUIRE(r1.cells.size() == 1);
        REQUIRE(r1.cells[0].modes.size() == 2);
        for (const auto& mode : r1.cells[0].modes) {
            REQUIRE(mode.pupe >= 0.0);
            REQUIRE(mode.pupe <= 1.0);
            REQUIRE(mode.ci_lo <= mode.pupe);
            REQUIRE(mode.ci_hi >= mode.pupe);
        }
        REQUIRE(r1.cells[0].modes[1].runtime_ratio.has_value());

        auto j1 = report_to_json(r1);
        auto j2 = report_to_json(r2);
        strip_timing_fields(j1);
        strip_timing_fields(j2);
        REQUIRE(j1.dump() == j2.dump());
    }

    SECTION("csv layout") {
        auto report = run_experiment(config, 2);
        auto csv = report_to_csv(report);
        std::istringstream lines(csv);
        std::string header;
        std::getline(lines, header);
        REQUIRE(header ==
                "ka,m,mode,trials,pupe,pupe_ci_lo,pupe_ci_hi,mean_decode_seconds,mean_support_sum,runtime_ratio");
        std::string row;
        int rows = 0;
        while (std::getline(lines, row))
            if (!row.empty()) ++rows;
        REQUIRE(rows == 2);  // one per (cell, mode)
        REQUIRE(csv.find("baseline") != std::string::npos);
        REQUIRE(csv.find("scld") != std::string::npos);
    }

    SECTION("write_report emits both files") {
        const auto dir = std::filesystem::temp_directory_path() / "ura_report_test";
        std::filesystem::remove_all(dir);
        auto report = run_experiment(config, 2);
        write_report(report, dir);
        REQUIRE(std::filesystem::exists(dir / "report.json"));
        REQUIRE(std::filesystem::exists(dir / "report.csv"));
        std::ifstream f(dir / "report.json");
        nlohmann::json j = nlohmann::json::parse(f);
        REQUIRE(j["config"]["B"] == 12);
        REQUIRE(j["results"].size() == 2);
        std::filesystem::remove_all(dir);
    }

    SECTION("more antennas do not hurt, within the interval width") {
        auto sweep = micro_config();
        sweep.m = {32, 64};
        sweep.ka = {2};
        sweep.trials = 200;
        sweep.modes = {"scld"};
        auto report = run_experiment(sweep, 2);
        REQUIRE(report.cells.size() == 2);
        const auto& low_m = report.cells[0].modes[0];
        const auto& high_m = report.cells[1].modes[0];
        REQUIRE(report.cells[0].m == 32);
        REQUIRE(report.cells[1].m == 64);
        const double width = low_m.ci_hi - low_m.ci_lo;
        REQUIRE(high_m.pupe <= low_m.pupe + width);
    }
}
