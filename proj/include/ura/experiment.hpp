#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "ura/channel.hpp"
#include "ura/errors.hpp"
#include "ura/scld.hpp"

namespace ura {

namespace stream_tag {
// Labels for deriving independent random sub-streams from the master seed.
inline constexpr std::uint64_t codebook = 1;
inline constexpr std::uint64_t generators = 2;
inline constexpr std::uint64_t payload = 3;
inline constexpr std::uint64_t slot_sim = 4;
inline constexpr std::uint64_t shuffle = 5;
}  // namespace stream_tag

inline const std::vector<int>& default_parity_profile() {
    // (0, 9, 9, ..., 9, 12, 12, 12): 28 nines, uniform 12-bit sub-blocks for B = 96, L = 32
    static const std::vector<int> profile = [] {
        std::vector<int> p(32, 9);
        p[0] = 0;
        p[29] = p[30] = p[31] = 12;
        return p;
    }();
    return profile;
}

struct ExperimentConfig {
    int B = 96;
    int L = 32;
    int n = 100;
    std::vector<int> m{50};
    std::vector<int> ka{25};
    double ebn0_db = 0.0;
    std::vector<int> parity_profile = default_parity_profile();
    int delta = 5;
    int max_passes = 10;
    double rel_tol = 1e-6;
    std::string coordinate_order = "shuffled";
    std::vector<std::string> modes{"baseline", "scld"};
    int trials = 100;
    std::uint64_t seed = 1;
    std::optional<std::int64_t> k_tot;  // population size annotation; no operational role
    double max_numerical_failure_rate = 0.0;

    static constexpr double N0 = 1.0;

    int total_channel_uses() const { return n * L; }

    // From Eb/N0 = N P / (B N0) with N0 = 1.
    double power() const { return static_cast<double>(B) * std::pow(10.0, ebn0_db / 10.0) / total_channel_uses(); }

    ParityProfile profile() const { return ParityProfile::uniform(B, parity_profile); }

    ADConfig ad_config() const {
        ADConfig ad;
        ad.max_passes = max_passes;
        ad.rel_tol = rel_tol;
        ad.delta = delta;
        ad.order = coordinate_order == "fixed" ? ADConfig::Order::fixed : ADConfig::Order::shuffled;
        return ad;
    }

    std::vector<DecoderMode> decoder_modes() const {
        std::vector<DecoderMode> out;
        for (const auto& m : modes) out.push_back(m == "baseline" ? DecoderMode::baseline : DecoderMode::scld);
        return out;
    }

    void validate() const {
        auto require = [](bool ok, const std::string& msg) {
            if (!ok) throw ConfigError(msg);
        };
        require(B >= 1, "config: B must be >= 1");
        require(L >= 1, "config: L must be >= 1");
        require(n >= 1, "config: n must be >= 1");
        require(!m.empty(), "config: M list must be non-empty");
        for (int v : m) require(v >= 1, "config: M entries must be >= 1");
        require(!ka.empty(), "config: K_a list must be non-empty");
        for (int v : ka) require(v >= 1, "config: K_a entries must be >= 1");
        require(delta >= 0, "config: delta must be >= 0");
        require(max_passes >= 1, "config: max_passes must be >= 1");
        require(rel_tol >= 0.0, "config: rel_tol must be >= 0");
        require(coordinate_order == "fixed" || coordinate_order == "shuffled",
                "config: coordinate_order must be 'fixed' or 'shuffled'");
        require(!modes.empty(), "config: modes must be non-empty");
        for (const auto& mode : modes)
            require(mode == "baseline" || mode == "scld", "config: unknown mode '" + mode + "'");
        require(std::set<std::string>(modes.begin(), modes.end()).size() == modes.size(),
                "config: duplicate mode entries");
        require(trials >= 1, "config: trials must be >= 1");
        require(max_numerical_failure_rate >= 0.0 && max_numerical_failure_rate <= 1.0,
                "config: max_numerical_failure_rate must lie in [0,1]");
        try {
            (void)profile();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    }

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_file(const std::filesystem::path& path);
    nlohmann::ordered_json to_json() const;
};

namespace detail {

inline std::vector<int> int_or_list(const nlohmann::json& v, const std::string& key) {
    std::vector<int> out;
    if (v.is_number_integer()) {
        out.push_back(v.get<int>());
    } else if (v.is_array()) {
        for (const auto& e : v) {
            if (!e.is_number_integer()) throw ConfigError("config: '" + key + "' entries must be integers");
            out.push_back(e.get<int>());
        }
    } else {
        throw ConfigError("config: '" + key + "' must be an integer or integer list");
    }
    return out;
}

inline int require_int(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number_integer()) throw ConfigError("config: '" + key + "' must be an integer");
    return v.get<int>();
}

inline double require_number(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("config: '" + key + "' must be a number");
    return v.get<double>();
}

}  // namespace detail

inline ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: top-level document must be an object");
    static const std::set<std::string> known = {
        "B",     "L",           "n",     "M",       "K_a",    "EbN0_dB",          "parity_profile",
        "delta", "max_passes", "rel_tol", "coordinate_order", "modes", "trials", "seed",
        "K_tot", "max_numerical_failure_rate"};
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) throw ConfigError("config: unknown key '" + key + "'");

    ExperimentConfig c;
    if (j.contains("B")) c.B = detail::require_int(j["B"], "B");
    if (j.contains("L")) c.L = detail::require_int(j["L"], "L");
    if (j.contains("n")) c.n = detail::require_int(j["n"], "n");
    if (j.contains("M")) c.m = detail::int_or_list(j["M"], "M");
    if (j.contains("K_a")) c.ka = detail::int_or_list(j["K_a"], "K_a");
    if (j.contains("EbN0_dB")) c.ebn0_db = detail::require_number(j["EbN0_dB"], "EbN0_dB");
    if (j.contains("parity_profile")) c.parity_profile = detail::int_or_list(j["parity_profile"], "parity_profile");
    if (j.contains("delta")) c.delta = detail::require_int(j["delta"], "delta");
    if (j.contains("max_passes")) c.max_passes = detail::require_int(j["max_passes"], "max_passes");
    if (j.contains("rel_tol")) c.rel_tol = detail::require_number(j["rel_tol"], "rel_tol");
    if (j.contains("coordinate_order")) {
        if (!j["coordinate_order"].is_string()) throw ConfigError("config: 'coordinate_order' must be a string");
        c.coordinate_order = j["coordinate_order"].get<std::string>();
    }
    if (j.contains("modes")) {
        if (!j["modes"].is_array()) throw ConfigError("config: 'modes' must be a list of strings");
        c.modes.clear();
        for (const auto& e : j["modes"]) {
            if (!e.is_string()) throw ConfigError("config: 'modes' must be a list of strings");
            c.modes.push_back(e.get<std::string>());
        }
    }
    if (j.contains("trials")) c.trials = detail::require_int(j["trials"], "trials");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer()) throw ConfigError("config: 'seed' must be an integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("K_tot")) c.k_tot = static_cast<std::int64_t>(detail::require_int(j["K_tot"], "K_tot"));
    if (j.contains("max_numerical_failure_rate"))
        c.max_numerical_failure_rate = detail::require_number(j["max_numerical_failure_rate"],
                                                              "max_numerical_failure_rate");
    c.validate();
    return c;
}

inline ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: parse error: ") + e.what());
    }
    return from_json(j);
}

inline nlohmann::ordered_json ExperimentConfig::to_json() const {
    nlohmann::ordered_json j;
    j["B"] = B;
    j["L"] = L;
    j["n"] = n;
    j["M"] = m;
    j["K_a"] = ka;
    j["EbN0_dB"] = ebn0_db;
    j["parity_profile"] = parity_profile;
    j["delta"] = delta;
    j["max_passes"] = max_passes;
    j["rel_tol"] = rel_tol;
    j["coordinate_order"] = coordinate_order;
    j["modes"] = modes;
    j["trials"] = trials;
    j["seed"] = seed;
    if (k_tot) j["K_tot"] = *k_tot;
    j["max_numerical_failure_rate"] = max_numerical_failure_rate;
    return j;
}

// Fraction of active users whose payload is missing from the recovered set.
inline double pupe(const std::vector<BitVec>& sent, const std::vector<BitVec>& recovered) {
    if (sent.empty()) throw std::invalid_argument("pupe: no active users");
    const std::set<BitVec> got(recovered.begin(), recovered.end());
    std::size_t missed = 0;
    for (const auto& w : sent)
        if (!got.count(w)) ++missed;
    return static_cast<double>(missed) / static_cast<double>(sent.size());
}

// Immutable per-experiment state shared by all trials and worker threads:
// codebooks and parity generators depend only on (seed, geometry), not on
// the (K_a, M) sweep point.
struct ExperimentContext {
    ParityProfile profile;
    ParityGenerators gens;
    std::vector<Codebook> codebooks;

    static ExperimentContext create(const ExperimentConfig& config) {
        ExperimentContext ctx;
        ctx.profile = config.profile();
        ctx.gens = ParityGenerators::generate(ctx.profile, mix_seed(config.seed, {stream_tag::generators}));
        const double P = config.power();
        ctx.codebooks.reserve(static_cast<std::size_t>(ctx.profile.L));
        for (int l = 0; l < ctx.profile.L; ++l)
            ctx.codebooks.push_back(generate_codebook(mix_seed(config.seed, {stream_tag::codebook}), config.n,
                                                      ctx.profile.v[static_cast<std::size_t>(l)], P, l));
        return ctx;
    }
};

struct ModeOutcome {
    int missed = 0;
    double seconds = 0.0;
    std::size_t support_sum = 0;
    bool numerical_failure = false;
    DecodeResult decode;
};

struct TrialResult {
    int trial_index = 0;
    int ka = 0;
    int m = 0;
    std::uint64_t observation_digest = 0;
    std::vector<BitVec> sent;
    std::map<DecoderMode, ModeOutcome> outcomes;
};

namespace detail {

inline std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t observation_digest(const std::vector<SlotObservation>& obs) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& o : obs)
        h = fnv1a(o.sample_cov.data(), sizeof(std::complex<double>) * static_cast<std::size_t>(o.sample_cov.size()),
                  h);
    return h;
}

}  // namespace detail

// One Monte Carlo trial at a given (K_a, M) sweep point. Draws payloads,
// synthesizes every slot once, then lets each requested decoder mode run on
// the same observations. Fully deterministic given (config.seed, trial_index).
inline TrialResult run_trial(const ExperimentConfig& config, const ExperimentContext& ctx, int ka, int m,
                             int trial_index) {
    TrialResult result;
    result.trial_index = trial_index;
    result.ka = ka;
    result.m = m;

    Rng payload_stream(config.seed, {stream_tag::payload, static_cast<std::uint64_t>(trial_index)});
    std::vector<std::vector<std::uint32_t>> user_indices;
    for (int k = 0; k < ka; ++k) {
        BitVec payload(static_cast<std::size_t>(config.B));
        for (auto& b : payload) b = static_cast<std::uint8_t>(payload_stream.next_bit());
        user_indices.push_back(encode_indices(payload, ctx.gens, ctx.profile));
        result.sent.push_back(std::move(payload));
    }

    std::vector<SlotObservation> observations;
    observations.reserve(static_cast<std::size_t>(ctx.profile.L));
    for (int l = 0; l < ctx.profile.L; ++l) {
        SlotTransmission tx;
        tx.slot = l;
        for (const auto& idx : user_indices) tx.indices.push_back(idx[static_cast<std::size_t>(l)]);
        Rng slot_stream(config.seed,
                        {stream_tag::slot_sim, static_cast<std::uint64_t>(trial_index), static_cast<std::uint64_t>(l)});
        observations.push_back(
            simulate_slot(ctx.codebooks[static_cast<std::size_t>(l)], tx, m, ExperimentConfig::N0, slot_stream));
    }
    result.observation_digest = detail::observation_digest(observations);

    DecodeOptions opts;
    opts.ka = ka;
    opts.ad = config.ad_config();
    opts.N0 = ExperimentConfig::N0;
    opts.shuffle_seed_base = mix_seed(config.seed, {stream_tag::shuffle, static_cast<std::uint64_t>(trial_index)});

    for (DecoderMode mode : config.decoder_modes()) {
        ModeOutcome outcome;
        try {
            outcome.decode = decode(mode, observations, ctx.codebooks, ctx.gens, ctx.profile, opts);
            outcome.seconds = outcome.decode.total_seconds;
            outcome.support_sum = outcome.decode.support_sum();
            const std::set<BitVec> got(outcome.decode.recovered.begin(), outcome.decode.recovered.end());
            for (const auto& w : result.sent)
                if (!got.count(w)) ++outcome.missed;
        } catch (const NumericalFailure&) {
            // flagged, not dropped: the trial counts all its users as missed
            outcome.numerical_failure = true;
            outcome.missed = ka;
        }
        result.outcomes.emplace(mode, std::move(outcome));
    }
    return result;
}

struct ModeAggregate {
    std::string mode;
    long long missed = 0;
    long long user_total = 0;
    double pupe = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double mean_seconds = 0.0;
    double mean_support_sum = 0.0;
    std::optional<double> runtime_ratio;  // scld mean / baseline mean
    int numerical_failures = 0;
};

struct CellReport {
    int ka = 0;
    int m = 0;
    int trials = 0;
    std::vector<ModeAggregate> modes;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<CellReport> cells;
    double wall_seconds = 0.0;
    double numerical_failure_rate = 0.0;
};

// 95% Wilson score interval for k successes out of n.
inline std::pair<double, double> wilson_interval(long long k, long long n, double z = 1.959963984540054) {
    if (n <= 0) return {0.0, 1.0};
    const double p = static_cast<double>(k) / static_cast<double>(n);
    const double nz = z * z / static_cast<double>(n);
    const double center = (p + nz / 2.0) / (1.0 + nz);
    const double half = z * std::sqrt(p * (1.0 - p) / static_cast<double>(n) + nz / (4.0 * static_cast<double>(n))) /
                        (1.0 + nz);
    // the bound is exact at the boundary counts; keep it free of rounding fuzz
    const double lo = k == 0 ? 0.0 : std::max(0.0, center - half);
    const double hi = k == n ? 1.0 : std::min(1.0, center + half);
    return {lo, hi};
}

// Runs the full (K_a, M) sweep with `threads` workers pulling trials from a
// shared queue. Aggregation is keyed by trial index, so the report does not
// depend on scheduling.
inline ExperimentReport run_experiment(const ExperimentConfig& config, int threads = 0) {
    config.validate();
    const auto t_start = detail::Clock::now();
    ExperimentContext ctx = ExperimentContext::create(config);

    struct Cell {
        int ka, m;
    };
    std::vector<Cell> cells;
    for (int ka : config.ka)
        for (int m : config.m) cells.push_back({ka, m});

    std::vector<std::vector<TrialResult>> per_cell(cells.size());
    for (auto& v : per_cell) v.resize(static_cast<std::size_t>(config.trials));

    const std::size_t total_tasks = cells.size() * static_cast<std::size_t>(config.trials);
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t task = next.fetch_add(1);
            if (task >= total_tasks) return;
            const std::size_t cell_idx = task / static_cast<std::size_t>(config.trials);
            const int trial = static_cast<int>(task % static_cast<std::size_t>(config.trials));
            try {
                per_cell[cell_idx][static_cast<std::size_t>(trial)] =
                    run_trial(config, ctx, cells[cell_idx].ka, cells[cell_idx].m, trial);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(total_tasks);
                return;
            }
        }
    };

    int worker_count = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    worker_count = std::max(1, std::min<int>(worker_count, static_cast<int>(total_tasks)));
    if (worker_count == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < worker_count; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    ExperimentReport report;
    report.config = config;
    long long failure_count = 0;
    long long outcome_count = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        CellReport cell;
        cell.ka = cells[c].ka;
        cell.m = cells[c].m;
        cell.trials = config.trials;
        std::map<DecoderMode, ModeAggregate> agg;
        for (const auto& trial : per_cell[c]) {
            for (const auto& [mode, outcome] : trial.outcomes) {
                ModeAggregate& a = agg[mode];
                a.mode = mode == DecoderMode::baseline ? "baseline" : "scld";
                a.missed += outcome.missed;
                a.user_total += trial.ka;
                a.mean_seconds += outcome.seconds;
                a.mean_support_sum += static_cast<double>(outcome.support_sum);
                if (outcome.numerical_failure) ++a.numerical_failures;
                ++outcome_count;
            }
        }
        for (auto& [mode, a] : agg) {
            a.pupe = static_cast<double>(a.missed) / static_cast<double>(a.user_total);
            std::tie(a.ci_lo, a.ci_hi) = wilson_interval(a.missed, a.user_total);
            a.mean_seconds /= config.trials;
            a.mean_support_sum /= config.trials;
            failure_count += a.numerical_failures;
        }
        if (agg.count(DecoderMode::baseline) && agg.count(DecoderMode::scld) &&
            agg[DecoderMode::baseline].mean_seconds > 0.0)
            agg[DecoderMode::scld].runtime_ratio =
                agg[DecoderMode::scld].mean_seconds / agg[DecoderMode::baseline].mean_seconds;
        for (const auto& mode : config.decoder_modes()) cell.modes.push_back(agg[mode]);
        report.cells.push_back(std::move(cell));
    }
    report.numerical_failure_rate =
        outcome_count > 0 ? static_cast<double>(failure_count) / static_cast<double>(outcome_count) : 0.0;
    report.wall_seconds = detail::seconds_since(t_start);
    return report;
}

inline nlohmann::ordered_json report_to_json(const ExperimentReport& report) {
    nlohmann::ordered_json j;
    j["config"] = report.config.to_json();
    j["results"] = nlohmann::ordered_json::array();
    for (const auto& cell : report.cells) {
        for (const auto& mode : cell.modes) {
            nlohmann::ordered_json row;
            row["ka"] = cell.ka;
            row["m"] = cell.m;
            row["mode"] = mode.mode;
            row["trials"] = cell.trials;
            row["missed_users"] = mode.missed;
            row["user_total"] = mode.user_total;
            row["pupe"] = mode.pupe;
            row["pupe_ci_lo"] = mode.ci_lo;
            row["pupe_ci_hi"] = mode.ci_hi;
            row["mean_decode_seconds"] = mode.mean_seconds;
            row["mean_support_sum"] = mode.mean_support_sum;
            if (mode.runtime_ratio) row["runtime_ratio"] = *mode.runtime_ratio;
            row["numerical_failures"] = mode.numerical_failures;
            j["results"].push_back(std::move(row));
        }
    }
    j["numerical_failure_rate"] = report.numerical_failure_rate;
    j["wall_seconds"] = report.wall_seconds;
    return j;
}

// Wall-clock dependent fields, excluded when comparing reports for
// reproducibility.
inline void strip_timing_fields(nlohmann::ordered_json& j) {
    j.erase("wall_seconds");
    if (j.contains("results"))
        for (auto& row : j["results"]) {
            row.erase("mean_decode_seconds");
            row.erase("runtime_ratio");
        }
}

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace detail

inline std::string report_to_csv(const ExperimentReport& report) {
    std::ostringstream out;
    out << "ka,m,mode,trials,pupe,pupe_ci_lo,pupe_ci_hi,mean_decode_seconds,mean_support_sum,runtime_ratio\n";
    for (const auto& cell : report.cells) {
        for (const auto& mode : cell.modes) {
            out << cell.ka << ',' << cell.m << ',' << mode.mode << ',' << cell.trials << ','
                << detail::format_double(mode.pupe) << ',' << detail::format_double(mode.ci_lo) << ','
                << detail::format_double(mode.ci_hi) << ',' << detail::format_double(mode.mean_seconds) << ','
                << detail::format_double(mode.mean_support_sum) << ','
                << (mode.runtime_ratio ? detail::format_double(*mode.runtime_ratio) : std::string()) << '\n';
        }
    }
    return out.str();
}

inline void write_report(const ExperimentReport& report, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream f(out_dir / "report.json");
        f << report_to_json(report).dump(2) << '\n';
    }
    {
        std::ofstream f(out_dir / "report.csv");
        f << report_to_csv(report);
    }
}

}  // namespace ura
