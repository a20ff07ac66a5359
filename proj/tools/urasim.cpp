// urasim: Monte Carlo link-level simulator for grant-free unsourced random
// access with a massive-MIMO receiver. The `simulate` subcommand sweeps
// (K_a, M), decodes with the baseline and/or SCLD pipelines and writes a
// JSON report plus a flat CSV.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ura/experiment.hpp"

namespace {

std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            int value = std::stoi(item, &pos);
            if (pos != item.size()) throw std::invalid_argument(item);
            out.push_back(value);
        } catch (const std::exception&) {
            throw ura::ConfigError("invalid integer '" + item + "' in " + flag);
        }
    }
    if (out.empty()) throw ura::ConfigError(flag + " must list at least one value");
    return out;
}

std::vector<std::string> parse_mode_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

void print_summary(const ura::ExperimentReport& report) {
    std::printf("%4s %5s %9s %7s %9s  [%s]\n", "ka", "m", "mode", "pupe", "seconds", "ci95");
    for (const auto& cell : report.cells) {
        for (const auto& mode : cell.modes) {
            std::string ratio =
                mode.runtime_ratio ? "  ratio=" + ura::detail::format_double(*mode.runtime_ratio) : std::string();
            std::printf("%4d %5d %9s %7.4f %9.3f  [%.4f, %.4f]%s\n", cell.ka, cell.m, mode.mode.c_str(), mode.pupe,
                        mode.mean_seconds, mode.ci_lo, mode.ci_hi, ratio.c_str());
        }
    }
    std::printf("total wall time: %.1f s, numerical failure rate: %g\n", report.wall_seconds,
                report.numerical_failure_rate);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"unsourced random access / massive MIMO link simulator"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "run a Monte Carlo experiment from a config file");
    std::string config_path;
    std::string out_dir = ".";
    std::optional<int> trials_override;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> modes_override;
    std::optional<std::string> ka_override;
    std::optional<std::string> m_override;
    int threads = 0;
    sim->add_option("--config", config_path, "experiment config (JSON)")->required();
    sim->add_option("--out", out_dir, "output directory for report.json / report.csv");
    sim->add_option("--trials", trials_override, "override trial count");
    sim->add_option("--seed", seed_override, "override master seed");
    sim->add_option("--modes", modes_override, "override modes, comma separated (baseline,scld)");
    sim->add_option("--ka", ka_override, "override active-user counts, comma separated");
    sim->add_option("--m", m_override, "override antenna counts, comma separated");
    sim->add_option("--threads", threads, "worker threads (default: hardware concurrency)");

    CLI11_PARSE(app, argc, argv);

    try {
        ura::ExperimentConfig config = ura::ExperimentConfig::from_file(config_path);
        if (trials_override) config.trials = *trials_override;
        if (seed_override) config.seed = *seed_override;
        if (modes_override) config.modes = parse_mode_list(*modes_override);
        if (ka_override) config.ka = parse_int_list(*ka_override, "--ka");
        if (m_override) config.m = parse_int_list(*m_override, "--m");
        config.validate();

        ura::ExperimentReport report = ura::run_experiment(config, threads);
        ura::write_report(report, out_dir);
        print_summary(report);
        std::cout << "report written to " << (std::filesystem::path(out_dir) / "report.json").string() << "\n";

        if (report.numerical_failure_rate > config.max_numerical_failure_rate) {
            std::cerr << "numerical failure rate " << report.numerical_failure_rate << " exceeds threshold "
                      << config.max_numerical_failure_rate << "\n";
            return 3;
        }
        return 0;
    } catch (const ura::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ura::NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
