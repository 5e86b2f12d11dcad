#pragma once
// Implementations behind the `gt simulate` and `gt bounds` subcommands.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "gt/config.hpp"
#include "gt/report_io.hpp"
#include "gt/sim.hpp"

namespace gt {

struct SimulationArtifacts {
    SweepReport report;
    std::string series_csv;
    std::string summary_json;
    std::string traces_csv;  // empty unless requested
};

inline SimulationArtifacts run_simulation(const RunConfig& cfg) {
    const EpisodeConfig base = cfg.episode();
    const SweepOptions opt = cfg.sweep_options();
    SimulationArtifacts out;
    out.report.max_tests = base.stopping.max_tests;
    out.report.prior_entropy_bits = prior_entropy(base.prior);
    std::ostringstream traces;
    if (cfg.write_traces) write_trace_header(traces);
    for (const auto& cell : cfg.grid()) {
        EpisodeConfig ec = base;
        ec.assumed_params = TestParams(cell.s_prime, cell.sigma_prime);
        const auto runs = run_cell(ec, cfg.runs, opt.threads);
        out.report.cells.push_back(summarize_cell(ec, runs, opt));
        if (cfg.write_traces) write_trace_rows(ec.assumed_params, runs, traces);
    }
    std::ostringstream csv;
    write_series_csv(out.report, csv);
    out.series_csv = csv.str();
    nlohmann::json summary = summary_json(out.report);
    summary["config"] = {{"n", cfg.n},
                         {"runs", cfg.runs},
                         {"seed", cfg.seed},
                         {"true_params", {{"s", cfg.s}, {"sigma", cfg.sigma}}},
                         {"strategy", std::string(to_string(cfg.strategy))}};
    out.summary_json = summary.dump(2) + "\n";
    out.traces_csv = traces.str();
    return out;
}

inline void write_artifacts(const SimulationArtifacts& a, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto write = [&](const char* name, const std::string& content) {
        std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
        f << content;
        if (!f) throw Error("failed to write " + (dir / name).string());
    };
    write("series.csv", a.series_csv);
    write("summary.json", a.summary_json);
    if (!a.traces_csv.empty()) write("traces.csv", a.traces_csv);
}

inline nlohmann::json run_bounds(const RunConfig& cfg) {
    BoundsInputs in{.true_params = cfg.true_params(),
                    .assumed_params = std::nullopt,
                    .prior_entropy_bits = prior_entropy(cfg.prior()),
                    .delta = cfg.delta,
                    .nu_prime = std::nullopt};
    if (cfg.s_prime) in.assumed_params = cfg.assumed_params();
    in.A = cfg.A;
    in.curve_length = cfg.curve_length;
    in.nu = cfg.nu.value_or(0.0);
    in.nu_prime = cfg.nu_prime;
    nlohmann::json fits = nlohmann::json::object();
    if (cfg.trace_file) {
        std::ifstream f(*cfg.trace_file);
        if (!f) throw ConfigError("cannot open trace file " + *cfg.trace_file);
        const auto matched = read_selected_f(f, GridCell{cfg.sigma, cfg.s});
        if (!cfg.nu) {
            const auto fit = estimate_nu(matched, cfg.nu_window);
            in.nu = fit.nu;
            fits["matched"] = fit_json(fit);
        }
        if (in.assumed_params && !cfg.nu_prime) {
            f.clear();
            f.seekg(0);
            const auto mis = read_selected_f(f, GridCell{in.assumed_params->sigma(), in.assumed_params->s()});
            const auto fit = estimate_nu(mis, cfg.nu_window_mismatched);
            in.nu_prime = fit.nu;
            fits["mismatched"] = fit_json(fit);
        }
    }
    auto j = complexity_json(complexity_report(in), cfg.delta);
    j["prior_entropy_bits"] = in.prior_entropy_bits;
    if (!fits.empty()) j["fits"] = std::move(fits);
    return j;
}

}  // namespace gt
