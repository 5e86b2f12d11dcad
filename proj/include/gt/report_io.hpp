#pragma once
// Serialization of sweep and bounds results: CSV series, JSON summaries,
// per-iteration trace files and a console table.

#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gt/bounds.hpp"
#include "gt/sim.hpp"

namespace gt {

inline std::string format_number(double v, int digits = 15) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

inline constexpr const char* kSeriesHeader = "sigma_prime,s_prime,iteration,mean_entropy,n_runs";

// One row per (cell, iteration), iterations 1..max_tests.
inline void write_series_csv(const SweepReport& report, std::ostream& out) {
    out << kSeriesHeader << '\n';
    for (const auto& c : report.cells)
        for (std::size_t t = 0; t < c.mean_entropy.size(); ++t)
            out << format_number(c.sigma_prime) << ',' << format_number(c.s_prime) << ','
                << t + 1 << ',' << format_number(c.mean_entropy[t]) << ',' << c.n_runs << '\n';
}

inline nlohmann::json fit_json(const std::optional<GaussianFit>& fit) {
    if (!fit) return nullptr;
    return {{"mean", fit->mean},
            {"nu", fit->nu},
            {"window", {fit->window.first, fit->window.last}},
            {"samples", fit->samples}};
}

inline nlohmann::json summary_json(const SweepReport& report) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : report.cells) {
        nlohmann::json stops = nlohmann::json::array();
        for (const auto& s : c.stops)
            stops.push_back({{"delta", s.delta},
                             {"mean_tests", s.mean_tests},
                             {"std_tests", s.std_tests},
                             {"censored", s.censored},
                             {"t_e_bound", s.t_e_bound ? nlohmann::json(*s.t_e_bound) : nullptr},
                             {"stop_fraction", s.stop_fraction}});
        nlohmann::json aucs = nlohmann::json::array();
        for (const auto& a : c.aucs)
            aucs.push_back({{"tests", a.tests}, {"mean_auc", a.mean_auc}, {"n_runs", a.n_runs}});
        cells.push_back({{"sigma_prime", c.sigma_prime},
                         {"s_prime", c.s_prime},
                         {"n_runs", c.n_runs},
                         {"f_prime", c.f_prime},
                         {"alpha", c.alpha ? nlohmann::json(*c.alpha) : nullptr},
                         {"stop_times", std::move(stops)},
                         {"auc", std::move(aucs)},
                         {"gaussian_fit", fit_json(c.f_fit)},
                         {"mean_ledger_bits", c.mean_ledger}});
    }
    return {{"prior_entropy_bits", report.prior_entropy_bits},
            {"max_tests", report.max_tests},
            {"cells", std::move(cells)}};
}

inline void write_summary_table(const SweepReport& report, std::ostream& out) {
    char line[256];
    out << "sigma'  s'     f'      alpha    ";
    if (!report.cells.empty())
        for (const auto& s : report.cells.front().stops) {
            std::snprintf(line, sizeof line, "T(d=%.2f)  ", s.delta);
            out << line;
        }
    if (!report.cells.empty())
        for (const auto& a : report.cells.front().aucs) {
            std::snprintf(line, sizeof line, "AUC@%-3d  ", a.tests);
            out << line;
        }
    out << '\n';
    for (const auto& c : report.cells) {
        std::snprintf(line, sizeof line, "%-6.3g  %-5.3g  %-6.4f  %-7.4f  ", c.sigma_prime,
                      c.s_prime, c.f_prime, c.alpha.value_or(0.0));
        out << line;
        for (const auto& s : c.stops) {
            std::snprintf(line, sizeof line, "%-9.3f  ", s.mean_tests);
            out << line;
        }
        for (const auto& a : c.aucs) {
            std::snprintf(line, sizeof line, "%-7.4f  ", a.mean_auc);
            out << line;
        }
        out << '\n';
    }
}

inline constexpr const char* kTraceHeader =
    "sigma_prime,s_prime,run,iteration,group,f_selected,f_true,outcome,entropy_true,entropy_selection";

inline void write_trace_header(std::ostream& out) { out << kTraceHeader << '\n'; }

// Group is written as its integer mask.
inline void write_trace_rows(const TestParams& assumed, std::span<const EpisodeTrace> traces,
                             std::ostream& out) {
    for (std::size_t r = 0; r < traces.size(); ++r)
        for (std::size_t t = 0; t < traces[r].rows.size(); ++t) {
            const auto& row = traces[r].rows[t];
            out << format_number(assumed.sigma()) << ',' << format_number(assumed.s()) << ','
                << r << ',' << t + 1 << ',' << row.group.mask() << ','
                << format_number(row.f_selected, 17) << ',' << format_number(row.f_true, 17) << ','
                << row.outcome << ',' << format_number(row.entropy_true, 17) << ','
                << format_number(row.entropy_selection, 17) << '\n';
        }
}

// Selected-f sequences per run from a trace file, optionally restricted to one
// assumed-parameter cell.
inline std::vector<std::vector<double>> read_selected_f(std::istream& in,
                                                        std::optional<GridCell> cell = {}) {
    std::string line;
    if (!std::getline(in, line) || line != kTraceHeader)
        throw ConfigError("trace file must start with header: " + std::string(kTraceHeader));
    std::map<std::pair<std::string, long>, std::vector<std::pair<int, double>>> runs;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
        if (fields.size() != 10)
            throw ConfigError("trace line " + std::to_string(lineno) + ": expected 10 fields");
        try {
            const double sg = std::stod(fields[0]);
            const double sp = std::stod(fields[1]);
            if (cell && (std::abs(sg - cell->sigma_prime) > 1e-12 || std::abs(sp - cell->s_prime) > 1e-12))
                continue;
            runs[{fields[0] + "," + fields[1], std::stol(fields[2])}].emplace_back(
                std::stoi(fields[3]), std::stod(fields[5]));
        } catch (const std::logic_error&) {
            throw ConfigError("trace line " + std::to_string(lineno) + ": malformed number");
        }
    }
    std::vector<std::vector<double>> out;
    for (auto& [_, rows] : runs) {
        std::sort(rows.begin(), rows.end());
        std::vector<double> seq;
        for (const auto& [t, f] : rows) seq.push_back(f);
        out.push_back(std::move(seq));
    }
    return out;
}

inline nlohmann::json complexity_json(const ComplexityReport& r, double delta) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nullptr; };
    nlohmann::json curve = nlohmann::json::object();
    for (const auto& [T, p] : r.probability_curve) curve[std::to_string(T)] = p;
    nlohmann::json j = {{"A", r.A},
                        {"delta", delta},
                        {"f_star", r.f_star},
                        {"f_prime", opt(r.f_prime)},
                        {"nu", r.nu},
                        {"B_A", r.moments.B_A},
                        {"E_F", r.moments.E_F},
                        {"V_F", r.moments.V_F},
                        {"T_E", opt(r.T_E)},
                        {"alpha", opt(r.alpha)},
                        {"feasible", r.T_E.has_value() && (!r.f_prime || r.alpha.has_value())},
                        {"probability_curve", std::move(curve)}};
    if (r.mismatched_moments)
        j["mismatched"] = {{"E_F", r.mismatched_moments->E_F}, {"V_F", r.mismatched_moments->V_F}};
    return j;
}

}  // namespace gt
