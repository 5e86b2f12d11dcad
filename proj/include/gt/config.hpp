#pragma once
// JSON run configuration shared by the `simulate` and `bounds` commands.
//
// Validation errors name the offending field and the line it appears on.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gt/bounds.hpp"
#include "gt/core_model.hpp"
#include "gt/design.hpp"
#include "gt/sim.hpp"

namespace gt {

struct RunConfig {
    int n = 10;
    std::vector<double> prior_q;
    double s = 0.8;
    double sigma = 0.8;
    std::optional<double> s_prime;
    std::optional<double> sigma_prime;
    // Non-empty grid means a sweep over assumed (sigma', s').
    std::vector<double> grid_sigma_prime;
    std::vector<double> grid_s_prime;
    double delta = 0.0;
    std::vector<double> deltas{0.8, 0.7, 0.6};
    std::vector<int> checkpoints{4, 8};
    int max_tests = 30;
    SelectionStrategy strategy = SelectionStrategy::exhaustive;
    GroundTruth truth;
    int runs = 1000;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string output_dir = "gt_out";
    bool write_traces = false;
    // Bounds inputs.
    double A = kDefaultMinorantA;
    std::optional<double> nu;
    std::optional<double> nu_prime;
    std::optional<std::string> trace_file;
    IterationWindow nu_window = kMatchedWindow;
    IterationWindow nu_window_mismatched = kMismatchedWindow;
    int curve_length = 20;

    Prior prior() const { return Prior(prior_q); }
    TestParams true_params() const { return TestParams(s, sigma); }
    TestParams assumed_params() const {
        return TestParams(s_prime.value_or(s), sigma_prime.value_or(sigma));
    }
    bool sweep() const { return !grid_sigma_prime.empty(); }

    std::vector<GridCell> grid() const {
        if (sweep()) return factorial_grid(grid_sigma_prime, grid_s_prime);
        return {GridCell{assumed_params().sigma(), assumed_params().s()}};
    }

    EpisodeConfig episode() const {
        const Prior p = prior();
        return EpisodeConfig{p,
                             true_params(),
                             assumed_params(),
                             StoppingConfig{delta, prior_entropy(p), max_tests},
                             strategy,
                             truth,
                             seed};
    }

    SweepOptions sweep_options() const {
        SweepOptions o;
        o.deltas = deltas;
        o.checkpoints = checkpoints;
        o.matched_window = nu_window;
        o.mismatched_window = nu_window_mismatched;
        o.A = A;
        o.threads = threads;
        return o;
    }
};

inline std::optional<SelectionStrategy> parse_strategy(std::string_view s) {
    if (s == "exhaustive") return SelectionStrategy::exhaustive;
    if (s == "greedy") return SelectionStrategy::greedy;
    return std::nullopt;
}

namespace detail {

// 1-based line of the first occurrence of each key of `path`, searched in order.
inline int line_of(std::string_view text, const std::vector<std::string>& path) {
    std::size_t pos = std::string_view::npos;
    std::size_t from = 0;
    for (const auto& key : path) {
        const auto hit = text.find("\"" + key + "\"", from);
        if (hit == std::string_view::npos) break;
        pos = from = hit;
    }
    if (pos == std::string_view::npos) return 1;
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
}

inline std::string join_path(const std::vector<std::string>& path) {
    std::string out;
    for (const auto& p : path) out += (out.empty() ? "" : ".") + p;
    return out;
}

class ConfigReader {
public:
    ConfigReader(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {
        try {
            root_ = nlohmann::json::parse(text_);
        } catch (const nlohmann::json::parse_error& e) {
            const auto upto = std::min<std::size_t>(e.byte, text_.size());
            const int line = 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<long>(upto), '\n'));
            throw ConfigError(source_ + ":" + std::to_string(line) + ": invalid JSON: " + e.what());
        }
        if (!root_.is_object()) throw ConfigError(source_ + ":1: configuration must be a JSON object");
    }

    [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& msg) const {
        throw ConfigError(source_ + ":" + std::to_string(line_of(text_, path)) + ": " +
                          join_path(path) + ": " + msg);
    }

    const nlohmann::json* find(const std::vector<std::string>& path) const {
        const nlohmann::json* node = &root_;
        for (const auto& key : path) {
            if (!node->is_object() || !node->contains(key)) return nullptr;
            node = &(*node)[key];
        }
        return node;
    }

    std::optional<double> number(const std::vector<std::string>& path) const {
        const auto* v = find(path);
        if (!v) return std::nullopt;
        if (!v->is_number()) fail(path, "expected a number");
        return v->get<double>();
    }

    std::optional<std::int64_t> integer(const std::vector<std::string>& path) const {
        const auto* v = find(path);
        if (!v) return std::nullopt;
        if (!v->is_number_integer()) fail(path, "expected an integer");
        return v->get<std::int64_t>();
    }

    std::optional<std::string> string(const std::vector<std::string>& path) const {
        const auto* v = find(path);
        if (!v) return std::nullopt;
        if (!v->is_string()) fail(path, "expected a string");
        return v->get<std::string>();
    }

    std::optional<bool> boolean(const std::vector<std::string>& path) const {
        const auto* v = find(path);
        if (!v) return std::nullopt;
        if (!v->is_boolean()) fail(path, "expected true or false");
        return v->get<bool>();
    }

    std::optional<std::vector<double>> numbers(const std::vector<std::string>& path) const {
        const auto* v = find(path);
        if (!v) return std::nullopt;
        if (!v->is_array()) fail(path, "expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : *v) {
            if (!e.is_number()) fail(path, "expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    const nlohmann::json& root() const { return root_; }

private:
    std::string_view text_;
    std::string source_;
    nlohmann::json root_;
};

inline IterationWindow read_window(const ConfigReader& r, const std::string& key,
                                   IterationWindow fallback) {
    const auto w = r.numbers({key});
    if (!w) return fallback;
    if (w->size() != 2) r.fail({key}, "expected [first, last]");
    IterationWindow out{static_cast<int>((*w)[0]), static_cast<int>((*w)[1])};
    if (out.first < 1 || out.last < out.first) r.fail({key}, "need 1 <= first <= last");
    return out;
}

}  // namespace detail

// Parses and validates a run configuration. `source` labels error messages.
inline RunConfig parse_run_config(std::string_view text, const std::string& source = "config") {
    const detail::ConfigReader r(text, source);
    RunConfig c;

    static const std::vector<std::string> known = {
        "n", "prior", "true_params", "assumed_params", "grid", "delta", "deltas", "checkpoints",
        "max_tests", "strategy", "ground_truth", "runs", "seed", "threads", "output_dir",
        "write_traces", "A", "nu", "nu_prime", "trace_file", "nu_window", "nu_window_mismatched",
        "curve_length", "batch_size"};
    for (const auto& [key, _] : r.root().items())
        if (std::find(known.begin(), known.end(), key) == known.end()) r.fail({key}, "unknown field");

    if (const auto n = r.integer({"n"})) {
        if (*n < 1 || *n > kMaxPopulation)
            r.fail({"n"}, "population must lie in [1, " + std::to_string(kMaxPopulation) + "]");
        c.n = static_cast<int>(*n);
    }
    if (const auto* p = r.find({"prior"})) {
        if (p->is_number()) {
            c.prior_q.assign(static_cast<std::size_t>(c.n), p->get<double>());
        } else if (p->is_array()) {
            c.prior_q = *r.numbers({"prior"});
            if (static_cast<int>(c.prior_q.size()) != c.n) r.fail({"prior"}, "needs exactly n entries");
        } else {
            r.fail({"prior"}, "expected a probability or a list of n probabilities");
        }
    } else {
        r.fail({"prior"}, "missing required field");
    }
    for (double q : c.prior_q)
        if (!(q > 0.0 && q < 1.0)) r.fail({"prior"}, "probabilities must lie in (0,1)");

    if (!r.find({"true_params"})) r.fail({"true_params"}, "missing required field");
    c.s = r.number({"true_params", "s"}).value_or(-1.0);
    c.sigma = r.number({"true_params", "sigma"}).value_or(-1.0);
    try {
        (void)TestParams(c.s, c.sigma);
    } catch (const Error& e) {
        r.fail({"true_params"}, e.what());
    }
    if (r.find({"assumed_params"})) {
        c.s_prime = r.number({"assumed_params", "s"});
        c.sigma_prime = r.number({"assumed_params", "sigma"});
        if (!c.s_prime || !c.sigma_prime) r.fail({"assumed_params"}, "needs both s and sigma");
        try {
            (void)TestParams(*c.s_prime, *c.sigma_prime);
        } catch (const Error& e) {
            r.fail({"assumed_params"}, e.what());
        }
    }
    if (r.find({"grid"})) {
        const auto sg = r.numbers({"grid", "sigma_prime"});
        const auto sp = r.numbers({"grid", "s_prime"});
        if (!sg || !sp || sg->empty() || sp->empty())
            r.fail({"grid"}, "needs non-empty sigma_prime and s_prime lists");
        c.grid_sigma_prime = *sg;
        c.grid_s_prime = *sp;
        for (double a : *sg)
            for (double b : *sp) try {
                    (void)TestParams(b, a);
                } catch (const Error& e) {
                    r.fail({"grid"}, e.what());
                }
    }
    if (const auto b = r.integer({"batch_size"}); b && *b != 1)
        r.fail({"batch_size"}, "only one pool per stage is supported");

    if (const auto d = r.number({"delta"})) {
        if (!(*d >= 0.0 && *d <= 1.0)) r.fail({"delta"}, "must lie in [0,1]");
        c.delta = *d;
    }
    if (const auto ds = r.numbers({"deltas"})) {
        for (double d : *ds)
            if (!(d >= 0.0 && d <= 1.0)) r.fail({"deltas"}, "entries must lie in [0,1]");
        c.deltas = *ds;
    }
    if (const auto m = r.integer({"max_tests"})) {
        if (*m < 1) r.fail({"max_tests"}, "must be positive");
        c.max_tests = static_cast<int>(*m);
    }
    if (const auto cps = r.numbers({"checkpoints"})) {
        c.checkpoints.clear();
        for (double k : *cps) {
            if (k < 0 || k != static_cast<int>(k)) r.fail({"checkpoints"}, "entries must be test counts");
            c.checkpoints.push_back(static_cast<int>(k));
        }
    }
    if (const auto s = r.string({"strategy"})) {
        const auto parsed = parse_strategy(*s);
        if (!parsed) r.fail({"strategy"}, "expected \"exhaustive\" or \"greedy\"");
        c.strategy = *parsed;
    }
    if (r.find({"ground_truth"})) {
        const auto mode = r.string({"ground_truth", "mode"}).value_or("fixed_k");
        if (mode == "fixed_k") {
            c.truth.mode = GroundTruth::Mode::fixed_k;
            const auto k = r.integer({"ground_truth", "k"}).value_or(1);
            if (k < 0 || k > c.n) r.fail({"ground_truth", "k"}, "must lie in [0, n]");
            c.truth.k = static_cast<int>(k);
        } else if (mode == "prior") {
            c.truth.mode = GroundTruth::Mode::sample_from_prior;
            if (const auto rates = r.numbers({"ground_truth", "rates"})) {
                if (static_cast<int>(rates->size()) != c.n)
                    r.fail({"ground_truth", "rates"}, "needs exactly n entries");
                for (double q : *rates)
                    if (!(q >= 0.0 && q <= 1.0)) r.fail({"ground_truth", "rates"}, "must lie in [0,1]");
                c.truth.rates = *rates;
            }
        } else {
            r.fail({"ground_truth", "mode"}, "expected \"fixed_k\" or \"prior\"");
        }
    }
    if (const auto v = r.integer({"runs"})) {
        if (*v < 1) r.fail({"runs"}, "must be at least 1");
        c.runs = static_cast<int>(*v);
    }
    if (const auto v = r.integer({"seed"})) {
        if (*v < 0) r.fail({"seed"}, "must be nonnegative");
        c.seed = static_cast<std::uint64_t>(*v);
    }
    if (const auto v = r.integer({"threads"})) {
        if (*v < 1) r.fail({"threads"}, "must be at least 1");
        c.threads = static_cast<int>(*v);
    }
    if (const auto v = r.string({"output_dir"})) c.output_dir = *v;
    if (const auto v = r.boolean({"write_traces"})) c.write_traces = *v;
    if (const auto v = r.number({"A"})) {
        if (!(*v > 0.0)) r.fail({"A"}, "must be positive");
        c.A = *v;
    }
    if (const auto v = r.number({"nu"})) {
        if (!(*v >= 0.0)) r.fail({"nu"}, "must be nonnegative");
        c.nu = *v;
    }
    if (const auto v = r.number({"nu_prime"})) {
        if (!(*v >= 0.0)) r.fail({"nu_prime"}, "must be nonnegative");
        c.nu_prime = *v;
    }
    if (const auto v = r.string({"trace_file"})) c.trace_file = *v;
    c.nu_window = detail::read_window(r, "nu_window", c.nu_window);
    c.nu_window_mismatched = detail::read_window(r, "nu_window_mismatched", c.nu_window_mismatched);
    if (const auto v = r.integer({"curve_length"})) {
        if (*v < 1) r.fail({"curve_length"}, "must be positive");
        c.curve_length = static_cast<int>(*v);
    }
    if (r.find({"checkpoints"})) {
        for (int k : c.checkpoints)
            if (k > c.max_tests) r.fail({"checkpoints"}, "checkpoint beyond max_tests");
    } else {
        std::erase_if(c.checkpoints, [&](int k) { return k > c.max_tests; });
    }
    return c;
}

}  // namespace gt
