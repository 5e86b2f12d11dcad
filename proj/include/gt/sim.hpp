#pragma once
// Ground-truth simulation of adaptive testing campaigns and sweep aggregation.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "gt/bounds.hpp"
#include "gt/core_model.hpp"
#include "gt/design.hpp"

namespace gt {

using Rng = std::mt19937_64;

// Uniform double in [0,1) from the top 53 bits; identical on every platform.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

// Seed of run `index` derived from the base seed (splitmix64 finalizer over a
// counter), so any run can be replayed alone.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct GroundTruth {
    enum class Mode { sample_from_prior, fixed_k };
    Mode mode = Mode::fixed_k;
    int k = 1;
    // Bernoulli rates for sample_from_prior; empty means use the model prior.
    std::vector<double> rates;
};

struct EpisodeConfig {
    Prior prior;
    TestParams true_params;
    TestParams assumed_params;
    StoppingConfig stopping;
    SelectionStrategy strategy = SelectionStrategy::exhaustive;
    GroundTruth truth;
    std::uint64_t seed = 0;

    bool matched() const { return true_params == assumed_params; }

    void validate() const {
        stopping.validate();
        if (truth.mode == GroundTruth::Mode::fixed_k && (truth.k < 0 || truth.k > prior.size()))
            throw ConfigError("fixed-k ground truth needs 0 <= k <= n");
        if (!truth.rates.empty()) {
            if (static_cast<int>(truth.rates.size()) != prior.size())
                throw ConfigError("ground-truth rates must have one entry per individual");
            for (double r : truth.rates) check_probability(r, "ground-truth rate");
        }
    }
};

inline InfectionState sample_ground_truth(const GroundTruth& truth, const Prior& prior, Rng& rng) {
    const int n = prior.size();
    std::uint32_t mask = 0;
    if (truth.mode == GroundTruth::Mode::fixed_k) {
        if (truth.k < 0 || truth.k > n) throw ConfigError("fixed-k ground truth needs 0 <= k <= n");
        // Partial Fisher-Yates: first k slots of a uniform permutation.
        std::vector<int> idx(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
        for (int i = 0; i < truth.k; ++i) {
            const auto span = static_cast<std::uint64_t>(n - i);
            const auto j = i + static_cast<int>(rng() % span);
            std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
            mask |= std::uint32_t{1} << idx[static_cast<std::size_t>(i)];
        }
    } else {
        const auto rates = truth.rates.empty() ? prior.q() : std::span<const double>(truth.rates);
        for (int i = 0; i < n; ++i)
            if (bernoulli(rng, rates[static_cast<std::size_t>(i)])) mask |= std::uint32_t{1} << i;
    }
    return InfectionState(mask, n);
}

inline int simulate_outcome(Group g, InfectionState x_true, const TestParams& true_params,
                            Rng& rng) {
    if (g.empty()) throw DomainError("cannot run a test on an empty pool");
    const double p_positive = group_hit(g, x_true) ? true_params.s() : 1.0 - true_params.sigma();
    return bernoulli(rng, p_positive) ? 1 : 0;
}

struct TraceRow {
    Group group;
    double f_selected = 0.0;  // under the selection posterior
    double f_true = 0.0;      // same pool under the true posterior
    int outcome = 0;
    double entropy_true = 0.0;
    double entropy_selection = 0.0;
    std::vector<double> marginals;  // selection posterior, after the update
};

struct EpisodeTrace {
    InfectionState x_true;
    double prior_entropy_bits = 0.0;
    std::vector<double> prior_marginals;
    std::vector<TraceRow> rows;
    int stop_iteration = 0;
    bool stopped = false;  // criterion met (as opposed to budget exhausted)

    int tests() const noexcept { return static_cast<int>(rows.size()); }

    // Entropy after t tests; carried forward past the end of the run.
    double entropy_after(int t) const {
        if (t <= 0 || rows.empty()) return prior_entropy_bits;
        return rows[static_cast<std::size_t>(std::min(t, tests()) - 1)].entropy_true;
    }

    const std::vector<double>& marginals_after(int t) const {
        if (t <= 0 || rows.empty()) return prior_marginals;
        return rows[static_cast<std::size_t>(std::min(t, tests()) - 1)].marginals;
    }

    // First t with entropy <= delta H(X); empty if never reached.
    std::optional<int> stop_time(double delta) const {
        const StoppingConfig cfg{delta, prior_entropy_bits, 1};
        for (int t = 0; t <= tests(); ++t)
            if (stopping_met(entropy_after(t), cfg)) return t;
        return std::nullopt;
    }

    std::vector<double> selected_f() const {
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r.f_selected);
        return out;
    }
};

// Adaptive loop: design with the assumed parameters on the selection
// posterior, draw the result from the true parameters, update both posteriors.
// Stopping is judged on the true posterior's realized entropy.
inline EpisodeTrace run_episode(const EpisodeConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    EpisodeTrace trace;
    trace.x_true = sample_ground_truth(cfg.truth, cfg.prior, rng);
    trace.prior_entropy_bits = prior_entropy(cfg.prior);

    StoppingConfig stopping = cfg.stopping;
    stopping.prior_entropy_bits = trace.prior_entropy_bits;

    Posterior truth_post = Posterior::from_prior(cfg.prior);
    Posterior select_post = truth_post;
    trace.prior_marginals = marginals(select_post);

    double entropy = posterior_entropy(truth_post);
    while (!stopping_met(entropy, stopping) && trace.tests() < stopping.max_tests) {
        const Selection pick = select_group(select_post, cfg.assumed_params, cfg.strategy);
        const int y = simulate_outcome(pick.group, trace.x_true, cfg.true_params, rng);
        TraceRow row;
        row.group = pick.group;
        row.f_selected = pick.f;
        row.f_true = infection_prob(truth_post, pick.group);
        row.outcome = y;
        truth_post = posterior_update(truth_post, TestRecord(pick.group, y, cfg.true_params));
        select_post = posterior_update(select_post, TestRecord(pick.group, y, cfg.assumed_params));
        entropy = posterior_entropy(truth_post);
        row.entropy_true = entropy;
        row.entropy_selection = posterior_entropy(select_post);
        row.marginals = marginals(select_post);
        trace.rows.push_back(std::move(row));
    }
    trace.stopped = stopping_met(entropy, stopping);
    trace.stop_iteration = trace.tests();
    return trace;
}

// Mean pairwise ordering of infected over healthy scores; ties count 1/2
// unless strict. Scores within kAucTieTolerance are ties.
inline constexpr double kAucTieTolerance = 1e-12;

inline double auc(std::span<const double> scores, InfectionState x_true, bool strict = false) {
    if (static_cast<int>(scores.size()) != x_true.size())
        throw DimensionError("score vector does not match the state length");
    const int pos = x_true.count();
    const int neg = x_true.size() - pos;
    if (pos == 0 || neg == 0) throw DomainError("AUC undefined without both classes");
    double wins = 0.0;
    for (int i = 0; i < x_true.size(); ++i) {
        if (!x_true.test(i)) continue;
        for (int j = 0; j < x_true.size(); ++j) {
            if (x_true.test(j)) continue;
            const double d = scores[static_cast<std::size_t>(i)] - scores[static_cast<std::size_t>(j)];
            if (std::abs(d) <= kAucTieTolerance)
                wins += strict ? 0.0 : 0.5;
            else if (d > 0.0)
                wins += 1.0;
        }
    }
    return wins / (static_cast<double>(pos) * static_cast<double>(neg));
}

// Runs `runs` episodes of one configuration. Run i uses derive_seed(seed, i);
// results are stored by index, so thread count never changes the output.
inline std::vector<EpisodeTrace> run_cell(const EpisodeConfig& base, int runs, int threads = 1) {
    if (runs < 1) throw ConfigError("runs must be at least 1");
    base.validate();
    std::vector<std::optional<EpisodeTrace>> slots(static_cast<std::size_t>(runs));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < runs; i = next++) {
            EpisodeConfig cfg = base;
            cfg.seed = derive_seed(base.seed, static_cast<std::uint64_t>(i));
            slots[static_cast<std::size_t>(i)] = run_episode(cfg);
        }
    };
    const int workers = std::clamp(threads, 1, runs);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    std::vector<EpisodeTrace> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

struct StopStats {
    double delta = 0.0;
    double mean_tests = 0.0;
    double std_tests = 0.0;
    int censored = 0;  // runs that never reached the threshold (counted at budget)
    std::optional<double> t_e_bound;
    // stop_fraction[T] = share of runs stopped by test T, T = 0..max_tests.
    std::vector<double> stop_fraction;
};

struct AucCheckpoint {
    int tests = 0;
    double mean_auc = 0.0;
    int n_runs = 0;
};

struct CellReport {
    double sigma_prime = 0.0;
    double s_prime = 0.0;
    int n_runs = 0;
    double f_prime = 0.0;
    std::optional<double> alpha;
    // Index t-1 holds iteration t = 1..max_tests.
    std::vector<double> mean_entropy;
    std::vector<double> entropy_sd;
    std::vector<double> mean_ledger;
    std::vector<StopStats> stops;
    std::vector<AucCheckpoint> aucs;
    std::optional<GaussianFit> f_fit;
};

struct SweepOptions {
    std::vector<double> deltas{0.8, 0.7, 0.6};
    std::vector<int> checkpoints{4, 8};
    IterationWindow matched_window = kMatchedWindow;
    IterationWindow mismatched_window = kMismatchedWindow;
    double A = kDefaultMinorantA;
    int threads = 1;
};

struct SweepReport {
    std::vector<CellReport> cells;
    int max_tests = 0;
    double prior_entropy_bits = 0.0;
};

inline CellReport summarize_cell(const EpisodeConfig& cfg, std::span<const EpisodeTrace> traces,
                                 const SweepOptions& opt) {
    CellReport c;
    c.sigma_prime = cfg.assumed_params.sigma();
    c.s_prime = cfg.assumed_params.s();
    c.n_runs = static_cast<int>(traces.size());
    const int max_tests = cfg.stopping.max_tests;
    const double runs = static_cast<double>(traces.size());
    const double H = prior_entropy(cfg.prior);

    c.mean_entropy.assign(static_cast<std::size_t>(max_tests), 0.0);
    c.entropy_sd.assign(static_cast<std::size_t>(max_tests), 0.0);
    c.mean_ledger.assign(static_cast<std::size_t>(max_tests), 0.0);
    for (int t = 1; t <= max_tests; ++t) {
        double sum = 0.0, sq = 0.0, ledger = 0.0;
        for (const auto& tr : traces) {
            const double e = tr.entropy_after(t);
            sum += e;
            sq += e * e;
            double acc = 0.0;
            for (int k = 0; k < std::min(t, tr.tests()); ++k)
                acc += utility_J(tr.rows[static_cast<std::size_t>(k)].f_true, cfg.true_params);
            ledger += acc;
        }
        const double mean = sum / runs;
        c.mean_entropy[static_cast<std::size_t>(t - 1)] = mean;
        c.entropy_sd[static_cast<std::size_t>(t - 1)] =
            runs > 1 ? std::sqrt(std::max(0.0, (sq - runs * mean * mean) / (runs - 1))) : 0.0;
        c.mean_ledger[static_cast<std::size_t>(t - 1)] = ledger / runs;
    }

    const auto f_star = optimal_f(cfg.true_params).f_star;
    c.f_prime = optimal_f(cfg.assumed_params).f_star;
    const bool matched = cfg.matched();

    std::vector<std::vector<double>> f_runs;
    f_runs.reserve(traces.size());
    for (const auto& tr : traces) f_runs.push_back(tr.selected_f());
    try {
        c.f_fit = estimate_nu(f_runs, matched ? opt.matched_window : opt.mismatched_window);
    } catch (const InsufficientData&) {
        c.f_fit.reset();
    }
    const double nu = c.f_fit ? c.f_fit->nu : 0.0;
    if (!matched) c.alpha = mismatch_alpha(cfg.true_params, c.f_prime, f_star, nu, opt.A);
    // Matched-model T_E uses the nu-free moments; the penalty carries the spread.
    const auto base_moments = minorant_moments(f_star, 0.0, cfg.true_params, opt.A);

    for (double delta : opt.deltas) {
        StopStats s;
        s.delta = delta;
        std::vector<int> times;
        times.reserve(traces.size());
        for (const auto& tr : traces) {
            const auto t = tr.stop_time(delta);
            if (!t) ++s.censored;
            times.push_back(t.value_or(max_tests));
        }
        double sum = 0.0;
        for (int t : times) sum += t;
        s.mean_tests = sum / runs;
        double ss = 0.0;
        for (int t : times) ss += (t - s.mean_tests) * (t - s.mean_tests);
        s.std_tests = runs > 1 ? std::sqrt(ss / (runs - 1)) : 0.0;
        s.stop_fraction.assign(static_cast<std::size_t>(max_tests + 1), 0.0);
        for (const auto& tr : traces) {
            const auto t = tr.stop_time(delta);
            if (!t) continue;
            for (int T = *t; T <= max_tests; ++T) s.stop_fraction[static_cast<std::size_t>(T)] += 1.0;
        }
        for (double& v : s.stop_fraction) v /= runs;
        if (const auto te = sample_complexity(H, delta, base_moments.E_F)) {
            if (matched)
                s.t_e_bound = *te;
            else if (c.alpha)
                s.t_e_bound = (1.0 + *c.alpha) * *te;
        }
        c.stops.push_back(std::move(s));
    }

    for (int k : opt.checkpoints) {
        AucCheckpoint a;
        a.tests = k;
        double sum = 0.0;
        for (const auto& tr : traces) {
            const int pos = tr.x_true.count();
            if (pos == 0 || pos == tr.x_true.size()) continue;
            sum += auc(tr.marginals_after(k), tr.x_true);
            ++a.n_runs;
        }
        a.mean_auc = a.n_runs > 0 ? sum / a.n_runs : 0.0;
        c.aucs.push_back(a);
    }
    return c;
}

struct GridCell {
    double sigma_prime;
    double s_prime;
};

// Full factorial grid over assumed (sigma', s'). Contains the matched pair
// whenever the truth lies on the grid.
inline std::vector<GridCell> factorial_grid(std::span<const double> sigmas,
                                            std::span<const double> sens) {
    std::vector<GridCell> out;
    for (double sg : sigmas)
        for (double s : sens) out.push_back({sg, s});
    return out;
}

// Each cell reuses the same per-run seeds (common random numbers), so cells
// see identical ground truths and differ only through their designs.
inline SweepReport run_sweep(const EpisodeConfig& base, std::span<const GridCell> grid, int runs,
                             const SweepOptions& opt) {
    SweepReport report;
    report.max_tests = base.stopping.max_tests;
    report.prior_entropy_bits = prior_entropy(base.prior);
    for (const auto& cell : grid) {
        EpisodeConfig cfg = base;
        cfg.assumed_params = TestParams(cell.s_prime, cell.sigma_prime);
        const auto traces = run_cell(cfg, runs, opt.threads);
        report.cells.push_back(summarize_cell(cfg, traces, opt));
    }
    return report;
}

}  // namespace gt
