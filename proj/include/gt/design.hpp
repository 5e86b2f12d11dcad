#pragma once
// Mutual-information test design: the one-test utility J(f), its closed-form
// maximizer, pool selection and the conditional-entropy stopping rule.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>

#include "gt/core_model.hpp"

namespace gt {

// P(Y = 1) for a pool with infection probability f.
inline double predictive_positive(double f, const TestParams& params) {
    check_probability(f, "group infection probability");
    return std::clamp(params.rho() * f + 1.0 - params.sigma(), 1.0 - params.sigma(), params.s());
}

// Mutual information between the state and one test result, as a function of
// the pool's infection probability: J(f) = h(rho f + 1 - sigma) - h(sigma) - gamma f.
inline double utility_J(double f, const TestParams& params) {
    const double value =
        binary_entropy(predictive_positive(f, params)) - params.h_sigma() - params.gamma() * f;
    return std::max(0.0, value);
}

struct DesignTarget {
    double f_star;
    TestParams params;
};

// Stationary point of the concave J. With J in bits the slope condition is
// log2((1-p)/p) = gamma/rho at p = P(Y=1), hence the power of two.
inline DesignTarget optimal_f(const TestParams& params) {
    const double rho = params.rho();
    if (!(rho > 0.0)) throw InvalidParams("optimal_f requires s + sigma - 1 > 0");
    const double odds = std::exp2(params.gamma() / rho);
    const double f = (params.sigma() - odds * (1.0 - params.sigma())) / (rho * (1.0 + odds));
    constexpr double eps = 1e-15;
    return {std::clamp(f, eps, 1.0 - eps), params};
}

enum class SelectionStrategy { exhaustive, greedy };

inline std::string_view to_string(SelectionStrategy s) {
    return s == SelectionStrategy::exhaustive ? "exhaustive" : "greedy";
}

struct Selection {
    Group group;
    double f = 0.0;
    double utility = 0.0;
};

namespace detail {

// Utilities closer than this are ties; the tie-break then decides.
inline constexpr double kUtilityTieTolerance = 1e-12;

// Smaller pools first, then smaller integer encoding.
inline bool preferred(double utility, std::uint32_t mask, double best_utility,
                      std::uint32_t best_mask) {
    if (utility > best_utility + kUtilityTieTolerance) return true;
    if (utility < best_utility - kUtilityTieTolerance) return false;
    const int pc = std::popcount(mask), best_pc = std::popcount(best_mask);
    if (pc != best_pc) return pc < best_pc;
    return mask < best_mask;
}

inline Selection select_exhaustive(const Posterior& posterior, const TestParams& params) {
    const int n = posterior.size();
    const auto f = all_infection_probs(posterior);
    const std::uint32_t full = (std::uint32_t{1} << n) - 1u;
    std::uint32_t best = 1;
    double best_u = utility_J(f[1], params);
    for (std::uint32_t g = 2; g <= full; ++g) {
        const double u = utility_J(f[g], params);
        if (preferred(u, g, best_u, best)) {
            best = g;
            best_u = u;
        }
    }
    return {Group(best, n), f[best], best_u};
}

// Forward selection: add the member with the largest gain until none helps.
inline Selection select_greedy(const Posterior& posterior, const TestParams& params) {
    const int n = posterior.size();
    std::uint32_t current = 0;
    double current_u = 0.0;
    double current_f = 0.0;
    for (;;) {
        std::uint32_t best = 0;
        double best_u = 0.0, best_f = 0.0;
        bool found = false;
        for (int i = 0; i < n; ++i) {
            const std::uint32_t bit = std::uint32_t{1} << i;
            if (current & bit) continue;
            const std::uint32_t cand = current | bit;
            const double f = infection_prob(posterior, Group(cand, n));
            const double u = utility_J(f, params);
            if (!found || u > best_u + kUtilityTieTolerance) {
                best = cand;
                best_u = u;
                best_f = f;
                found = true;
            }
        }
        const bool improves = found && (current == 0 || best_u > current_u + kUtilityTieTolerance);
        if (!improves) break;
        current = best;
        current_u = best_u;
        current_f = best_f;
    }
    return {Group(current, n), current_f, current_u};
}

}  // namespace detail

inline Selection select_group(const Posterior& posterior, const TestParams& params,
                              SelectionStrategy strategy = SelectionStrategy::exhaustive) {
    check_population(posterior.size());
    return strategy == SelectionStrategy::exhaustive ? detail::select_exhaustive(posterior, params)
                                                     : detail::select_greedy(posterior, params);
}

struct StoppingConfig {
    double delta = 0.0;
    double prior_entropy_bits = 0.0;
    int max_tests = 1;

    void validate() const {
        if (!(delta >= 0.0 && delta <= 1.0))
            throw ConfigError("delta must lie in [0,1], got " + std::to_string(delta));
        if (!(prior_entropy_bits >= 0.0)) throw ConfigError("prior entropy must be nonnegative");
        if (max_tests < 1) throw ConfigError("max_tests must be positive");
    }

    double threshold_bits() const noexcept { return delta * prior_entropy_bits; }
};

// Slack absorbing the rounding gap between sum_i h(q_i) and the 2^n-term entropy.
inline constexpr double kEntropyTolerance = 1e-9;

inline bool stopping_met(double entropy_now, const StoppingConfig& cfg) {
    return entropy_now <= cfg.threshold_bits() + kEntropyTolerance;
}

struct LedgerStep {
    double f;
    TestParams params;
};

// Expected-information accounting: H(X) minus this sum is the expected
// conditional entropy along the realized sequence of pools.
inline double information_ledger(std::span<const LedgerStep> steps) {
    double total = 0.0;
    for (const auto& step : steps) total += utility_J(step.f, step.params);
    return total;
}

}  // namespace gt
