#pragma once
// Exact probabilistic model of a tested population.
//
// The infection state of n individuals is a bit-vector x in {0,1}^n. The
// posterior is stored densely over all 2^n states, indexed by the integer
// encoding of x (bit i = individual i). Entropies are in bits throughout.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gt/error.hpp"

namespace gt {

// Exact inference enumerates 2^n states; keep it within a few MB.
inline constexpr int kMaxPopulation = 20;

inline void check_population(int n) {
    if (n < 1) throw SizeError("population size must be at least 1, got " + std::to_string(n));
    if (n > kMaxPopulation)
        throw SizeError("population size " + std::to_string(n) + " exceeds exact-inference cap " +
                        std::to_string(kMaxPopulation));
}

// n-bit vector over a population. Tag distinguishes pools from infection states.
template <class Tag>
class BitVector {
public:
    BitVector() = default;

    BitVector(std::uint32_t mask, int size) : mask_(mask), size_(size) {
        check_population(size);
        if (size < 32 && (mask >> size) != 0)
            throw DimensionError("bit-vector mask has bits beyond population size " +
                                 std::to_string(size));
    }

    static BitVector from_indices(std::span<const int> indices, int size) {
        check_population(size);
        std::uint32_t mask = 0;
        for (int i : indices) {
            if (i < 0 || i >= size)
                throw DimensionError("index " + std::to_string(i) + " outside population of " +
                                     std::to_string(size));
            mask |= std::uint32_t{1} << i;
        }
        return BitVector(mask, size);
    }

    std::uint32_t mask() const noexcept { return mask_; }
    int size() const noexcept { return size_; }
    int count() const noexcept { return std::popcount(mask_); }
    bool empty() const noexcept { return mask_ == 0; }
    bool test(int i) const noexcept { return ((mask_ >> i) & 1u) != 0; }

    std::vector<int> indices() const {
        std::vector<int> out;
        for (int i = 0; i < size_; ++i)
            if (test(i)) out.push_back(i);
        return out;
    }

    friend bool operator==(const BitVector&, const BitVector&) = default;

private:
    std::uint32_t mask_ = 0;
    int size_ = 0;
};

using Group = BitVector<struct GroupTag>;
using InfectionState = BitVector<struct InfectionStateTag>;

inline void check_probability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0))
        throw DomainError(std::string(what) + " must lie in [0,1], got " + std::to_string(p));
}

// h(p) in bits, with 0 log 0 = 0.
inline double binary_entropy(double p) {
    check_probability(p, "binary_entropy argument");
    if (p == 0.0 || p == 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

// Test sensitivity s = P(Y=1 | pool hit) and specificity sigma = P(Y=0 | pool clean).
class TestParams {
public:
    TestParams(double sensitivity, double specificity)
        : s_(sensitivity), sigma_(specificity) {
        if (!(s_ > 0.0 && s_ <= 1.0))
            throw InvalidParams("sensitivity must lie in (0,1], got " + std::to_string(s_));
        if (!(sigma_ > 0.0 && sigma_ <= 1.0))
            throw InvalidParams("specificity must lie in (0,1], got " + std::to_string(sigma_));
        rho_ = s_ + sigma_ - 1.0;
        if (!(rho_ > 0.0))
            throw InvalidParams("s + sigma - 1 must be positive for an informative test");
        h_sigma_ = binary_entropy(sigma_);
        gamma_ = binary_entropy(s_) - h_sigma_;
    }

    double s() const noexcept { return s_; }
    double sigma() const noexcept { return sigma_; }
    double rho() const noexcept { return rho_; }
    double gamma() const noexcept { return gamma_; }
    double h_sigma() const noexcept { return h_sigma_; }

    // P(Y = outcome | [g,x] = hit).
    double outcome_prob(bool hit, int outcome) const noexcept {
        const double q0 = hit ? sigma_ - rho_ : sigma_;
        return outcome == 0 ? q0 : 1.0 - q0;
    }

    friend bool operator==(const TestParams& a, const TestParams& b) noexcept {
        return a.s_ == b.s_ && a.sigma_ == b.sigma_;
    }

private:
    double s_;
    double sigma_;
    double rho_ = 0.0;
    double gamma_ = 0.0;
    double h_sigma_ = 0.0;
};

// Independent Bernoulli prior, q_i = P(X_i = 1).
class Prior {
public:
    explicit Prior(std::vector<double> q) : q_(std::move(q)) {
        check_population(static_cast<int>(q_.size()));
        for (double qi : q_)
            if (!(qi > 0.0 && qi < 1.0))
                throw DomainError("prior infection probability must lie in (0,1), got " +
                                  std::to_string(qi));
    }

    static Prior uniform(int n, double q) {
        check_population(n);
        return Prior(std::vector<double>(static_cast<std::size_t>(n), q));
    }

    int size() const noexcept { return static_cast<int>(q_.size()); }
    std::span<const double> q() const noexcept { return q_; }

    double probability(InfectionState x) const {
        if (x.size() != size()) throw DimensionError("state length does not match prior");
        double p = 1.0;
        for (int i = 0; i < size(); ++i) p *= x.test(i) ? q_[i] : 1.0 - q_[i];
        return p;
    }

private:
    std::vector<double> q_;
};

inline double prior_entropy(const Prior& prior) {
    double total = 0.0;
    for (double qi : prior.q()) total += binary_entropy(qi);
    return total;
}

// [g, x] = min(1, g^T x).
inline int group_hit(Group g, InfectionState x) {
    if (g.size() != x.size())
        throw DimensionError("group of size " + std::to_string(g.size()) +
                             " does not match state of size " + std::to_string(x.size()));
    return (g.mask() & x.mask()) != 0 ? 1 : 0;
}

struct TestRecord {
    Group group;
    int outcome = 0;
    TestParams params_used;

    TestRecord(Group g, int y, TestParams params) : group(g), outcome(y), params_used(params) {
        if (y != 0 && y != 1) throw DomainError("test outcome must be 0 or 1");
    }
};

// Probability of a batch of results given the infection state.
inline double likelihood(std::span<const TestRecord> records, InfectionState x) {
    double p = 1.0;
    for (const auto& r : records)
        p *= r.params_used.outcome_prob(group_hit(r.group, x) == 1, r.outcome);
    return p;
}

// Exact distribution over all 2^n infection states. Immutable once built.
class Posterior {
public:
    static Posterior from_prior(const Prior& prior) {
        const int n = prior.size();
        const std::size_t states = std::size_t{1} << n;
        std::vector<double> log_mass(states, 0.0);
        // Built bit by bit so every entry is a sum of n logs.
        for (int i = 0; i < n; ++i) {
            const double l1 = std::log(prior.q()[i]);
            const double l0 = std::log1p(-prior.q()[i]);
            for (std::size_t x = 0; x < states; ++x) log_mass[x] += ((x >> i) & 1u) ? l1 : l0;
        }
        return normalized(n, std::move(log_mass));
    }

    // Arbitrary nonnegative mass; normalized here.
    static Posterior from_mass(int n, std::span<const double> mass) {
        check_population(n);
        if (mass.size() != (std::size_t{1} << n))
            throw DimensionError("mass vector must have 2^n entries");
        std::vector<double> log_mass(mass.size());
        for (std::size_t x = 0; x < mass.size(); ++x) {
            if (!(mass[x] >= 0.0) || !std::isfinite(mass[x]))
                throw DomainError("posterior mass entries must be finite and nonnegative");
            log_mass[x] = mass[x] > 0.0 ? std::log(mass[x])
                                        : -std::numeric_limits<double>::infinity();
        }
        return normalized(n, std::move(log_mass));
    }

    // Max-subtract, exponentiate, renormalize. Throws if all mass vanished.
    static Posterior normalized(int n, std::vector<double> log_mass) {
        check_population(n);
        const double top = *std::max_element(log_mass.begin(), log_mass.end());
        if (!std::isfinite(top))
            throw InconsistentEvidence("observed results have zero probability under the model");
        std::vector<double> mass(log_mass.size());
        double total = 0.0;
        for (std::size_t x = 0; x < mass.size(); ++x) {
            mass[x] = std::exp(log_mass[x] - top);
            total += mass[x];
        }
        const double log_total = std::log(total) + top;
        for (std::size_t x = 0; x < mass.size(); ++x) {
            mass[x] /= total;
            log_mass[x] -= log_total;
        }
        return Posterior(n, std::move(mass), std::move(log_mass));
    }

    int size() const noexcept { return n_; }
    std::size_t states() const noexcept { return mass_.size(); }
    std::span<const double> mass() const noexcept { return mass_; }
    std::span<const double> log_mass() const noexcept { return log_mass_; }
    double operator[](std::uint32_t x) const { return mass_[x]; }

    friend bool operator==(const Posterior&, const Posterior&) = default;

private:
    Posterior(int n, std::vector<double> mass, std::vector<double> log_mass)
        : n_(n), mass_(std::move(mass)), log_mass_(std::move(log_mass)) {}

    int n_ = 0;
    std::vector<double> mass_;
    std::vector<double> log_mass_;
};

inline Posterior posterior_update(const Posterior& posterior, const TestRecord& record) {
    if (record.group.size() != posterior.size())
        throw DimensionError("test group does not match posterior population size");
    const double log_hit = std::log(record.params_used.outcome_prob(true, record.outcome));
    const double log_miss = std::log(record.params_used.outcome_prob(false, record.outcome));
    const std::uint32_t g = record.group.mask();
    auto log_mass = std::vector<double>(posterior.log_mass().begin(), posterior.log_mass().end());
    for (std::uint32_t x = 0; x < log_mass.size(); ++x)
        log_mass[x] += (x & g) != 0 ? log_hit : log_miss;
    return Posterior::normalized(posterior.size(), std::move(log_mass));
}

inline Posterior posterior_update(const Posterior& posterior,
                                  std::span<const TestRecord> records) {
    Posterior out = posterior;
    for (const auto& r : records) out = posterior_update(out, r);
    return out;
}

inline double posterior_entropy(const Posterior& posterior) {
    double h = 0.0;
    for (double m : posterior.mass())
        if (m > 0.0) h -= m * std::log2(m);
    return std::max(0.0, h);
}

// m(i) = P(X_i = 1 | data).
inline std::vector<double> marginals(const Posterior& posterior) {
    std::vector<double> out(static_cast<std::size_t>(posterior.size()), 0.0);
    const auto mass = posterior.mass();
    for (std::uint32_t x = 0; x < mass.size(); ++x) {
        if (mass[x] == 0.0) continue;
        for (std::uint32_t bits = x; bits != 0; bits &= bits - 1)
            out[static_cast<std::size_t>(std::countr_zero(bits))] += mass[x];
    }
    for (double& m : out) m = std::min(1.0, m);
    return out;
}

// f(g): probability that the pool contains at least one infected individual.
inline double infection_prob(const Posterior& posterior, Group g) {
    if (g.size() != posterior.size())
        throw DimensionError("group does not match posterior population size");
    if (g.empty()) throw DomainError("infection probability of an empty group is not a test");
    double f = 0.0;
    const auto mass = posterior.mass();
    for (std::uint32_t x = 0; x < mass.size(); ++x)
        if ((x & g.mask()) != 0) f += mass[x];
    return std::clamp(f, 0.0, 1.0);
}

// f(g) for every mask g at once, in O(n 2^n): a subset-sum (zeta) transform
// accumulates the mass of states avoiding g, then the complement is taken.
inline std::vector<double> all_infection_probs(const Posterior& posterior) {
    const int n = posterior.size();
    const std::uint32_t full = (std::uint32_t{1} << n) - 1u;
    std::vector<double> subset_sum(posterior.mass().begin(), posterior.mass().end());
    for (int i = 0; i < n; ++i) {
        const std::uint32_t bit = std::uint32_t{1} << i;
        for (std::uint32_t s = 0; s <= full; ++s)
            if (s & bit) subset_sum[s] += subset_sum[s ^ bit];
    }
    std::vector<double> f(subset_sum.size());
    for (std::uint32_t g = 0; g <= full; ++g)
        f[g] = std::clamp(1.0 - subset_sum[full & ~g], 0.0, 1.0);
    f[0] = 0.0;
    return f;
}

}  // namespace gt
