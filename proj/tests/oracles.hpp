#pragma once
// Brute-force reference computations used only by tests. Nothing here calls
// into the engine's numerical routines.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

inline double h2(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

inline double entropy(const std::vector<double>& mass) {
    double h = 0.0;
    for (double m : mass)
        if (m > 0.0) h -= m * std::log2(m);
    return h;
}

// Linear-domain prior over all states.
inline std::vector<double> prior_mass(const std::vector<double>& q) {
    const std::size_t states = std::size_t{1} << q.size();
    std::vector<double> mass(states, 1.0);
    for (std::size_t x = 0; x < states; ++x)
        for (std::size_t i = 0; i < q.size(); ++i) mass[x] *= ((x >> i) & 1u) ? q[i] : 1.0 - q[i];
    return mass;
}

struct Obs {
    std::uint32_t group;
    int y;
    double s;
    double sigma;
};

// P(y | x) straight from sensitivity/specificity definitions.
inline double obs_prob(const Obs& o, std::uint32_t x) {
    const bool hit = (o.group & x) != 0;
    const double p_pos = hit ? o.s : 1.0 - o.sigma;
    return o.y == 1 ? p_pos : 1.0 - p_pos;
}

inline std::vector<double> bayes(std::vector<double> mass, const std::vector<Obs>& obs) {
    double total = 0.0;
    for (std::uint32_t x = 0; x < mass.size(); ++x) {
        for (const auto& o : obs) mass[x] *= obs_prob(o, x);
        total += mass[x];
    }
    for (double& m : mass) m /= total;
    return mass;
}

inline double hit_prob(const std::vector<double>& mass, std::uint32_t g) {
    double f = 0.0;
    for (std::uint32_t x = 0; x < mass.size(); ++x)
        if (x & g) f += mass[x];
    return f;
}

// Mutual information of one test computed from the joint table of (X, Y).
inline double mutual_information(const std::vector<double>& mass, std::uint32_t g, double s,
                                 double sigma) {
    double p1 = 0.0;
    for (std::uint32_t x = 0; x < mass.size(); ++x) p1 += mass[x] * obs_prob({g, 1, s, sigma}, x);
    double cond = 0.0;  // H(Y|X)
    for (std::uint32_t x = 0; x < mass.size(); ++x) cond += mass[x] * h2(obs_prob({g, 1, s, sigma}, x));
    return h2(p1) - cond;
}

inline double J(double f, double s, double sigma) {
    const double rho = s + sigma - 1.0;
    return h2(rho * f + 1.0 - sigma) - h2(sigma) - (h2(s) - h2(sigma)) * f;
}

// Argmax of J over [0,1]: coarse scan, then a fine scan of step `fine`
// around the coarse winner.
inline double grid_argmax_J(double s, double sigma, double fine = 1e-7) {
    double best = 0.0, best_v = -1.0;
    for (int i = 0; i <= 10000; ++i) {
        const double x = i * 1e-4;
        const double v = J(x, s, sigma);
        if (v > best_v) best_v = v, best = x;
    }
    const double lo = std::max(0.0, best - 2e-4), hi = std::min(1.0, best + 2e-4);
    for (double x = lo; x <= hi; x += fine) {
        const double v = J(x, s, sigma);
        if (v > best_v) best_v = v, best = x;
    }
    return best;
}

// Random normalized mass with some exact zeros.
inline std::vector<double> random_mass(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> mass(std::size_t{1} << n);
    double total = 0.0;
    for (double& m : mass) {
        const double r = u(rng);
        m = r < 0.1 ? 0.0 : -std::log(r);
        total += m;
    }
    if (total == 0.0) mass[0] = total = 1.0;
    for (double& m : mass) m /= total;
    return mass;
}

// AUC through the Mann-Whitney statistic with midranks.
inline double auc_rank(const std::vector<double>& scores, const std::vector<int>& labels) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
        i = j + 1;
    }
    double pos = 0, rank_sum = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (labels[i]) pos += 1, rank_sum += rank[i];
    const double neg = static_cast<double>(n) - pos;
    return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

}  // namespace oracle
