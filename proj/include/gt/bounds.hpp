#pragma once
// Sample-complexity bounds for MI-driven adaptive testing.
//
// The achieved pool infection probability F is modeled as N(center, nu^2).
// J is bounded below by a quadratic minorant J_A built from
// h(u) >= 1 - A (u - 1/2)^2 (valid for A = 4), whose mean and variance under
// the Gaussian give a Chebyshev bound on the number of tests needed to bring
// the conditional entropy to delta * H(X).

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "gt/core_model.hpp"
#include "gt/design.hpp"

namespace gt {

inline constexpr double kDefaultMinorantA = 4.0;

// -A rho^2 x^2 - B_A x - A (1/2 - sigma)^2 + 1 - h(sigma),
// with B_A = 2 A (1/2 - sigma) rho + gamma, so that J_A <= J for A = 4.
inline double minorant_slope(const TestParams& params, double A) {
    return 2.0 * A * (0.5 - params.sigma()) * params.rho() + params.gamma();
}

inline double J_quadratic(double x, const TestParams& params, double A = kDefaultMinorantA) {
    check_probability(x, "minorant argument");
    if (!(A > 0.0)) throw DomainError("minorant parameter A must be positive");
    const double rho2 = params.rho() * params.rho();
    const double c = 0.5 - params.sigma();
    return -A * rho2 * x * x - minorant_slope(params, A) * x - A * c * c + 1.0 - params.h_sigma();
}

struct MinorantMoments {
    double B_A = 0.0;
    double E_F = 0.0;  // bits per test
    double V_F = 0.0;  // bits^2
    // E_F <= 0 makes every bound below vacuous.
    bool feasible() const noexcept { return E_F > 0.0; }
};

// Mean and variance of J_A(F) for F ~ N(center, nu^2).
inline MinorantMoments minorant_moments(double center, double nu, const TestParams& params,
                                        double A = kDefaultMinorantA) {
    if (!(nu >= 0.0)) throw DomainError("nu must be nonnegative");
    if (!(A > 0.0)) throw DomainError("minorant parameter A must be positive");
    const double rho2 = params.rho() * params.rho();
    const double c = 0.5 - params.sigma();
    const double B = minorant_slope(params, A);
    const double nu2 = nu * nu;
    MinorantMoments m;
    m.B_A = B;
    m.E_F = -A * rho2 * nu2 - A * c * c + 1.0 - params.h_sigma() - A * rho2 * center * center -
            B * center;
    const double lin = B + 2.0 * A * rho2 * center;
    m.V_F = 2.0 * A * A * rho2 * rho2 * nu2 * nu2 + lin * lin * nu2;
    return m;
}

// T_E = (1 - delta) H(X) / E_F; empty when the bound is infeasible.
inline std::optional<double> sample_complexity(double prior_entropy_bits, double delta,
                                               double E_F) {
    if (!(delta >= 0.0 && delta <= 1.0)) throw DomainError("delta must lie in [0,1]");
    if (!(E_F > 0.0)) return std::nullopt;
    return (1.0 - delta) * prior_entropy_bits / E_F;
}

// Lower bound on P(H_T <= delta H(X)) for T >= T_E:
// 1 - T V / (T V + ((T - T_E) E)^2).
inline double chebyshev_curve(double T, double T_E, double E_F, double V_F) {
    if (T < T_E) throw DomainError("Chebyshev bound requires T >= T_E");
    const double gap = (T - T_E) * E_F;
    const double spread = T * V_F;
    if (gap == 0.0) return 0.0;
    return 1.0 - spread / (spread + gap * gap);
}

// Multiplicative penalty on T_E from centering the design at f' instead of f*.
// Moments use the true parameters; only the center moves.
inline std::optional<double> mismatch_alpha(const TestParams& true_params, double f_prime,
                                            double f_star, double nu_prime,
                                            double A = kDefaultMinorantA) {
    const auto moments = minorant_moments(f_prime, nu_prime, true_params, A);
    if (!moments.feasible()) return std::nullopt;
    const double rho2 = true_params.rho() * true_params.rho();
    const double B = moments.B_A;
    const double num =
        A * rho2 * f_prime * f_prime + B * f_prime - A * rho2 * f_star * f_star - B * f_star;
    return num / moments.E_F;
}

struct IterationWindow {
    int first = 5;  // 1-based, inclusive
    int last = 15;
};

inline constexpr IterationWindow kMatchedWindow{5, 15};
inline constexpr IterationWindow kMismatchedWindow{3, 7};

struct GaussianFit {
    double mean = 0.0;
    double nu = 0.0;
    IterationWindow window;
    std::size_t samples = 0;
};

// Pools the selected f values of every run inside the window.
// runs[r][t-1] is the value selected at iteration t of run r.
inline GaussianFit estimate_nu(std::span<const std::vector<double>> runs,
                               IterationWindow window = kMatchedWindow) {
    if (window.first < 1 || window.last < window.first)
        throw DomainError("iteration window must satisfy 1 <= first <= last");
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& run : runs)
        for (int t = window.first; t <= window.last && t <= static_cast<int>(run.size()); ++t) {
            sum += run[static_cast<std::size_t>(t - 1)];
            ++count;
        }
    if (count < 2) throw InsufficientData("need at least two f samples inside the window");
    const double mean = sum / static_cast<double>(count);
    double ss = 0.0;
    for (const auto& run : runs)
        for (int t = window.first; t <= window.last && t <= static_cast<int>(run.size()); ++t) {
            const double d = run[static_cast<std::size_t>(t - 1)] - mean;
            ss += d * d;
        }
    return {mean, std::sqrt(ss / static_cast<double>(count - 1)), window, count};
}

inline GaussianFit estimate_nu(std::span<const double> samples) {
    std::vector<std::vector<double>> one{std::vector<double>(samples.begin(), samples.end())};
    return estimate_nu(one, IterationWindow{1, static_cast<int>(std::max<std::size_t>(1, samples.size()))});
}

struct ComplexityReport {
    double A = kDefaultMinorantA;
    double f_star = 0.0;
    std::optional<double> f_prime;
    double nu = 0.0;
    MinorantMoments moments;
    std::optional<double> T_E;
    std::optional<double> alpha;
    std::optional<MinorantMoments> mismatched_moments;
    // T -> lower bound on the stop probability; starts at ceil of the
    // (penalized) bound.
    std::map<int, double> probability_curve;
};

struct BoundsInputs {
    TestParams true_params;
    std::optional<TestParams> assumed_params;
    double prior_entropy_bits = 0.0;
    double delta = 0.0;
    double nu = 0.0;
    std::optional<double> nu_prime;
    double A = kDefaultMinorantA;
    int curve_length = 20;
};

inline ComplexityReport complexity_report(const BoundsInputs& in) {
    ComplexityReport r;
    r.A = in.A;
    r.nu = in.nu;
    r.f_star = optimal_f(in.true_params).f_star;
    r.moments = minorant_moments(r.f_star, in.nu, in.true_params, in.A);
    r.T_E = sample_complexity(in.prior_entropy_bits, in.delta, r.moments.E_F);
    if (!r.T_E) return r;

    double start = *r.T_E;
    MinorantMoments curve_moments = r.moments;
    if (in.assumed_params && !(*in.assumed_params == in.true_params)) {
        r.f_prime = optimal_f(*in.assumed_params).f_star;
        const double nu_prime = in.nu_prime.value_or(in.nu);
        r.mismatched_moments = minorant_moments(*r.f_prime, nu_prime, in.true_params, in.A);
        r.alpha = mismatch_alpha(in.true_params, *r.f_prime, r.f_star, nu_prime, in.A);
        if (!r.alpha) return r;
        start = (1.0 + *r.alpha) * *r.T_E;
        curve_moments = *r.mismatched_moments;
    }
    const int first = static_cast<int>(std::ceil(start));
    for (int T = std::max(first, 1); T < first + in.curve_length; ++T)
        r.probability_curve[T] = chebyshev_curve(T, start, curve_moments.E_F, curve_moments.V_F);
    return r;
}

}  // namespace gt
