#pragma once

// Independent checks for the closed forms in theory.hpp: exhaustive
// enumeration where feasible, direct Monte Carlo simulation of the
// probabilistic model otherwise.  Nothing here shares code paths with the
// formulas under test (no pmf recurrences, no binomial coefficients).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>

#include "tiescan/common.hpp"

namespace tiescan::oracle {

// Same quantity as theory::detection_mass_binomial, computed by enumerating
// all 2^K interference patterns and multiplying per-coordinate probabilities.
inline double brute_detection_mass(double epsilon, int K, double gamma) {
    if (K < 1 || K > 24) throw std::invalid_argument("brute_detection_mass: K must lie in [1, 24]");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("brute_detection_mass: gamma must lie in (0, 1]");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("brute_detection_mass: epsilon must be >= 0");
    double sum = 0.0;
    const std::uint32_t masks = 1u << K;
    for (std::uint32_t mask = 0; mask < masks; ++mask) {
        double prob = 1.0;
        int count = 0;
        for (int t = 0; t < K; ++t) {
            if (mask & (1u << t)) {
                prob *= gamma;
                ++count;
            } else {
                prob *= 1.0 - gamma;
            }
        }
        double value = count == 0
                           ? 1.0
                           : (2.0 / std::numbers::pi) * std::atan(epsilon / std::sqrt(double(count)));
        sum += prob * value;
    }
    return gamma * static_cast<double>(K) * sum;
}

namespace detail {

constexpr std::uint64_t kFpTag = 0x0F9A7E;
constexpr std::uint64_t kFnTag = 0x0F97A7;
constexpr std::uint64_t kTieTag = 0x71E5;

// Standard Cauchy as a ratio of two independent normals — deliberately not
// the inverse-CDF route the closed forms are built on.
inline double cauchy_draw(std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    double num = normal(rng);
    double den = normal(rng);
    while (den == 0.0) den = normal(rng);
    return num / den;
}

} // namespace detail

// Fraction of simulated zero coordinates (ternary model, K unit-magnitude
// interferers) that no measurement out of M certifies as zero at threshold
// epsilon.  Converges to theory::fp_exact_ternary.
inline double sim_fp_rate_model(double epsilon, int K, double gamma, int M, int trials,
                                std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("sim_fp_rate_model: trials must be >= 1");
    std::mt19937_64 rng(derive_seed(seed, {detail::kFpTag}));
    std::bernoulli_distribution hit(gamma);
    int misses = 0;
    for (int t = 0; t < trials; ++t) {
        bool certified = false;
        for (int j = 0; j < M && !certified; ++j) {
            if (!hit(rng)) continue; // coordinate absent from this measurement
            int eta = 0;
            for (int i = 0; i < K; ++i) eta += hit(rng) ? 1 : 0;
            double z = eta == 0 ? 0.0 : std::sqrt(double(eta)) * detail::cauchy_draw(rng);
            if (std::fabs(z) <= epsilon) certified = true;
        }
        if (!certified) ++misses;
    }
    return static_cast<double>(misses) / static_cast<double>(trials);
}

// Fraction of simulated nonzero coordinates (magnitude x, other K-1 nonzeros
// at unit magnitude) wrongly certified as zero by at least one of M
// measurements.  Converges to theory::fn_bounds(...).exact_ternary.
inline double sim_fn_rate_model(double epsilon, double gamma, int M, double x, int K, int trials,
                                std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("sim_fn_rate_model: trials must be >= 1");
    if (K < 1) throw std::invalid_argument("sim_fn_rate_model: K must be >= 1");
    std::mt19937_64 rng(derive_seed(seed, {detail::kFnTag}));
    std::bernoulli_distribution hit(gamma);
    int wrong = 0;
    for (int t = 0; t < trials; ++t) {
        bool declared_zero = false;
        for (int j = 0; j < M && !declared_zero; ++j) {
            if (!hit(rng)) continue; // coordinate absent from this measurement
            int eta = 0;
            for (int i = 0; i < K - 1; ++i) eta += hit(rng) ? 1 : 0;
            double z = x + (eta == 0 ? 0.0 : std::sqrt(double(eta)) * detail::cauchy_draw(rng));
            if (std::fabs(z) <= epsilon) declared_zero = true;
        }
        if (declared_zero) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(trials);
}

// Fraction of simulated nonzero coordinates that collect fewer than two
// interference-free measurements out of M.  Converges to
// theory::tie_error_probability.
inline double sim_tie_error(int K, double gamma, int M, int trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("sim_tie_error: trials must be >= 1");
    if (K < 1) throw std::invalid_argument("sim_tie_error: K must be >= 1");
    std::mt19937_64 rng(derive_seed(seed, {detail::kTieTag}));
    std::bernoulli_distribution hit(gamma);
    int failures = 0;
    for (int t = 0; t < trials; ++t) {
        int clean = 0;
        for (int j = 0; j < M && clean < 2; ++j) {
            if (!hit(rng)) continue;
            bool interfered = false;
            for (int i = 0; i < K - 1 && !interfered; ++i) interfered = hit(rng);
            if (!interfered) ++clean;
        }
        if (clean < 2) ++failures;
    }
    return static_cast<double>(failures) / static_cast<double>(trials);
}

} // namespace tiescan::oracle
