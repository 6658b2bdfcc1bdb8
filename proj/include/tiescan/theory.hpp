#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace tiescan::theory {

namespace detail {

inline void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

inline bool is_prob(double g) { return g > 0.0 && g <= 1.0; }

} // namespace detail

// P(|C| <= t) for a standard Cauchy ratio C: (2/pi) * arctan(t).
inline double cauchy_abs_cdf(double t) {
    detail::require(!std::isnan(t) && t >= 0.0, "cauchy_abs_cdf: t must be >= 0");
    if (std::isinf(t)) return 1.0;
    return (2.0 / std::numbers::pi) * std::atan(t);
}

// Signal-independent miss bound for one zero coordinate across M measurements:
// only the interference-free event certifies, so [1 - gamma*(1-gamma)^K]^M.
inline double fp_worst_bound(std::int64_t K, double gamma, std::int64_t M) {
    detail::require(K >= 1, "fp_worst_bound: K must be >= 1");
    detail::require(gamma > 0.0 && gamma < 1.0, "fp_worst_bound: gamma must lie in (0, 1)");
    detail::require(M >= 1, "fp_worst_bound: M must be >= 1");
    return std::pow(1.0 - gamma * std::pow(1.0 - gamma, static_cast<double>(K)), static_cast<double>(M));
}

// Energy-aware miss bound: interference is replaced by its mean
// sigma^2 + gamma * sum(x^2), which can only weaken the detection rate.
// epsilon == 0 gives exactly 1 regardless of the denominator.
inline double fp_data_bound(double epsilon, double gamma, std::int64_t M, double signal_energy,
                            double sigma = 0.0) {
    detail::require(epsilon >= 0.0 && std::isfinite(epsilon), "fp_data_bound: epsilon must be >= 0");
    detail::require(detail::is_prob(gamma), "fp_data_bound: gamma must lie in (0, 1]");
    detail::require(M >= 1, "fp_data_bound: M must be >= 1");
    detail::require(signal_energy >= 0.0 && std::isfinite(signal_energy),
                    "fp_data_bound: signal_energy must be >= 0");
    detail::require(sigma >= 0.0 && std::isfinite(sigma), "fp_data_bound: sigma must be >= 0");
    if (epsilon == 0.0) return 1.0;
    double denom = std::sqrt(sigma * sigma + gamma * signal_energy);
    double c = denom == 0.0 ? 1.0 : cauchy_abs_cdf(epsilon / denom);
    return std::pow(1.0 - gamma * c, static_cast<double>(M));
}

// K times the per-measurement zero-detection rate for unit-magnitude nonzeros
// whose interference count is Binomial(K, gamma):
//   gamma * K * E[(2/pi) arctan(epsilon / sqrt(Z))],  Z ~ Binomial(K, gamma),
// with the Z = 0 term contributing its full probability mass (an interference-
// free ratio reproduces the coordinate exactly, whatever epsilon is).
inline double detection_mass_binomial(double epsilon, std::int64_t K, double gamma) {
    detail::require(epsilon >= 0.0 && std::isfinite(epsilon),
                    "detection_mass_binomial: epsilon must be >= 0");
    detail::require(K >= 1, "detection_mass_binomial: K must be >= 1");
    detail::require(detail::is_prob(gamma), "detection_mass_binomial: gamma must lie in (0, 1]");
    if (gamma == 1.0)
        return static_cast<double>(K) * cauchy_abs_cdf(epsilon / std::sqrt(static_cast<double>(K)));
    double pmf = std::pow(1.0 - gamma, static_cast<double>(K));
    double sum = pmf; // Z = 0 term, coefficient 1
    const double odds = gamma / (1.0 - gamma);
    for (std::int64_t k = 1; k <= K; ++k) {
        pmf *= odds * static_cast<double>(K - k + 1) / static_cast<double>(k);
        sum += pmf * cauchy_abs_cdf(epsilon / std::sqrt(static_cast<double>(k)));
    }
    return gamma * static_cast<double>(K) * sum;
}

// Poisson(lambda) limit of detection_mass_binomial with lambda = gamma * K:
//   lambda e^{-lambda} + lambda e^{-lambda} sum_{k>=1} (2/pi) arctan(eps/sqrt(k)) lambda^k / k!.
// The series is truncated once the remaining tail mass (times the maximal
// coefficient 1, times lambda) drops below tail_tol of the accumulated sum.
inline double detection_mass_poisson(double epsilon, double lambda, double tail_tol = 1e-14) {
    detail::require(epsilon >= 0.0 && std::isfinite(epsilon),
                    "detection_mass_poisson: epsilon must be >= 0");
    detail::require(lambda > 0.0 && lambda <= 600.0,
                    "detection_mass_poisson: lambda must lie in (0, 600]"); // exp(-lambda) underflows past ~745
    detail::require(tail_tol > 0.0, "detection_mass_poisson: tail_tol must be > 0");
    double pmf = std::exp(-lambda);
    double acc = pmf;
    double cum = pmf;
    for (std::int64_t k = 1; k <= 100000; ++k) {
        pmf *= lambda / static_cast<double>(k);
        acc += pmf * cauchy_abs_cdf(epsilon / std::sqrt(static_cast<double>(k)));
        cum += pmf;
        double tail = std::max(0.0, 1.0 - cum);
        if (static_cast<double>(k) >= lambda && lambda * tail < tail_tol * (lambda * acc))
            break;
    }
    return lambda * acc;
}

// Exact per-coordinate miss probability for ternary signals:
// [1 - detection_mass_binomial / K]^M.
inline double fp_exact_ternary(double epsilon, std::int64_t K, double gamma, std::int64_t M) {
    detail::require(M >= 1, "fp_exact_ternary: M must be >= 1");
    double mass = detection_mass_binomial(epsilon, K, gamma);
    return std::pow(1.0 - mass / static_cast<double>(K), static_cast<double>(M));
}

struct FnBounds {
    double exact_ternary; // interference count ~ Binomial(K-1, gamma), unit energies
    double loose;         // 1 - [1 - gamma (2/pi) arctan(epsilon)]^M
};

// Probability that a nonzero coordinate of magnitude |x_value| is wrongly
// declared zero, given K total nonzeros with the other K-1 at unit magnitude.
inline FnBounds fn_bounds(double epsilon, double gamma, std::int64_t M, double x_value,
                          std::int64_t K) {
    detail::require(epsilon >= 0.0 && std::isfinite(epsilon), "fn_bounds: epsilon must be >= 0");
    detail::require(detail::is_prob(gamma), "fn_bounds: gamma must lie in (0, 1]");
    detail::require(M >= 1, "fn_bounds: M must be >= 1");
    detail::require(std::isfinite(x_value) && x_value != 0.0,
                    "fn_bounds: x_value must be finite and nonzero");
    detail::require(K >= 1, "fn_bounds: K must be >= 1");

    const double ax = std::fabs(x_value);
    const std::int64_t KK = K - 1; // interfering nonzeros
    double sum = 0.0;
    auto term = [&](std::int64_t k) {
        if (k == 0) return ax <= epsilon ? 1.0 : 0.0;
        double rk = std::sqrt(static_cast<double>(k));
        return (std::atan((epsilon + ax) / rk) - std::atan((ax - epsilon) / rk)) / std::numbers::pi;
    };
    if (KK == 0) {
        sum = term(0);
    } else if (gamma == 1.0) {
        sum = term(KK);
    } else {
        double pmf = std::pow(1.0 - gamma, static_cast<double>(KK));
        sum = pmf * term(0);
        const double odds = gamma / (1.0 - gamma);
        for (std::int64_t k = 1; k <= KK; ++k) {
            pmf *= odds * static_cast<double>(KK - k + 1) / static_cast<double>(k);
            sum += pmf * term(k);
        }
    }
    FnBounds out;
    out.exact_ternary = 1.0 - std::pow(1.0 - gamma * sum, static_cast<double>(M));
    out.loose =
        1.0 - std::pow(1.0 - gamma * cauchy_abs_cdf(epsilon), static_cast<double>(M));
    return out;
}

// The multiplier c(K) in M ~ c(K) * K * log(N/delta) for support detection;
// approaches e from above as K grows.
inline double support_complexity_constant(std::int64_t K) {
    detail::require(K >= 2, "support_complexity_constant: K must be >= 2 (K=1 is degenerate)");
    double p0 = (1.0 / static_cast<double>(K)) *
                std::pow(1.0 - 1.0 / static_cast<double>(K), static_cast<double>(K));
    return 1.0 / (static_cast<double>(K) * -std::log1p(-p0));
}

struct SupportComplexity {
    std::int64_t exact;
    double approx; // e * K * log(N / delta)
};

// Measurements needed so that, with probability >= 1 - delta, every zero
// coordinate sees at least one interference-free measurement at gamma = 1/K.
inline SupportComplexity support_sample_complexity(std::int64_t N, std::int64_t K, double delta) {
    detail::require(K >= 2, "support_sample_complexity: K must be >= 2 (K=1 is degenerate)");
    detail::require(N >= K, "support_sample_complexity: N must be >= K");
    detail::require(delta > 0.0 && delta < 1.0, "support_sample_complexity: delta must lie in (0, 1)");
    double p0 = (1.0 / static_cast<double>(K)) *
                std::pow(1.0 - 1.0 / static_cast<double>(K), static_cast<double>(K));
    double exact = std::log(static_cast<double>(N) / delta) / -std::log1p(-p0);
    SupportComplexity out;
    out.exact = static_cast<std::int64_t>(std::ceil(exact));
    out.approx = std::numbers::e * static_cast<double>(K) * std::log(static_cast<double>(N) / delta);
    return out;
}

// P(a given nonzero coordinate collects fewer than two interference-free
// measurements) = (1-p)^M + M p (1-p)^{M-1}, p = gamma (1-gamma)^{K-1}.
inline double tie_error_probability(std::int64_t K, double gamma, std::int64_t M) {
    detail::require(K >= 1, "tie_error_probability: K must be >= 1");
    detail::require(detail::is_prob(gamma), "tie_error_probability: gamma must lie in (0, 1]");
    detail::require(M >= 2, "tie_error_probability: M must be >= 2");
    double p = gamma * std::pow(1.0 - gamma, static_cast<double>(K - 1));
    return std::pow(1.0 - p, static_cast<double>(M)) +
           static_cast<double>(M) * p * std::pow(1.0 - p, static_cast<double>(M - 1));
}

struct TieComplexity {
    std::int64_t exact;       // minimal M with K * tie_error_probability <= delta
    std::int64_t closed_form; // ceil(1.551 e K log(K/delta))
};

// Measurement budget for exact full recovery by ties alone at gamma = 1/K.
// The closed form is only certified for delta <= 0.05.
inline TieComplexity tie_sample_complexity(std::int64_t K, double delta) {
    detail::require(K >= 2, "tie_sample_complexity: K must be >= 2");
    detail::require(delta > 0.0 && delta <= 0.05,
                    "tie_sample_complexity: delta must lie in (0, 0.05]");
    const double gamma = 1.0 / static_cast<double>(K);
    auto ok = [&](std::int64_t M) {
        return static_cast<double>(K) * tie_error_probability(K, gamma, M) <= delta;
    };
    std::int64_t hi = 2;
    while (!ok(hi)) {
        if (hi > (std::int64_t{1} << 40))
            throw std::runtime_error("tie_sample_complexity: search did not converge");
        hi *= 2;
    }
    std::int64_t lo = 2;
    while (lo < hi) { // first M satisfying the target (predicate is monotone)
        std::int64_t mid = lo + (hi - lo) / 2;
        if (ok(mid))
            hi = mid;
        else
            lo = mid + 1;
    }
    TieComplexity out;
    out.exact = lo;
    out.closed_form = static_cast<std::int64_t>(
        std::ceil(1.551 * std::numbers::e * static_cast<double>(K) *
                  std::log(static_cast<double>(K) / delta)));
    return out;
}

// Root in alpha of
//   (delta/K)^alpha + (1+alpha) log(K/delta) (delta/K)^alpha / (log(1-p)(1-1/p)) = 1,
// p = (1/K)(1-1/K)^{K-1}. T is strictly decreasing with T(0+) = 1 + L/denom > 1
// and T -> 0, so a unique root exists; bracket adaptively, then bisect to 1e-8.
inline double solve_alpha(double delta, std::int64_t K) {
    detail::require(delta > 0.0 && delta <= 0.05, "solve_alpha: delta must lie in (0, 0.05]");
    detail::require(K >= 2, "solve_alpha: K must be >= 2");
    const double p = (1.0 / static_cast<double>(K)) *
                     std::pow(1.0 - 1.0 / static_cast<double>(K), static_cast<double>(K - 1));
    const double denom = std::log1p(-p) * (1.0 - 1.0 / p); // (neg)*(neg) > 0
    const double base = delta / static_cast<double>(K);
    const double L = std::log(static_cast<double>(K) / delta);
    auto T = [&](double a) { return std::pow(base, a) * (1.0 + (1.0 + a) * L / denom); };

    double lo = 1e-9;
    detail::require(T(lo) > 1.0, "solve_alpha: no root (T <= 1 near zero)");
    double hi = 1.0;
    for (int i = 0; T(hi) >= 1.0; ++i) {
        detail::require(i < 64, "solve_alpha: upper bracket did not close");
        hi *= 2.0;
    }
    while (hi - lo > 1e-8) {
        double mid = 0.5 * (lo + hi);
        if (T(mid) - 1.0 > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Noisy-measurement analogue of fp_worst_bound: an interference-free ratio
// still carries sigma-scaled noise, so only a (2/pi) arctan(eps/sigma)
// fraction of those measurements certifies.
inline double noisy_fp_worst_bound(double epsilon, double sigma, std::int64_t K, double gamma,
                                   std::int64_t M) {
    detail::require(epsilon >= 0.0 && std::isfinite(epsilon),
                    "noisy_fp_worst_bound: epsilon must be >= 0");
    detail::require(sigma > 0.0 && std::isfinite(sigma), "noisy_fp_worst_bound: sigma must be > 0");
    detail::require(K >= 1, "noisy_fp_worst_bound: K must be >= 1");
    detail::require(gamma > 0.0 && gamma < 1.0, "noisy_fp_worst_bound: gamma must lie in (0, 1)");
    detail::require(M >= 1, "noisy_fp_worst_bound: M must be >= 1");
    return std::pow(1.0 - gamma * cauchy_abs_cdf(epsilon / sigma) *
                              std::pow(1.0 - gamma, static_cast<double>(K)),
                    static_cast<double>(M));
}

// Measurement budget under noise: the detection threshold keeps only a
// (2/pi) arctan(eps/sigma) fraction of interference-free measurements useful,
// so the noiseless budget grows by that factor's inverse.
inline std::int64_t noisy_support_sample_complexity(std::int64_t N, std::int64_t K, double delta,
                                                    double epsilon, double sigma) {
    detail::require(K >= 2, "noisy_support_sample_complexity: K must be >= 2");
    detail::require(N >= K, "noisy_support_sample_complexity: N must be >= K");
    detail::require(delta > 0.0 && delta < 1.0,
                    "noisy_support_sample_complexity: delta must lie in (0, 1)");
    detail::require(epsilon > 0.0 && std::isfinite(epsilon),
                    "noisy_support_sample_complexity: epsilon must be > 0");
    detail::require(sigma > 0.0 && std::isfinite(sigma),
                    "noisy_support_sample_complexity: sigma must be > 0");
    double c = cauchy_abs_cdf(epsilon / sigma);
    double m = std::numbers::e * static_cast<double>(K) *
               std::log(static_cast<double>(N) / delta) / c;
    return static_cast<std::int64_t>(std::ceil(m));
}

} // namespace tiescan::theory
