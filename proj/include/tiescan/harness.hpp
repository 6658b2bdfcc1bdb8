#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "tiescan/common.hpp"
#include "tiescan/decoder.hpp"
#include "tiescan/sensing.hpp"
#include "tiescan/theory.hpp"

namespace tiescan {

enum class GammaRule { inverse_k, fixed };
enum class SuccessCriterion { full_recovery, support_recovery };

struct ExperimentSpec {
    std::int64_t n = 0;
    std::vector<std::int64_t> k_values;
    std::vector<std::int64_t> m_values;
    std::int64_t trials = 0;
    GammaRule gamma_rule = GammaRule::inverse_k;
    double gamma_fixed = 0.0; // only read when gamma_rule == fixed
    double epsilon = 0.0;
    double sigma = 0.0;
    SuccessCriterion criterion = SuccessCriterion::full_recovery;
    DecoderConfig decoder; // decoder.epsilon is overridden by `epsilon` per trial
    std::uint64_t master_seed = 1;

    double gamma_for(std::int64_t k) const {
        return gamma_rule == GammaRule::fixed ? gamma_fixed : 1.0 / static_cast<double>(k);
    }

    void validate() const {
        if (n < 1) throw std::invalid_argument("ExperimentSpec: n must be >= 1");
        if (k_values.empty()) throw std::invalid_argument("ExperimentSpec: k_values is empty");
        for (std::int64_t k : k_values)
            if (k < 1 || k > n)
                throw std::invalid_argument("ExperimentSpec: every k must lie in [1, n]");
        if (m_values.empty()) throw std::invalid_argument("ExperimentSpec: m_values is empty");
        for (std::int64_t m : m_values)
            if (m < 1) throw std::invalid_argument("ExperimentSpec: every m must be >= 1");
        if (trials < 1) throw std::invalid_argument("ExperimentSpec: trials must be >= 1");
        if (gamma_rule == GammaRule::fixed && !(gamma_fixed > 0.0 && gamma_fixed <= 1.0))
            throw std::invalid_argument("ExperimentSpec: fixed gamma must lie in (0, 1]");
        if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
            throw std::invalid_argument("ExperimentSpec: epsilon must be finite and >= 0");
        if (!(sigma >= 0.0) || !std::isfinite(sigma))
            throw std::invalid_argument("ExperimentSpec: sigma must be finite and >= 0");
        DecoderConfig cfg = decoder;
        cfg.epsilon = epsilon;
        cfg.validate();
    }
};

struct TrialOutcome {
    bool success = false;
    std::int64_t false_positives = 0;  // true zeros reported nonzero
    std::int64_t false_negatives = 0;  // true nonzeros reported zero
    std::int64_t undetermined = 0;
    std::int64_t iterations = 0;
    std::int64_t tie_violations = 0; // recovered values that disagree with the truth
    double wall_seconds = 0.0;
};

struct CellStats {
    std::int64_t k = 0;
    std::int64_t m = 0;
    std::int64_t trials = 0;
    std::int64_t successes = 0;
    double success_rate = 0.0;
    double mean_fp = 0.0;
    double mean_fn = 0.0;
    double mean_undetermined = 0.0;
    double mean_iterations = 0.0;
    double gamma = 0.0;
};

struct GridResult {
    ExperimentSpec spec;
    std::vector<CellStats> cells; // k-major, m-minor, matching spec order
    std::string version;
    std::int64_t tie_violations_total = 0;

    const CellStats& cell(std::size_t ki, std::size_t mi) const {
        return cells.at(ki * spec.m_values.size() + mi);
    }
};

// k nonzero entries, each +1 or -1 with equal probability, placed uniformly.
inline Signal generate_ternary_signal(std::int64_t n, std::int64_t k, std::uint64_t seed) {
    if (n < 1 || k < 0 || k > n)
        throw std::invalid_argument("generate_ternary_signal: need 0 <= k <= n, n >= 1");
    std::mt19937_64 rng(seed);
    std::vector<std::int64_t> idx;
    detail::sample_distinct(n, k, rng, idx);
    std::bernoulli_distribution flip(0.5);
    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    for (std::int64_t i : idx) x[static_cast<std::size_t>(i)] = flip(rng) ? 1.0 : -1.0;
    return Signal(std::move(x));
}

namespace detail {

inline int resolve_jobs(int jobs) {
    if (jobs > 0) return jobs;
    if (const char* env = std::getenv("TIESCAN_JOBS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Work items are claimed through an atomic counter, so thread count affects
// only scheduling; every item's result lands in its own slot and callers
// aggregate in index order, keeping outputs independent of `jobs`.
inline void parallel_for(std::int64_t total, int jobs,
                         const std::function<void(std::int64_t)>& body) {
    jobs = resolve_jobs(jobs);
    if (total < jobs) jobs = static_cast<int>(total);
    if (jobs <= 1) {
        for (std::int64_t i = 0; i < total; ++i) body(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto worker = [&]() {
        for (;;) {
            std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= total) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace detail

inline TrialOutcome run_trial(const ExperimentSpec& spec, std::int64_t k, std::int64_t m,
                              std::int64_t trial) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto key = [&](std::uint64_t tag) {
        return derive_seed(spec.master_seed, {tag, static_cast<std::uint64_t>(k),
                                              static_cast<std::uint64_t>(m),
                                              static_cast<std::uint64_t>(trial)});
    };
    Signal x = generate_ternary_signal(spec.n, k, key(stream::signal));
    SparseDesign d = SparseDesign::generate(spec.n, m, spec.gamma_for(k), key(stream::design));
    MeasurementSet ms = measure(x, d);
    if (spec.sigma > 0.0) ms = add_noise(ms, spec.sigma, key(stream::noise));

    TrialOutcome out;
    if (spec.criterion == SuccessCriterion::support_recovery) {
        std::vector<std::int64_t> detected = support_detect(d, ms, spec.epsilon);
        std::vector<char> in_detected(static_cast<std::size_t>(spec.n), 0);
        for (std::int64_t i : detected) in_detected[static_cast<std::size_t>(i)] = 1;
        for (std::int64_t i = 0; i < spec.n; ++i) {
            bool truth_nonzero = x[i] != 0.0;
            bool claimed = in_detected[static_cast<std::size_t>(i)] != 0;
            if (claimed && !truth_nonzero) ++out.false_positives;
            if (!claimed && truth_nonzero) ++out.false_negatives;
        }
        out.iterations = 1;
        out.success = out.false_positives == 0 && out.false_negatives == 0;
    } else {
        DecoderConfig cfg = spec.decoder;
        cfg.epsilon = spec.epsilon;
        DecodeResult res = decode(d, ms, cfg);
        // success = support matches exactly and values agree within 1e-9
        // (round-1 ternary recoveries are bit-exact; later rounds work on
        // residuals carrying ordinary rounding noise)
        const auto close = [](double v, double t) {
            return std::fabs(v - t) <= std::max(1e-9, 1e-9 * std::fabs(t));
        };
        bool ok = true;
        for (std::int64_t i = 0; i < spec.n; ++i) {
            const CoordinateStatus& st = res.statuses[static_cast<std::size_t>(i)];
            double truth = x[i];
            switch (st.kind) {
            case CoordinateKind::zero:
                if (truth != 0.0) {
                    ++out.false_negatives;
                    ok = false;
                }
                break;
            case CoordinateKind::recovered:
                if (truth == 0.0) {
                    ++out.false_positives;
                    ok = false;
                }
                if (!close(st.value, truth)) {
                    ++out.tie_violations;
                    ok = false;
                }
                break;
            case CoordinateKind::undetermined:
                ++out.undetermined;
                ok = false;
                break;
            }
        }
        out.iterations = res.iterations_used;
        out.success = ok;
    }
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

inline GridResult run_grid(const ExperimentSpec& spec, int jobs = 0) {
    spec.validate();
    const std::size_t kc = spec.k_values.size();
    const std::size_t mc = spec.m_values.size();
    const std::int64_t cells = static_cast<std::int64_t>(kc * mc);
    const std::int64_t total = cells * spec.trials;

    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(total));
    detail::parallel_for(total, jobs, [&](std::int64_t idx) {
        const std::int64_t cell = idx / spec.trials;
        const std::int64_t trial = idx % spec.trials;
        const std::int64_t k = spec.k_values[static_cast<std::size_t>(cell) / mc];
        const std::int64_t m = spec.m_values[static_cast<std::size_t>(cell) % mc];
        outcomes[static_cast<std::size_t>(idx)] = run_trial(spec, k, m, trial);
    });

    GridResult grid;
    grid.spec = spec;
    grid.version = kVersion;
    grid.cells.resize(static_cast<std::size_t>(cells));
    for (std::int64_t cell = 0; cell < cells; ++cell) {
        CellStats& cs = grid.cells[static_cast<std::size_t>(cell)];
        cs.k = spec.k_values[static_cast<std::size_t>(cell) / mc];
        cs.m = spec.m_values[static_cast<std::size_t>(cell) % mc];
        cs.trials = spec.trials;
        cs.gamma = spec.gamma_for(cs.k);
        double fp = 0, fn = 0, und = 0, iters = 0;
        for (std::int64_t t = 0; t < spec.trials; ++t) {
            const TrialOutcome& o = outcomes[static_cast<std::size_t>(cell * spec.trials + t)];
            cs.successes += o.success ? 1 : 0;
            fp += static_cast<double>(o.false_positives);
            fn += static_cast<double>(o.false_negatives);
            und += static_cast<double>(o.undetermined);
            iters += static_cast<double>(o.iterations);
            grid.tie_violations_total += o.tie_violations;
        }
        const double tr = static_cast<double>(spec.trials);
        cs.success_rate = static_cast<double>(cs.successes) / tr;
        cs.mean_fp = fp / tr;
        cs.mean_fn = fn / tr;
        cs.mean_undetermined = und / tr;
        cs.mean_iterations = iters / tr;
    }
    return grid;
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

inline std::string csv_string(const GridResult& grid) {
    std::string out = "N,K,M,trials,successes,success_rate,mean_fp,mean_fn,mean_undetermined,"
                      "mean_iterations,gamma,epsilon,sigma,seed\n";
    for (const CellStats& c : grid.cells) {
        out += std::to_string(grid.spec.n) + ',' + std::to_string(c.k) + ',' +
               std::to_string(c.m) + ',' + std::to_string(c.trials) + ',' +
               std::to_string(c.successes) + ',' + detail::fmt_double(c.success_rate) + ',' +
               detail::fmt_double(c.mean_fp) + ',' + detail::fmt_double(c.mean_fn) + ',' +
               detail::fmt_double(c.mean_undetermined) + ',' +
               detail::fmt_double(c.mean_iterations) + ',' + detail::fmt_double(c.gamma) + ',' +
               detail::fmt_double(grid.spec.epsilon) + ',' + detail::fmt_double(grid.spec.sigma) +
               ',' + std::to_string(grid.spec.master_seed) + '\n';
    }
    return out;
}

inline void emit_csv(const GridResult& grid, const std::string& path) {
    std::ofstream f(path, std::ios::binary); // binary keeps line endings as written
    if (!f) throw std::runtime_error("emit_csv: cannot open " + path);
    f << csv_string(grid);
    if (!f) throw std::runtime_error("emit_csv: write failed for " + path);
}

struct McFpResult {
    std::int64_t trials = 0;
    std::int64_t misses = 0; // zero coordinate never certified by any measurement
    double rate = 0.0;
    std::optional<double> exact;   // closed-form rate; noiseless runs only
    std::optional<double> z_score; // (rate - exact) / binomial standard error
};

// Pipeline estimate of the per-coordinate miss rate for a true zero: each
// trial plants a ternary instance, measures it, and asks whether one fixed
// zero coordinate is certified by the absolute-minimum rule.  A coordinate
// absent from every measurement counts as a miss.
//
// The instance is built over k+1 rows (the scored zero coordinate plus the k
// nonzeros) rather than all n: design entries are drawn independently per
// row, and neither the measurements nor the scored ratio column reads any
// other row, so the scored event has exactly the same distribution while the
// generation cost drops from O(m*n*gamma) to O(m*(1 + k*gamma)) per trial.
// The ambient n only fixes which zero coordinate is scored, and all zero
// coordinates are exchangeable.
inline McFpResult mc_fp_rate(std::int64_t n, std::int64_t k, std::int64_t m, double gamma,
                             double epsilon, std::int64_t trials, std::uint64_t seed,
                             double sigma = 0.0, int jobs = 0) {
    if (n < 1 || k < 0 || k >= n)
        throw std::invalid_argument("mc_fp_rate: need 0 <= k < n so a zero coordinate exists");
    if (trials < 1) throw std::invalid_argument("mc_fp_rate: trials must be >= 1");

    std::vector<char> miss(static_cast<std::size_t>(trials), 0);
    detail::parallel_for(trials, jobs, [&](std::int64_t t) {
        const auto key = [&](std::uint64_t tag) {
            return derive_seed(seed, {tag, static_cast<std::uint64_t>(t)});
        };
        std::mt19937_64 sign_rng(key(stream::signal));
        std::bernoulli_distribution flip(0.5);
        std::vector<double> xv(static_cast<std::size_t>(k + 1), 0.0);
        for (std::int64_t i = 1; i <= k; ++i)
            xv[static_cast<std::size_t>(i)] = flip(sign_rng) ? 1.0 : -1.0;
        Signal x(std::move(xv));
        SparseDesign d = SparseDesign::generate(k + 1, m, gamma, key(stream::design));
        MeasurementSet ms = measure(x, d);
        if (sigma > 0.0) ms = add_noise(ms, sigma, key(stream::noise));
        RatioColumn rc = ratio_statistics(d, ms, 0); // coordinate 0 is the planted zero
        if (!abs_min_estimate(rc, epsilon).declared_zero) miss[static_cast<std::size_t>(t)] = 1;
    });

    McFpResult r;
    r.trials = trials;
    for (char c : miss) r.misses += c;
    r.rate = static_cast<double>(r.misses) / static_cast<double>(trials);
    if (sigma == 0.0 && k >= 1) {
        double exact = theory::fp_exact_ternary(epsilon, k, gamma, m);
        r.exact = exact;
        double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(trials));
        r.z_score = se == 0.0 ? 0.0 : (r.rate - exact) / se;
    }
    return r;
}

} // namespace tiescan
