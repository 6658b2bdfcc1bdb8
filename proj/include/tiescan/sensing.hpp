#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "common.hpp"

namespace tiescan {

// Dense signal vector. Immutable after construction; the nonzero count is
// established once so callers can rely on it as an exact invariant.
class Signal {
public:
    explicit Signal(std::vector<double> values) : values_(std::move(values)) {
        for (double v : values_) {
            if (!std::isfinite(v)) throw std::invalid_argument("Signal: non-finite entry");
        }
        nonzeros_ = static_cast<std::int64_t>(
            std::count_if(values_.begin(), values_.end(), [](double v) { return v != 0.0; }));
    }

    std::int64_t n() const noexcept { return static_cast<std::int64_t>(values_.size()); }
    std::int64_t nonzeros() const noexcept { return nonzeros_; }
    const std::vector<double>& values() const noexcept { return values_; }
    double operator[](std::int64_t i) const { return values_[static_cast<std::size_t>(i)]; }

    // Sorted indices of nonzero entries.
    std::vector<std::int64_t> support() const {
        std::vector<std::int64_t> s;
        s.reserve(static_cast<std::size_t>(nonzeros_));
        for (std::int64_t i = 0; i < n(); ++i)
            if (values_[static_cast<std::size_t>(i)] != 0.0) s.push_back(i);
        return s;
    }

private:
    std::vector<double> values_;
    std::int64_t nonzeros_ = 0;
};

namespace detail {

// Uniformly sample `count` distinct integers from [0, n), ascending.
// Two regimes: a draw/sort/dedupe/refill loop when the sample is sparse
// (each accepted value is uniform over the complement, so the resulting set
// is uniform), and a partial Fisher-Yates when the sample is a sizeable
// fraction of [0, n). Both produce uniform subsets; the split is purely
// for speed, and the branch depends only on (count, n) so replay is exact.
inline void sample_distinct(std::int64_t n, std::int64_t count, std::mt19937_64& rng,
                            std::vector<std::int64_t>& out) {
    out.clear();
    if (count == 0) return;
    if (count == n) {
        out.resize(static_cast<std::size_t>(n));
        std::iota(out.begin(), out.end(), std::int64_t{0});
        return;
    }
    if (count >= n / 8) {
        std::vector<std::int64_t> pool(static_cast<std::size_t>(n));
        std::iota(pool.begin(), pool.end(), std::int64_t{0});
        for (std::int64_t t = 0; t < count; ++t) {
            std::uniform_int_distribution<std::int64_t> pick(t, n - 1);
            std::swap(pool[static_cast<std::size_t>(t)], pool[static_cast<std::size_t>(pick(rng))]);
        }
        out.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count));
        std::sort(out.begin(), out.end());
        return;
    }
    std::uniform_int_distribution<std::int64_t> pick(0, n - 1);
    out.reserve(static_cast<std::size_t>(count));
    while (static_cast<std::int64_t>(out.size()) < count) {
        for (std::int64_t t = static_cast<std::int64_t>(out.size()); t < count; ++t)
            out.push_back(pick(rng));
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
    }
}

} // namespace detail

// Generate one design column in isolation: survivor count ~ Binomial(n, gamma),
// survivor rows uniform without replacement, values standard normal (exact
// zeros redrawn so ratios are always defined). Column randomness is keyed by
// (seed, j) only, so a column regenerated alone matches the full design.
inline void generate_design_column(std::int64_t n, double gamma, std::uint64_t seed,
                                   std::int64_t j, std::vector<std::int64_t>& indices,
                                   std::vector<double>& values) {
    std::mt19937_64 rng(derive_seed(seed, {stream::column, static_cast<std::uint64_t>(j)}));
    std::int64_t count = n;
    if (gamma < 1.0) {
        std::binomial_distribution<std::int64_t> survivors(n, gamma);
        count = survivors(rng);
    }
    detail::sample_distinct(n, count, rng, indices);
    values.resize(indices.size());
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& v : values) {
        do {
            v = gauss(rng);
        } while (v == 0.0);
    }
}

// Sparsified Gaussian design, stored column-major as (row index, value) pairs
// with ascending rows inside each column. Immutable after generation.
class SparseDesign {
public:
    static SparseDesign generate(std::int64_t n, std::int64_t m, double gamma,
                                 std::uint64_t seed) {
        if (n < 1) throw std::invalid_argument("SparseDesign: n must be >= 1");
        if (m < 1) throw std::invalid_argument("SparseDesign: m must be >= 1");
        if (!(gamma > 0.0) || !(gamma <= 1.0))
            throw std::invalid_argument("SparseDesign: gamma must lie in (0, 1]");

        SparseDesign d;
        d.n_ = n;
        d.m_ = m;
        d.gamma_ = gamma;
        d.seed_ = seed;
        d.offsets_.resize(static_cast<std::size_t>(m) + 1, 0);

        std::vector<std::int64_t> idx;
        std::vector<double> val;
        for (std::int64_t j = 0; j < m; ++j) {
            generate_design_column(n, gamma, seed, j, idx, val);
            d.index_.insert(d.index_.end(), idx.begin(), idx.end());
            d.value_.insert(d.value_.end(), val.begin(), val.end());
            d.offsets_[static_cast<std::size_t>(j) + 1] =
                static_cast<std::int64_t>(d.index_.size());
        }
        return d;
    }

    std::int64_t rows() const noexcept { return n_; }
    std::int64_t cols() const noexcept { return m_; }
    double gamma() const noexcept { return gamma_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::int64_t entries() const noexcept { return static_cast<std::int64_t>(index_.size()); }

    std::span<const std::int64_t> column_indices(std::int64_t j) const {
        auto b = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(j)]);
        auto e = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(j) + 1]);
        return {index_.data() + b, e - b};
    }
    std::span<const double> column_values(std::int64_t j) const {
        auto b = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(j)]);
        auto e = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(j) + 1]);
        return {value_.data() + b, e - b};
    }

private:
    SparseDesign() = default;
    std::int64_t n_ = 0, m_ = 0;
    double gamma_ = 0.0;
    std::uint64_t seed_ = 0;
    std::vector<std::int64_t> offsets_;
    std::vector<std::int64_t> index_;
    std::vector<double> value_;
};

// Measurement vector plus the noise parameters that produced it.
class MeasurementSet {
public:
    explicit MeasurementSet(std::vector<double> y, double sigma = 0.0,
                            std::optional<std::uint64_t> noise_seed = std::nullopt)
        : y_(std::move(y)), sigma_(sigma), noise_seed_(noise_seed) {
        if (!(sigma_ >= 0.0)) throw std::invalid_argument("MeasurementSet: sigma must be >= 0");
        for (double v : y_) {
            if (!std::isfinite(v))
                throw std::invalid_argument("MeasurementSet: non-finite measurement");
        }
    }

    std::int64_t m() const noexcept { return static_cast<std::int64_t>(y_.size()); }
    const std::vector<double>& y() const noexcept { return y_; }
    double sigma() const noexcept { return sigma_; }
    std::optional<std::uint64_t> noise_seed() const noexcept { return noise_seed_; }

private:
    std::vector<double> y_;
    double sigma_ = 0.0;
    std::optional<std::uint64_t> noise_seed_;
};

// y_j = sum over stored entries (i, s) of column j of x_i * s.
//
// The accumulation runs over the stored entries in order with a single
// accumulator. subtract_contribution relies on replaying exactly this
// operation sequence (zero terms are exact no-ops), so a fully explained
// column cancels to exactly 0.0 — do not reorder or block this loop.
inline MeasurementSet measure(const Signal& x, const SparseDesign& d) {
    if (x.n() != d.rows())
        throw std::invalid_argument("measure: signal length does not match design rows");
    std::vector<double> y(static_cast<std::size_t>(d.cols()));
    const auto& xv = x.values();
    for (std::int64_t j = 0; j < d.cols(); ++j) {
        auto idx = d.column_indices(j);
        auto val = d.column_values(j);
        double acc = 0.0;
        for (std::size_t t = 0; t < idx.size(); ++t)
            acc += xv[static_cast<std::size_t>(idx[t])] * val[t];
        y[static_cast<std::size_t>(j)] = acc;
    }
    return MeasurementSet(std::move(y));
}

// Fresh additive N(0, sigma^2) noise on every measurement, deterministic in
// noise_seed. The input set is left untouched.
inline MeasurementSet add_noise(const MeasurementSet& ms, double sigma, std::uint64_t noise_seed) {
    if (!(sigma > 0.0)) throw std::invalid_argument("add_noise: sigma must be > 0");
    std::mt19937_64 rng(derive_seed(noise_seed, {stream::noise}));
    std::normal_distribution<double> gauss(0.0, sigma);
    std::vector<double> y = ms.y();
    for (double& v : y) v += gauss(rng);
    return MeasurementSet(std::move(y), sigma, noise_seed);
}

// Residual measurements y_j - sum_i partial_i * s_ij. Only stored design
// entries with a nonzero partial value contribute; the inner sum mirrors
// measure()'s entry order so that recovered-and-subtracted columns cancel
// exactly rather than to O(ulp) junk.
inline MeasurementSet subtract_contribution(const MeasurementSet& ms, const SparseDesign& d,
                                            const Signal& partial) {
    if (partial.n() != d.rows())
        throw std::invalid_argument("subtract_contribution: signal length mismatch");
    if (ms.m() != d.cols())
        throw std::invalid_argument("subtract_contribution: measurement count mismatch");
    const auto& pv = partial.values();
    std::vector<double> y(static_cast<std::size_t>(d.cols()));
    for (std::int64_t j = 0; j < d.cols(); ++j) {
        auto idx = d.column_indices(j);
        auto val = d.column_values(j);
        double acc = 0.0;
        for (std::size_t t = 0; t < idx.size(); ++t) {
            double p = pv[static_cast<std::size_t>(idx[t])];
            if (p != 0.0) acc += p * val[t];
        }
        y[static_cast<std::size_t>(j)] = ms.y()[static_cast<std::size_t>(j)] - acc;
    }
    return MeasurementSet(std::move(y), ms.sigma(), ms.noise_seed());
}

// Text format for signals: first line "N K", then K lines of "index value"
// (0-based indices, nonzero values).
inline Signal read_signal(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_signal: cannot open " + path);
    std::int64_t n = 0, k = 0;
    if (!(in >> n >> k)) throw std::runtime_error("read_signal: bad header in " + path);
    if (n < 0 || k < 0 || k > n) throw std::runtime_error("read_signal: invalid N/K header");
    std::vector<double> values(static_cast<std::size_t>(n), 0.0);
    for (std::int64_t t = 0; t < k; ++t) {
        std::int64_t i = 0;
        double v = 0.0;
        if (!(in >> i >> v)) throw std::runtime_error("read_signal: truncated entry list");
        if (i < 0 || i >= n) throw std::runtime_error("read_signal: index out of range");
        if (v == 0.0 || !std::isfinite(v))
            throw std::runtime_error("read_signal: entry values must be finite and nonzero");
        if (values[static_cast<std::size_t>(i)] != 0.0)
            throw std::runtime_error("read_signal: duplicate index");
        values[static_cast<std::size_t>(i)] = v;
    }
    return Signal(std::move(values));
}

inline void write_signal(const Signal& x, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_signal: cannot open " + path);
    out << x.n() << ' ' << x.nonzeros() << '\n';
    char buf[64];
    for (std::int64_t i = 0; i < x.n(); ++i) {
        if (x[i] != 0.0) {
            std::snprintf(buf, sizeof buf, "%.17g", x[i]);
            out << i << ' ' << buf << '\n';
        }
    }
}

} // namespace tiescan
