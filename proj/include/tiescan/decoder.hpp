#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "sensing.hpp"

namespace tiescan {

struct DecoderConfig {
    double epsilon = 0.0;     // |estimate| <= epsilon declares a zero
    double tie_tol = 1e-10;   // cluster diameter, relative above magnitude 1
    int max_iterations = 4;
    int min_tie_size = 2;

    void validate() const {
        if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
            throw std::invalid_argument("DecoderConfig: epsilon must be finite and >= 0");
        if (!(tie_tol > 0.0) || !std::isfinite(tie_tol))
            throw std::invalid_argument("DecoderConfig: tie_tol must be finite and > 0");
        if (max_iterations < 1)
            throw std::invalid_argument("DecoderConfig: max_iterations must be >= 1");
        if (min_tie_size < 2)
            throw std::invalid_argument("DecoderConfig: min_tie_size must be >= 2");
    }
};

struct RatioEntry {
    std::int64_t measurement;
    double ratio; // y_j / s_ij
};

struct RatioColumn {
    std::int64_t coordinate = -1;
    std::vector<RatioEntry> entries; // ascending measurement index
};

struct AbsMinResult {
    std::optional<double> value; // entry of least magnitude; absent if no entries
    bool declared_zero = false;  // |value| <= epsilon (empty column cannot conclude)
};

enum class CoordinateKind : unsigned char { zero, recovered, undetermined };

struct CoordinateStatus {
    CoordinateKind kind = CoordinateKind::undetermined;
    double value = 0.0; // meaningful only when kind == recovered
};

struct RoundStats {
    std::int64_t zeros_declared = 0;
    std::int64_t ties_found = 0;
    std::int64_t undetermined_remaining = 0;
    std::uint64_t entries_touched = 0;
};

struct DecodeResult {
    std::vector<CoordinateStatus> statuses;
    Signal estimate;              // recovered values, zeros elsewhere
    std::vector<double> residual; // original y minus measure(estimate)
    int iterations_used = 0;
    std::vector<RoundStats> rounds;
    std::uint64_t entries_touched = 0; // total across rounds
};

namespace detail {

inline AbsMinResult abs_min_span(std::span<const double> ratios, double epsilon) {
    AbsMinResult r;
    if (ratios.empty()) return r;
    double best = ratios[0];
    for (double z : ratios)
        if (std::fabs(z) < std::fabs(best)) best = z;
    r.value = best;
    r.declared_zero = std::fabs(best) <= epsilon;
    return r;
}

// Mean of the unique largest run of near-equal values. Values are sorted and
// swept into maximal clusters: a cluster keeps absorbing the next value while
// the total spread stays within tie_tol relative to max(1, |midpoint|).
// Refuses (returns nullopt) when the largest qualifying cluster is not unique
// — two equally strong explanations mean no safe answer.
inline std::optional<double> tie_span(std::span<const double> ratios, const DecoderConfig& cfg) {
    std::vector<double> z;
    z.reserve(ratios.size());
    for (double v : ratios)
        if (std::isfinite(v)) z.push_back(v);
    if (static_cast<int>(z.size()) < cfg.min_tie_size) return std::nullopt;
    std::sort(z.begin(), z.end());

    std::size_t best_begin = 0, best_size = 0;
    bool conflict = false;
    std::size_t a = 0;
    const std::size_t n = z.size();
    while (a < n) {
        std::size_t b = a;
        while (b + 1 < n) {
            double lo = z[a], hi = z[b + 1];
            double scale = std::max(1.0, std::fabs(0.5 * (lo + hi)));
            if (hi - lo <= cfg.tie_tol * scale)
                ++b;
            else
                break;
        }
        std::size_t size = b - a + 1;
        if (size > best_size) {
            best_size = size;
            best_begin = a;
            conflict = false;
        } else if (size == best_size) {
            conflict = true;
        }
        a = b + 1;
    }
    if (best_size < static_cast<std::size_t>(cfg.min_tie_size) || conflict) return std::nullopt;
    double sum = 0.0;
    for (std::size_t t = best_begin; t < best_begin + best_size; ++t) sum += z[t];
    double center = sum / static_cast<double>(best_size);
    if (!std::isfinite(center)) return std::nullopt;
    return center;
}

// Per-coordinate ratio lists for every active coordinate, flattened CSR-style.
// One pass over the stored design entries per call; `touched` counts exactly
// those entry visits so callers can assert the linear-scan contract.
struct RatioTable {
    std::vector<std::int64_t> offsets; // n+1
    std::vector<RatioEntry> entries;
    std::uint64_t touched = 0;

    std::span<const RatioEntry> row(std::int64_t i) const {
        auto b = static_cast<std::size_t>(offsets[static_cast<std::size_t>(i)]);
        auto e = static_cast<std::size_t>(offsets[static_cast<std::size_t>(i) + 1]);
        return {entries.data() + b, e - b};
    }
};

// active == nullptr means every coordinate is active.
inline void build_ratio_table(const SparseDesign& d, const std::vector<double>& y,
                              const std::vector<unsigned char>* active, RatioTable& out) {
    const std::size_t n = static_cast<std::size_t>(d.rows());
    out.offsets.assign(n + 1, 0);
    out.touched = 0;

    // Bucket-count prepass over the row-index array only; ratios are formed
    // in the second pass, which is the scan the touch counter certifies.
    for (std::int64_t j = 0; j < d.cols(); ++j) {
        auto idx = d.column_indices(j);
        for (std::size_t t = 0; t < idx.size(); ++t) {
            auto i = static_cast<std::size_t>(idx[t]);
            if (!active || (*active)[i]) ++out.offsets[i + 1];
        }
    }
    for (std::size_t i = 0; i < n; ++i) out.offsets[i + 1] += out.offsets[i];

    out.entries.resize(static_cast<std::size_t>(out.offsets[n]));
    std::vector<std::int64_t> cursor(out.offsets.begin(), out.offsets.end() - 1);
    for (std::int64_t j = 0; j < d.cols(); ++j) {
        auto idx = d.column_indices(j);
        auto val = d.column_values(j);
        out.touched += idx.size();
        const double yj = y[static_cast<std::size_t>(j)];
        for (std::size_t t = 0; t < idx.size(); ++t) {
            auto i = static_cast<std::size_t>(idx[t]);
            if (!active || (*active)[i])
                out.entries[static_cast<std::size_t>(cursor[i]++)] = {j, yj / val[t]};
        }
    }
}

} // namespace detail

inline AbsMinResult abs_min_estimate(const RatioColumn& rc, double epsilon) {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
        throw std::invalid_argument("abs_min_estimate: epsilon must be finite and >= 0");
    std::vector<double> z;
    z.reserve(rc.entries.size());
    for (const auto& e : rc.entries) z.push_back(e.ratio);
    return detail::abs_min_span(z, epsilon);
}

inline std::optional<double> tie_estimate(const RatioColumn& rc, const DecoderConfig& cfg) {
    cfg.validate();
    std::vector<double> z;
    z.reserve(rc.entries.size());
    for (const auto& e : rc.entries) z.push_back(e.ratio);
    return detail::tie_span(z, cfg);
}

// Ratios y_j / s_ij over every column j whose stored entries include
// `coordinate`. Full scan of the design; use decode/support_detect when all
// coordinates are needed.
inline RatioColumn ratio_statistics(const SparseDesign& d, const MeasurementSet& ms,
                                    std::int64_t coordinate) {
    if (coordinate < 0 || coordinate >= d.rows())
        throw std::invalid_argument("ratio_statistics: coordinate out of range");
    if (ms.m() != d.cols())
        throw std::invalid_argument("ratio_statistics: measurement count mismatch");
    RatioColumn rc;
    rc.coordinate = coordinate;
    for (std::int64_t j = 0; j < d.cols(); ++j) {
        auto idx = d.column_indices(j);
        auto lo = std::lower_bound(idx.begin(), idx.end(), coordinate);
        if (lo != idx.end() && *lo == coordinate) {
            auto t = static_cast<std::size_t>(lo - idx.begin());
            rc.entries.push_back({j, ms.y()[static_cast<std::size_t>(j)] / d.column_values(j)[t]});
        }
    }
    return rc;
}

// Coordinates that cannot be ruled out as zeros: everything except those with
// some ratio of magnitude <= epsilon. Coordinates appearing in no column stay
// candidates (no evidence either way).
inline std::vector<std::int64_t> support_detect(const SparseDesign& d, const MeasurementSet& ms,
                                                double epsilon) {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
        throw std::invalid_argument("support_detect: epsilon must be finite and >= 0");
    if (ms.m() != d.cols())
        throw std::invalid_argument("support_detect: measurement count mismatch");
    detail::RatioTable table;
    detail::build_ratio_table(d, ms.y(), nullptr, table);
    std::vector<std::int64_t> out;
    for (std::int64_t i = 0; i < d.rows(); ++i) {
        auto row = table.row(i);
        bool zero = false;
        for (const auto& e : row) {
            if (std::fabs(e.ratio) <= epsilon) {
                zero = true;
                break;
            }
        }
        if (!zero) out.push_back(i);
    }
    return out;
}

// Mixed iterative recovery. Each round, over the still-undetermined
// coordinates: ratios of least magnitude <= epsilon declare zeros, then tie
// clusters recover values. Recovered values are subtracted from the original
// measurements (full resubtraction, not incremental — replaying measure()'s
// accumulation keeps fully explained columns at exactly 0.0) and the next
// round runs on the residual. A round with no new recovery is a fixpoint:
// nothing it could feed the next round has changed.
inline DecodeResult decode(const SparseDesign& d, const MeasurementSet& ms,
                           const DecoderConfig& cfg = {}) {
    cfg.validate();
    if (ms.m() != d.cols()) throw std::invalid_argument("decode: measurement count mismatch");

    const std::int64_t n = d.rows();
    std::vector<CoordinateStatus> statuses(static_cast<std::size_t>(n));
    std::vector<double> estimate(static_cast<std::size_t>(n), 0.0);
    std::vector<unsigned char> active(static_cast<std::size_t>(n), 1);
    std::int64_t undetermined = n;

    DecodeResult res{.statuses = {},
                     .estimate = Signal(std::vector<double>(static_cast<std::size_t>(n), 0.0)),
                     .residual = {},
                     .iterations_used = 0,
                     .rounds = {},
                     .entries_touched = 0};

    std::vector<double> residual_y = ms.y();
    detail::RatioTable table;
    std::vector<double> zbuf;

    for (int round = 1; round <= cfg.max_iterations; ++round) {
        detail::build_ratio_table(d, residual_y, &active, table);
        RoundStats rs;
        rs.entries_touched = table.touched;

        for (std::int64_t i = 0; i < n; ++i) {
            if (!active[static_cast<std::size_t>(i)]) continue;
            auto row = table.row(i);
            if (row.empty()) continue; // no evidence; stays undetermined
            zbuf.clear();
            for (const auto& e : row) zbuf.push_back(e.ratio);
            auto am = detail::abs_min_span(zbuf, cfg.epsilon);
            if (am.declared_zero) {
                statuses[static_cast<std::size_t>(i)] = {CoordinateKind::zero, 0.0};
                active[static_cast<std::size_t>(i)] = 0;
                ++rs.zeros_declared;
                continue;
            }
            auto tie = detail::tie_span(zbuf, cfg);
            if (tie) {
                statuses[static_cast<std::size_t>(i)] = {CoordinateKind::recovered, *tie};
                estimate[static_cast<std::size_t>(i)] = *tie;
                active[static_cast<std::size_t>(i)] = 0;
                ++rs.ties_found;
            }
        }

        undetermined -= rs.zeros_declared + rs.ties_found;
        rs.undetermined_remaining = undetermined;
        res.rounds.push_back(rs);
        res.entries_touched += rs.entries_touched;
        res.iterations_used = round;

        if (undetermined == 0 || rs.ties_found == 0) break;
        if (round < cfg.max_iterations)
            residual_y = subtract_contribution(ms, d, Signal(estimate)).y();
    }

    res.statuses = std::move(statuses);
    res.estimate = Signal(estimate);
    res.residual = subtract_contribution(ms, d, res.estimate).y();
    return res;
}

} // namespace tiescan
