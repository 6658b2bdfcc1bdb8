#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tiescan/harness.hpp"

namespace tiescan::contour {

// One contour piece in data coordinates (measurement count, nonzero count).
struct Segment {
    double m1 = 0, k1 = 0, m2 = 0, k2 = 0;
};

// Where a fixed-k row of the success grid first reaches `level`, scanning m
// upward.  `m_star` interpolates linearly between the bracketing columns; a
// row that starts at or above the level reports the leftmost m and is marked
// saturated; a row that never reaches the level reports no crossing.
struct Crossing {
    std::int64_t k = 0;
    double level = 0.0;
    std::optional<double> m_star;
    bool saturated = false;
};

namespace detail {

inline void require_grid(const GridResult& grid) {
    const auto strictly_increasing = [](const std::vector<std::int64_t>& v) {
        for (std::size_t i = 1; i < v.size(); ++i)
            if (v[i] <= v[i - 1]) return false;
        return true;
    };
    if (grid.spec.k_values.size() < 2 || grid.spec.m_values.size() < 2)
        throw std::invalid_argument("contour: grid must be at least 2x2");
    if (!strictly_increasing(grid.spec.k_values) || !strictly_increasing(grid.spec.m_values))
        throw std::invalid_argument("contour: k and m grids must be strictly increasing");
}

struct Point {
    double m = 0, k = 0;
};

// Linear interpolation of the level crossing along one cell edge.
inline Point edge_point(double m1, double k1, double f1, double m2, double k2, double f2,
                        double level) {
    double t = f2 == f1 ? 0.5 : (level - f1) / (f2 - f1);
    t = std::clamp(t, 0.0, 1.0);
    return {m1 + t * (m2 - m1), k1 + t * (k2 - k1)};
}

} // namespace detail

// Marching squares over the success-rate surface.  Ambiguous cells (two
// opposite corners above the level) are split by the mean of the four
// corners: a high center joins the diagonal blobs, a low center keeps the
// corners separate.
inline std::vector<Segment> trace_level(const GridResult& grid, double level) {
    detail::require_grid(grid);
    const auto& ks = grid.spec.k_values;
    const auto& ms = grid.spec.m_values;
    const auto f = [&](std::size_t ki, std::size_t mi) { return grid.cell(ki, mi).success_rate; };

    std::vector<Segment> segs;
    for (std::size_t ki = 0; ki + 1 < ks.size(); ++ki) {
        for (std::size_t mi = 0; mi + 1 < ms.size(); ++mi) {
            const double mA = double(ms[mi]), mB = double(ms[mi + 1]);
            const double kA = double(ks[ki]), kC = double(ks[ki + 1]);
            // corners: A = (mA,kA), B = (mB,kA), C = (mB,kC), D = (mA,kC)
            const double fA = f(ki, mi), fB = f(ki, mi + 1);
            const double fC = f(ki + 1, mi + 1), fD = f(ki + 1, mi);
            int idx = (fA >= level ? 1 : 0) | (fB >= level ? 2 : 0) | (fC >= level ? 4 : 0) |
                      (fD >= level ? 8 : 0);
            if (idx == 0 || idx == 15) continue;

            const detail::Point ab = detail::edge_point(mA, kA, fA, mB, kA, fB, level);
            const detail::Point bc = detail::edge_point(mB, kA, fB, mB, kC, fC, level);
            const detail::Point cd = detail::edge_point(mB, kC, fC, mA, kC, fD, level);
            const detail::Point da = detail::edge_point(mA, kC, fD, mA, kA, fA, level);
            const auto emit = [&](detail::Point p, detail::Point q) {
                segs.push_back({p.m, p.k, q.m, q.k});
            };
            switch (idx) {
            case 1: case 14: emit(da, ab); break;
            case 2: case 13: emit(ab, bc); break;
            case 3: case 12: emit(da, bc); break;
            case 4: case 11: emit(bc, cd); break;
            case 6: case 9:  emit(ab, cd); break;
            case 7: case 8:  emit(cd, da); break;
            case 5:
                if (0.25 * (fA + fB + fC + fD) >= level) {
                    emit(ab, bc);
                    emit(cd, da);
                } else {
                    emit(da, ab);
                    emit(bc, cd);
                }
                break;
            case 10:
                if (0.25 * (fA + fB + fC + fD) >= level) {
                    emit(da, ab);
                    emit(bc, cd);
                } else {
                    emit(ab, bc);
                    emit(cd, da);
                }
                break;
            default: break;
            }
        }
    }
    return segs;
}

// First upward crossing of `level` in each fixed-k row.
inline std::vector<Crossing> level_crossings(const GridResult& grid, double level) {
    const auto& ks = grid.spec.k_values;
    const auto& ms = grid.spec.m_values;
    if (ks.empty() || ms.empty()) throw std::invalid_argument("level_crossings: empty grid");

    std::vector<Crossing> out;
    out.reserve(ks.size());
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
        Crossing c;
        c.k = ks[ki];
        c.level = level;
        if (grid.cell(ki, 0).success_rate >= level) {
            c.m_star = double(ms[0]);
            c.saturated = true;
        } else {
            for (std::size_t mi = 0; mi + 1 < ms.size(); ++mi) {
                double r1 = grid.cell(ki, mi).success_rate;
                double r2 = grid.cell(ki, mi + 1).success_rate;
                if (r1 < level && r2 >= level) {
                    double t = (level - r1) / (r2 - r1);
                    c.m_star = double(ms[mi]) + t * double(ms[mi + 1] - ms[mi]);
                    break;
                }
            }
        }
        out.push_back(c);
    }
    return out;
}

namespace detail {

inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

} // namespace detail

inline std::string svg_string(const GridResult& grid, const std::vector<double>& levels) {
    detail::require_grid(grid);
    if (levels.empty()) throw std::invalid_argument("svg_string: need at least one level");
    const auto& ks = grid.spec.k_values;
    const auto& ms = grid.spec.m_values;
    const double m_lo = double(ms.front()), m_hi = double(ms.back());
    const double k_lo = double(ks.front()), k_hi = double(ks.back());

    const double W = 800, H = 560, L = 70, R = 160, T = 50, B = 60;
    const double pw = W - L - R, ph = H - T - B;
    const auto X = [&](double m) { return L + (m - m_lo) / (m_hi - m_lo) * pw; };
    const auto Y = [&](double k) { return T + (1.0 - (k - k_lo) / (k_hi - k_lo)) * ph; };

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    const std::size_t ncolors = sizeof palette / sizeof palette[0];

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt(W) + "\" height=\"" +
         detail::fmt(H) + "\" viewBox=\"0 0 " + detail::fmt(W) + " " + detail::fmt(H) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + detail::fmt(L) + "\" y=\"28\" font-family=\"sans-serif\" font-size=\"16\">"
         "success-rate contours</text>\n";

    // frame and gridlines
    s += "<rect x=\"" + detail::fmt(L) + "\" y=\"" + detail::fmt(T) + "\" width=\"" +
         detail::fmt(pw) + "\" height=\"" + detail::fmt(ph) +
         "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (std::int64_t m : ms) {
        double x = X(double(m));
        s += "<line x1=\"" + detail::fmt(x) + "\" y1=\"" + detail::fmt(T) + "\" x2=\"" +
             detail::fmt(x) + "\" y2=\"" + detail::fmt(T + ph) +
             "\" stroke=\"#ddd\" stroke-width=\"0.5\"/>\n";
        s += "<text x=\"" + detail::fmt(x) + "\" y=\"" + detail::fmt(T + ph + 18) +
             "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" +
             std::to_string(m) + "</text>\n";
    }
    for (std::int64_t k : ks) {
        double y = Y(double(k));
        s += "<line x1=\"" + detail::fmt(L) + "\" y1=\"" + detail::fmt(y) + "\" x2=\"" +
             detail::fmt(L + pw) + "\" y2=\"" + detail::fmt(y) +
             "\" stroke=\"#ddd\" stroke-width=\"0.5\"/>\n";
        s += "<text x=\"" + detail::fmt(L - 8) + "\" y=\"" + detail::fmt(y + 4) +
             "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" +
             std::to_string(k) + "</text>\n";
    }
    s += "<text x=\"" + detail::fmt(L + pw / 2) + "\" y=\"" + detail::fmt(H - 14) +
         "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">"
         "measurements (M)</text>\n";
    s += "<text x=\"20\" y=\"" + detail::fmt(T + ph / 2) +
         "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 "
         "20 " + detail::fmt(T + ph / 2) + ")\">nonzeros (K)</text>\n";

    for (std::size_t li = 0; li < levels.size(); ++li) {
        const char* color = palette[li % ncolors];
        for (const Segment& seg : trace_level(grid, levels[li])) {
            s += "<line x1=\"" + detail::fmt(X(seg.m1)) + "\" y1=\"" + detail::fmt(Y(seg.k1)) +
                 "\" x2=\"" + detail::fmt(X(seg.m2)) + "\" y2=\"" + detail::fmt(Y(seg.k2)) +
                 "\" stroke=\"" + color + "\" stroke-width=\"1.8\"/>\n";
        }
        double ly = T + 16 + 20 * double(li);
        s += "<line x1=\"" + detail::fmt(L + pw + 12) + "\" y1=\"" + detail::fmt(ly) + "\" x2=\"" +
             detail::fmt(L + pw + 40) + "\" y2=\"" + detail::fmt(ly) + "\" stroke=\"" + color +
             "\" stroke-width=\"1.8\"/>\n";
        s += "<text x=\"" + detail::fmt(L + pw + 46) + "\" y=\"" + detail::fmt(ly + 4) +
             "\" font-family=\"sans-serif\" font-size=\"12\">rate = " + detail::fmt(levels[li]) +
             "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

// Writes the contour plot to `svg_path` and the per-row level crossings to
// `<stem>_crossings.csv` next to it.
inline void emit_contour(const GridResult& grid, const std::string& svg_path,
                         const std::vector<double>& levels) {
    std::string svg = svg_string(grid, levels); // validates inputs before any file is touched

    std::ofstream f(svg_path, std::ios::binary);
    if (!f) throw std::runtime_error("emit_contour: cannot open " + svg_path);
    f << svg;
    if (!f) throw std::runtime_error("emit_contour: write failed for " + svg_path);

    std::string stem = svg_path;
    if (stem.size() >= 4 && stem.compare(stem.size() - 4, 4, ".svg") == 0)
        stem.resize(stem.size() - 4);
    std::string csv_path = stem + "_crossings.csv";
    std::ofstream g(csv_path, std::ios::binary);
    if (!g) throw std::runtime_error("emit_contour: cannot open " + csv_path);
    g << "K,level,m_star,saturated\n";
    for (double level : levels) {
        for (const Crossing& c : level_crossings(grid, level)) {
            g << c.k << ',' << detail::fmt(c.level) << ',';
            if (c.m_star) g << tiescan::detail::fmt_double(*c.m_star);
            g << ',' << (c.saturated ? 1 : 0) << '\n';
        }
    }
    if (!g) throw std::runtime_error("emit_contour: write failed for " + csv_path);
}

} // namespace tiescan::contour
