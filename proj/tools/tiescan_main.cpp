// Command-line front end: decode synthetic instances, evaluate the planning
// formulas, cross-check them against independent oracles, and run seeded
// recovery experiments over (K, M) grids.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tiescan/tiescan.hpp"

namespace {

using nlohmann::json;

std::vector<std::int64_t> parse_int_list(const std::string& csv, const char* what) {
    std::vector<std::int64_t> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        std::size_t comma = csv.find(',', pos);
        std::string tok = csv.substr(pos, comma == std::string::npos ? csv.size() - pos
                                                                     : comma - pos);
        if (tok.empty()) throw CLI::ValidationError(std::string(what) + ": empty element");
        std::size_t used = 0;
        long long v = std::stoll(tok, &used);
        if (used != tok.size())
            throw CLI::ValidationError(std::string(what) + ": bad integer '" + tok + "'");
        out.push_back(v);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& csv, const char* what) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        std::size_t comma = csv.find(',', pos);
        std::string tok = csv.substr(pos, comma == std::string::npos ? csv.size() - pos
                                                                     : comma - pos);
        if (tok.empty()) throw CLI::ValidationError(std::string(what) + ": empty element");
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size())
            throw CLI::ValidationError(std::string(what) + ": bad number '" + tok + "'");
        out.push_back(v);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::vector<std::int64_t> parse_range(const std::string& spec) {
    // start:stop:step, stop inclusive when it lands on the lattice
    std::vector<std::int64_t> parts;
    std::size_t pos = 0;
    for (int i = 0; i < 3; ++i) {
        std::size_t colon = spec.find(':', pos);
        if ((i < 2) != (colon != std::string::npos))
            throw CLI::ValidationError("--m-range: expected start:stop:step");
        std::string tok = spec.substr(pos, colon == std::string::npos ? spec.size() - pos
                                                                      : colon - pos);
        parts.push_back(std::stoll(tok));
        pos = colon + 1;
    }
    if (parts[2] <= 0) throw CLI::ValidationError("--m-range: step must be positive");
    std::vector<std::int64_t> out;
    for (std::int64_t m = parts[0]; m <= parts[1]; m += parts[2]) out.push_back(m);
    if (out.empty()) throw CLI::ValidationError("--m-range: empty range");
    return out;
}

int run_decode(const std::string& signal_path, std::int64_t n_flag, std::int64_t m, double gamma,
               std::uint64_t seed, double epsilon, double tie_tol, int max_iter, double sigma,
               std::optional<std::uint64_t> noise_seed, const std::string& out_path) {
    tiescan::Signal x = tiescan::read_signal(signal_path);
    if (n_flag > 0 && n_flag != x.n()) {
        std::cerr << "decode: --n " << n_flag << " disagrees with signal file (N=" << x.n()
                  << ")\n";
        return 2;
    }
    if (sigma > 0.0 && !noise_seed) {
        std::cerr << "decode: --sigma > 0 requires --noise-seed\n";
        return 2;
    }

    tiescan::SparseDesign d = tiescan::SparseDesign::generate(x.n(), m, gamma, seed);
    tiescan::MeasurementSet ms = tiescan::measure(x, d);
    if (sigma > 0.0) ms = tiescan::add_noise(ms, sigma, *noise_seed);

    tiescan::DecoderConfig cfg;
    cfg.epsilon = epsilon;
    cfg.tie_tol = tie_tol;
    cfg.max_iterations = max_iter;
    cfg.validate();
    tiescan::DecodeResult res = tiescan::decode(d, ms, cfg);

    json doc;
    doc["params"] = {{"signal", signal_path},
                     {"n", x.n()},
                     {"m", m},
                     {"gamma", gamma},
                     {"seed", seed},
                     {"epsilon", epsilon},
                     {"tie_tol", tie_tol},
                     {"max_iterations", max_iter},
                     {"min_tie_size", cfg.min_tie_size},
                     {"sigma", sigma}};
    if (noise_seed) doc["params"]["noise_seed"] = *noise_seed;
    doc["version"] = tiescan::kVersion;
    doc["iterations_used"] = res.iterations_used;
    doc["entries_touched"] = res.entries_touched;

    json rounds = json::array();
    for (const auto& r : res.rounds)
        rounds.push_back({{"zeros_declared", r.zeros_declared},
                          {"ties_found", r.ties_found},
                          {"undetermined_remaining", r.undetermined_remaining},
                          {"entries_touched", r.entries_touched}});
    doc["rounds"] = std::move(rounds);

    std::int64_t zeros = 0, recovered = 0, undetermined = 0;
    json statuses = json::array();
    json recovered_list = json::array();
    json undetermined_list = json::array();
    for (std::int64_t i = 0; i < x.n(); ++i) {
        const auto& st = res.statuses[static_cast<std::size_t>(i)];
        switch (st.kind) {
        case tiescan::CoordinateKind::zero:
            ++zeros;
            statuses.push_back("zero");
            break;
        case tiescan::CoordinateKind::recovered:
            ++recovered;
            statuses.push_back("recovered");
            recovered_list.push_back({{"index", i}, {"value", st.value}});
            break;
        case tiescan::CoordinateKind::undetermined:
            ++undetermined;
            statuses.push_back("undetermined");
            undetermined_list.push_back(i);
            break;
        }
    }
    doc["counts"] = {{"zero", zeros}, {"recovered", recovered}, {"undetermined", undetermined}};
    doc["recovered"] = std::move(recovered_list);
    doc["undetermined"] = std::move(undetermined_list);
    doc["statuses"] = std::move(statuses);

    std::ofstream f(out_path, std::ios::binary);
    if (!f) {
        std::cerr << "decode: cannot open " << out_path << "\n";
        return 2;
    }
    f << doc.dump(2) << "\n";
    if (!f) {
        std::cerr << "decode: write failed for " << out_path << "\n";
        return 2;
    }
    std::cout << "decoded n=" << x.n() << " m=" << m << ": " << recovered << " recovered, "
              << zeros << " zero, " << undetermined << " undetermined in " << res.iterations_used
              << " iteration(s); wrote " << out_path << "\n";
    return 0;
}

struct BoundsArgs {
    std::int64_t n = -1, k = -1, m = -1;
    double gamma = -1.0, epsilon = -1.0, delta = -1.0, sigma = 0.0;
    std::vector<std::string> what;
};

void need(bool ok, const std::string& what, const char* flag) {
    if (!ok)
        throw CLI::ValidationError("bounds --what " + what + " requires " + flag);
}

int run_bounds(const BoundsArgs& a) {
    namespace th = tiescan::theory;
    for (const std::string& w : a.what) {
        if (w == "fp-worst") {
            need(a.k >= 1, w, "--k");
            need(a.gamma > 0, w, "--gamma");
            need(a.m >= 1, w, "--m");
            if (a.sigma > 0.0) {
                need(a.epsilon >= 0, w, "--epsilon");
                std::printf("fp-worst (noisy, eps=%g sigma=%g) = %.12g\n", a.epsilon, a.sigma,
                            th::noisy_fp_worst_bound(a.epsilon, a.sigma, a.k, a.gamma, a.m));
            } else {
                std::printf("fp-worst = %.12g\n", th::fp_worst_bound(a.k, a.gamma, a.m));
            }
        } else if (w == "fp-ternary") {
            need(a.epsilon >= 0, w, "--epsilon");
            need(a.k >= 1, w, "--k");
            need(a.gamma > 0, w, "--gamma");
            need(a.m >= 1, w, "--m");
            std::printf("fp-ternary = %.12g\n",
                        th::fp_exact_ternary(a.epsilon, a.k, a.gamma, a.m));
        } else if (w == "fn") {
            need(a.epsilon >= 0, w, "--epsilon");
            need(a.gamma > 0, w, "--gamma");
            need(a.m >= 1, w, "--m");
            need(a.k >= 1, w, "--k");
            th::FnBounds fb = th::fn_bounds(a.epsilon, a.gamma, a.m, 1.0, a.k);
            std::printf("fn-exact-ternary = %.12g\n", fb.exact_ternary);
            std::printf("fn-loose = %.12g\n", fb.loose);
        } else if (w == "support-m") {
            need(a.n >= 1, w, "--n");
            need(a.k >= 2, w, "--k (>= 2)");
            need(a.delta > 0, w, "--delta");
            if (a.sigma > 0.0) {
                need(a.epsilon > 0, w, "--epsilon (> 0)");
                std::printf("support-m (noisy, eps=%g sigma=%g) = %lld\n", a.epsilon, a.sigma,
                            static_cast<long long>(th::noisy_support_sample_complexity(
                                a.n, a.k, a.delta, a.epsilon, a.sigma)));
            } else {
                th::SupportComplexity sc = th::support_sample_complexity(a.n, a.k, a.delta);
                std::printf("support-m = %lld\n", static_cast<long long>(sc.exact));
                std::printf("support-m-approx = %.12g\n", sc.approx);
            }
        } else if (w == "tie-m") {
            need(a.k >= 2, w, "--k (>= 2)");
            need(a.delta > 0, w, "--delta");
            th::TieComplexity tc = th::tie_sample_complexity(a.k, a.delta);
            std::printf("tie-m = %lld\n", static_cast<long long>(tc.closed_form));
            std::printf("tie-m-minimal = %lld\n", static_cast<long long>(tc.exact));
        } else if (w == "alpha") {
            need(a.delta > 0, w, "--delta");
            need(a.k >= 2, w, "--k (>= 2)");
            std::printf("alpha = %.10f\n", th::solve_alpha(a.delta, a.k));
        } else if (w == "h") {
            need(a.epsilon >= 0, w, "--epsilon");
            need(a.gamma > 0, w, "--gamma");
            need(a.k >= 1, w, "--k");
            double lambda = a.gamma * static_cast<double>(a.k);
            std::printf("h (lambda=%g) = %.12g\n", lambda,
                        th::detection_mass_poisson(a.epsilon, lambda));
        } else if (w == "H") {
            need(a.epsilon >= 0, w, "--epsilon");
            need(a.k >= 1, w, "--k");
            need(a.gamma > 0, w, "--gamma");
            std::printf("H = %.12g\n", th::detection_mass_binomial(a.epsilon, a.k, a.gamma));
        } else {
            throw CLI::ValidationError("bounds: unknown --what '" + w + "'");
        }
    }
    return 0;
}

int run_validate(std::uint64_t seed) {
    namespace th = tiescan::theory;
    namespace orc = tiescan::oracle;
    int failures = 0;
    const auto report = [&](bool ok, const std::string& name, const std::string& detail) {
        std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
        if (!ok) ++failures;
    };
    char buf[256];

    { // closed-form binomial mass vs exhaustive enumeration
        double worst = 0.0;
        for (int K = 1; K <= 12; ++K) {
            const double gammas[] = {0.05, 0.1, 0.3, 1.0 / K};
            for (double g : gammas)
                for (double eps : {0.01, 0.5, 1.0}) {
                    double a = th::detection_mass_binomial(eps, K, g);
                    double b = orc::brute_detection_mass(eps, K, g);
                    worst = std::max(worst, std::fabs(a - b));
                }
        }
        std::snprintf(buf, sizeof buf, "max |closed form - enumeration| = %.3g (limit 1e-12)",
                      worst);
        report(worst <= 1e-12, "binomial detection mass vs 2^K enumeration", buf);
    }

    { // series truncation stability
        double worst = 0.0;
        for (double lam : {0.1, 0.5, 1.0, 2.0, 3.0})
            for (double eps : {0.01, 0.1, 0.2, 0.5, 1.0})
                worst = std::max(worst, std::fabs(th::detection_mass_poisson(eps, lam, 1e-14) -
                                                  th::detection_mass_poisson(eps, lam, 1e-10)));
        std::snprintf(buf, sizeof buf, "max tolerance-sweep drift = %.3g (limit 1e-9)", worst);
        report(worst < 1e-9, "poisson mass truncation convergence", buf);
    }

    { // simulated zero-coordinate miss rate vs closed form
        const double eps = 0.5, gamma = 0.1;
        const int K = 10;
        struct Cell { int m; int trials; } cells[] = {{60, 20000}, {200, 100000}};
        bool ok = true;
        std::string detail;
        for (const auto& c : cells) {
            double exact = th::fp_exact_ternary(eps, K, gamma, c.m);
            double rate = orc::sim_fp_rate_model(eps, K, gamma, c.m, c.trials, seed);
            double se = std::sqrt(exact * (1.0 - exact) / c.trials);
            double z = (rate - exact) / se;
            std::snprintf(buf, sizeof buf, "M=%d: rate %.4g vs %.4g (z=%+.2f) ", c.m, rate,
                          exact, z);
            detail += buf;
            ok = ok && std::fabs(z) <= 3.0;
        }
        report(ok, "simulated miss rate vs closed form (|z| <= 3)", detail);
    }

    { // simulated wrong-zero rate for a nonzero coordinate vs closed form
        double exact = th::fn_bounds(0.5, 0.1, 100, 1.0, 10).exact_ternary;
        double rate = orc::sim_fn_rate_model(0.5, 0.1, 100, 1.0, 10, 100000, seed);
        double z = (rate - exact) / std::sqrt(exact * (1.0 - exact) / 100000);
        std::snprintf(buf, sizeof buf, "rate %.4g vs %.4g (z=%+.2f)", rate, exact, z);
        report(std::fabs(z) <= 3.0, "simulated false-zero rate vs closed form (|z| <= 3)", buf);
    }

    { // simulated "fewer than two clean measurements" rate vs closed form
        double exact = th::tie_error_probability(10, 0.1, 500);
        double rate = orc::sim_tie_error(10, 0.1, 500, 100000, seed);
        double z = (rate - exact) / std::sqrt(exact * (1.0 - exact) / 100000);
        std::snprintf(buf, sizeof buf, "rate %.4g vs %.4g (z=%+.2f)", rate, exact, z);
        report(std::fabs(z) <= 3.0, "simulated tie-failure rate vs closed form (|z| <= 3)", buf);
    }

    std::printf("%s\n", failures == 0 ? "all validations passed" : "validation FAILURES present");
    return failures == 0 ? 0 : 1;
}

int run_experiment(tiescan::ExperimentSpec spec, const std::string& out_csv,
                   const std::string& out_contour, const std::vector<double>& levels, int jobs) {
    const auto t0 = std::chrono::steady_clock::now();
    tiescan::GridResult grid = tiescan::run_grid(spec, jobs);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (out_csv.empty()) {
        std::cout << tiescan::csv_string(grid);
    } else {
        tiescan::emit_csv(grid, out_csv);
        std::cerr << "wrote " << out_csv << "\n";
    }
    if (!out_contour.empty()) {
        tiescan::contour::emit_contour(grid, out_contour, levels);
        std::cerr << "wrote " << out_contour << "\n";
    }
    std::cerr << grid.cells.size() << " cells x " << spec.trials << " trials in "
              << std::fixed << std::setprecision(1) << elapsed
              << " s; tie violations: " << grid.tie_violations_total << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse-projection recovery toolkit"};
    app.require_subcommand(1);

    // decode
    auto* dec = app.add_subcommand("decode", "decode a synthetic instance of a stored signal");
    std::string signal_path, out_path = "decode.json";
    std::int64_t dec_n = -1, dec_m = 0;
    double dec_gamma = 0.0, dec_eps = 0.0, dec_tie_tol = 1e-10, dec_sigma = 0.0;
    int dec_max_iter = 4;
    std::uint64_t dec_seed = 1;
    std::optional<std::uint64_t> dec_noise_seed;
    dec->add_option("--signal", signal_path, "signal file (first line `N K`, then `index value`)")
        ->required();
    dec->add_option("--n", dec_n, "expected signal dimension (cross-checked against the file)");
    dec->add_option("--m", dec_m, "number of measurements")->required();
    dec->add_option("--gamma", dec_gamma, "entry survival probability in (0,1]")->required();
    dec->add_option("--seed", dec_seed, "design seed");
    dec->add_option("--epsilon", dec_eps, "zero-detection threshold");
    dec->add_option("--tie-tol", dec_tie_tol, "relative tie clustering tolerance");
    dec->add_option("--max-iter", dec_max_iter, "residual rounds");
    dec->add_option("--sigma", dec_sigma, "measurement noise standard deviation");
    dec->add_option("--noise-seed", dec_noise_seed, "noise seed (required when --sigma > 0)");
    dec->add_option("--output", out_path, "output JSON path");

    // bounds
    auto* bnd = app.add_subcommand("bounds", "evaluate planning formulas");
    BoundsArgs ba;
    bnd->add_option("--n", ba.n, "ambient dimension");
    bnd->add_option("--k", ba.k, "number of nonzeros");
    bnd->add_option("--m", ba.m, "number of measurements");
    bnd->add_option("--gamma", ba.gamma, "entry survival probability");
    bnd->add_option("--epsilon", ba.epsilon, "zero-detection threshold");
    bnd->add_option("--delta", ba.delta, "failure probability budget");
    bnd->add_option("--sigma", ba.sigma, "noise standard deviation");
    bnd->add_option("--what", ba.what,
                    "quantities: fp-worst fp-ternary fn support-m tie-m alpha h H")
        ->required();

    // validate
    auto* val = app.add_subcommand("validate", "cross-check formulas against independent oracles");
    std::uint64_t val_seed = 20260819;
    val->add_option("--seed", val_seed, "simulation seed");

    // experiment
    auto* exp = app.add_subcommand("experiment", "run a seeded (K, M) recovery grid");
    std::int64_t exp_n = 0, exp_trials = 100;
    std::string k_list, m_list, m_range, gamma_str = "1/K", criterion = "full";
    std::string exp_csv, exp_contour, levels_str = "0.5,0.9,0.99";
    double exp_eps = 0.0, exp_sigma = 0.0;
    std::uint64_t exp_seed = 1;
    int exp_jobs = 0;
    exp->add_option("--n", exp_n, "ambient dimension")->required();
    exp->add_option("--k-list", k_list, "comma-separated nonzero counts")->required();
    exp->add_option("--m-list", m_list, "comma-separated measurement counts");
    exp->add_option("--m-range", m_range, "measurement range start:stop:step");
    exp->add_option("--trials", exp_trials, "trials per cell");
    exp->add_option("--gamma", gamma_str, "survival probability: `1/K` or a number");
    exp->add_option("--epsilon", exp_eps, "zero-detection threshold");
    exp->add_option("--sigma", exp_sigma, "noise standard deviation");
    exp->add_option("--seed", exp_seed, "master seed");
    exp->add_option("--criterion", criterion, "success criterion: full | support");
    exp->add_option("--out-csv", exp_csv, "CSV output path (stdout when omitted)");
    exp->add_option("--out-contour", exp_contour, "contour SVG output path");
    exp->add_option("--levels", levels_str, "contour levels, comma-separated");
    exp->add_option("--jobs", exp_jobs, "worker threads (default: TIESCAN_JOBS or hardware)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (dec->parsed())
            return run_decode(signal_path, dec_n, dec_m, dec_gamma, dec_seed, dec_eps,
                              dec_tie_tol, dec_max_iter, dec_sigma, dec_noise_seed, out_path);
        if (bnd->parsed()) return run_bounds(ba);
        if (val->parsed()) return run_validate(val_seed);
        if (exp->parsed()) {
            tiescan::ExperimentSpec spec;
            spec.n = exp_n;
            spec.k_values = parse_int_list(k_list, "--k-list");
            if (m_list.empty() == m_range.empty())
                throw CLI::ValidationError("experiment: exactly one of --m-list / --m-range");
            spec.m_values = m_list.empty() ? parse_range(m_range)
                                           : parse_int_list(m_list, "--m-list");
            spec.trials = exp_trials;
            if (gamma_str == "1/K" || gamma_str == "1/k") {
                spec.gamma_rule = tiescan::GammaRule::inverse_k;
            } else {
                spec.gamma_rule = tiescan::GammaRule::fixed;
                spec.gamma_fixed = std::stod(gamma_str);
            }
            spec.epsilon = exp_eps;
            spec.sigma = exp_sigma;
            spec.master_seed = exp_seed;
            if (criterion == "full")
                spec.criterion = tiescan::SuccessCriterion::full_recovery;
            else if (criterion == "support")
                spec.criterion = tiescan::SuccessCriterion::support_recovery;
            else
                throw CLI::ValidationError("experiment: --criterion must be full or support");
            return run_experiment(spec, exp_csv, exp_contour,
                                  parse_double_list(levels_str, "--levels"), exp_jobs);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
