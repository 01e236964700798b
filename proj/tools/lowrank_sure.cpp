// Command-line front end: single-matrix SURE reports, tuning-path sweeps,
// the df bias simulation and finite-difference oracle checks.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "lowrank/csv.hpp"
#include "lowrank/oracle.hpp"
#include "lowrank/risk.hpp"
#include "lowrank/simulation.hpp"

namespace {

std::string fmt10(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void print_error(const std::string& code, const std::string& detail) {
    nlohmann::ordered_json j;
    j["error"] = code;
    j["detail"] = detail;
    std::cerr << j.dump() << "\n";
}

std::string error_code_for(const std::exception& ex) {
    if (dynamic_cast<const lowrank::CsvError*>(&ex)) return "bad_csv";
    if (dynamic_cast<const lowrank::DegenerateSpectrum*>(&ex)) return "degenerate_spectrum";
    if (dynamic_cast<const lowrank::ThresholdAtSingularValue*>(&ex)) {
        return "threshold_at_singular_value";
    }
    if (dynamic_cast<const lowrank::ZeroSingularValue*>(&ex)) return "zero_singular_value";
    if (dynamic_cast<const lowrank::SimulationAborted*>(&ex)) return "simulation_aborted";
    if (dynamic_cast<const lowrank::NumericalError*>(&ex)) return "numerical_error";
    if (dynamic_cast<const std::ios_base::failure*>(&ex)) return "io_error";
    if (dynamic_cast<const std::invalid_argument*>(&ex)) return "invalid_argument";
    if (dynamic_cast<const std::domain_error*>(&ex)) return "domain_error";
    return "internal_error";
}

long parse_long(const std::string& s) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::invalid_argument("not an integer: '" + s + "'");
    }
    return v;
}

double parse_double(const std::string& s) {
    std::string_view body = s;
    if (!body.empty() && body.front() == '+') body.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
    if (ec != std::errc{} || ptr != body.data() + body.size() || !std::isfinite(v)) {
        throw std::invalid_argument("not a finite number: '" + s + "'");
    }
    return v;
}

// Rank grids are "lo..hi" (or one integer); threshold grids are
// "start:stop:step" with an inclusive stop (or one value).
std::vector<double> parse_grid(lowrank::EstimatorFamily family, const std::string& spec) {
    std::vector<double> grid;
    if (family == lowrank::EstimatorFamily::reduced_rank) {
        const std::size_t dots = spec.find("..");
        if (dots == std::string::npos) {
            grid.push_back(static_cast<double>(parse_long(spec)));
            return grid;
        }
        const long lo = parse_long(spec.substr(0, dots));
        const long hi = parse_long(spec.substr(dots + 2));
        if (lo < 0 || hi < lo) {
            throw std::invalid_argument("bad rank grid '" + spec + "'");
        }
        for (long r = lo; r <= hi; ++r) grid.push_back(static_cast<double>(r));
        return grid;
    }
    const std::size_t c1 = spec.find(':');
    if (c1 == std::string::npos) {
        const double v = parse_double(spec);
        if (v < 0.0) throw std::invalid_argument("thresholds must be non-negative");
        grid.push_back(v);
        return grid;
    }
    const std::size_t c2 = spec.find(':', c1 + 1);
    if (c2 == std::string::npos || spec.find(':', c2 + 1) != std::string::npos) {
        throw std::invalid_argument("threshold grid must be start:stop:step; got '" +
                                    spec + "'");
    }
    const double start = parse_double(spec.substr(0, c1));
    const double stop = parse_double(spec.substr(c1 + 1, c2 - c1 - 1));
    const double step = parse_double(spec.substr(c2 + 1));
    if (start < 0.0 || stop < start) {
        throw std::invalid_argument("bad threshold grid '" + spec + "'");
    }
    if (stop == start) {
        grid.push_back(start);
        return grid;
    }
    if (!(step > 0.0)) {
        throw std::invalid_argument("threshold grid step must be positive");
    }
    const long n = std::lround(std::floor((stop - start) / step + 1e-9));
    for (long i = 0; i <= n; ++i) grid.push_back(start + step * static_cast<double>(i));
    return grid;
}

int threads_from_env() {
    const char* raw = std::getenv("LOWRANK_SURE_THREADS");
    if (raw == nullptr || *raw == '\0') return 0;  // all available cores
    int n = 0;
    const auto [ptr, ec] = std::from_chars(raw, raw + std::string_view(raw).size(), n);
    if (ec != std::errc{} || *ptr != '\0' || n < 1) {
        throw std::invalid_argument("LOWRANK_SURE_THREADS must be a positive integer");
    }
    return n;
}

lowrank::MatrixObs load_observation(const std::string& path, double sigma2, bool transpose) {
    Eigen::MatrixXd m = lowrank::read_matrix_csv_file(path);
    if (transpose) m.transposeInPlace();
    return lowrank::MatrixObs(std::move(m), sigma2);
}

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

struct SureOpts {
    std::string input;
    double sigma2 = 0.0;
    std::string estimator;
    bool transpose = false;
};

void run_sure(const SureOpts& o) {
    const lowrank::MatrixObs y = load_observation(o.input, o.sigma2, o.transpose);
    const lowrank::SpectralEstimator est = lowrank::parse_estimator_spec(o.estimator);
    std::cout << lowrank::risk_report_json(est, lowrank::sure_estimate(y, est)) << "\n";
}

struct PathOpts {
    std::string input;
    double sigma2 = 0.0;
    std::string family;
    std::string grid;
    bool transpose = false;
};

void run_path(const PathOpts& o) {
    const lowrank::MatrixObs y = load_observation(o.input, o.sigma2, o.transpose);
    const lowrank::EstimatorFamily family = lowrank::parse_family(o.family);
    std::vector<lowrank::SpectralEstimator> ests;
    for (double v : parse_grid(family, o.grid)) {
        ests.push_back(lowrank::make_family_estimator(family, v));
    }
    const lowrank::SurePath path = lowrank::sure_path(y, ests);

    std::cout << "param,rss,df,sure,stein_valid,error\n";
    for (const lowrank::PathEntry& e : path.entries) {
        const std::string param = fmt10(lowrank::estimator_param(e.estimator));
        if (e.report) {
            std::cout << param << ',' << fmt10(e.report->rss) << ','
                      << fmt10(e.report->divergence) << ',' << fmt10(e.report->sure) << ','
                      << (e.report->stein_valid ? "true" : "false") << ",\n";
        } else {
            std::cout << param << ",,,,," << csv_quote(e.error) << "\n";
        }
    }
    // Prefer the minimizer among entries whose SURE is trustworthy.
    std::string argmin = "nan";
    if (path.best_stein_valid) {
        argmin = fmt10(lowrank::estimator_param(path.entries[*path.best_stein_valid].estimator));
    } else if (path.best_any) {
        argmin = fmt10(lowrank::estimator_param(path.entries[*path.best_any].estimator));
    }
    std::cout << "# argmin_sure=" << argmin << "\n";
}

struct SimulateOpts {
    int p = 21;
    int q = 21;
    int b = 5000;
    std::uint64_t seed = 1;
    std::string family;
    std::string grid;  // empty: 40 thresholds in (0, 10] for hard/soft
    std::string out;
};

void run_simulate(const SimulateOpts& o) {
    lowrank::SimConfig cfg;
    cfg.p = o.p;
    cfg.q = o.q;
    cfg.replicates = o.b;
    cfg.seed = o.seed;
    cfg.family = lowrank::parse_family(o.family);
    if (!o.grid.empty()) {
        cfg.grid = parse_grid(cfg.family, o.grid);
    } else if (cfg.family != lowrank::EstimatorFamily::reduced_rank) {
        cfg.grid = parse_grid(cfg.family, "0.25:10:0.25");
    } else {
        throw std::invalid_argument("--grid is required for --family rr");
    }

    const lowrank::SimulationResult result = lowrank::run_simulation(cfg, threads_from_env());

    std::ofstream file(o.out, std::ios::binary);
    if (!file) {
        throw std::ios_base::failure("cannot open '" + o.out + "' for writing");
    }
    lowrank::write_results_csv(file, result);
    file.flush();
    if (!file) {
        throw std::ios_base::failure("failed writing '" + o.out + "'");
    }

    double worst = 0.0;
    double worst_param = result.points.front().param;
    for (const lowrank::SimulationPoint& pt : result.points) {
        const double ratio =
            pt.se > 0.0 ? std::abs(pt.bias) / pt.se
                        : (pt.bias == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        if (ratio > worst) {
            worst = ratio;
            worst_param = pt.param;
        }
    }
    std::cout << "max |bias|/se = " << fmt10(worst) << " at param " << fmt10(worst_param)
              << " (" << result.points.size() << " grid points, B = " << cfg.replicates
              << ")\n";
}

struct CheckOpts {
    int p = 6;
    int q = 5;
    std::uint64_t seed = 1;
    std::string estimator;
    double h = 1e-5;
};

void run_check_divergence(const CheckOpts& o) {
    const lowrank::SpectralEstimator est = lowrank::parse_estimator_spec(o.estimator);
    if (!(o.h > 0.0) || !std::isfinite(o.h)) {
        throw std::invalid_argument("--h must be a positive step");
    }
    // Redraw until the spectrum is comfortably separated relative to the
    // step, so the finite difference never straddles a tie.
    const Eigen::MatrixXd no_mean;
    for (std::uint64_t attempt = 0; attempt < 10000; ++attempt) {
        lowrank::GaussianStream rng = lowrank::replicate_stream(o.seed, attempt);
        const lowrank::MatrixObs y =
            lowrank::sample_gaussian_matrix(o.p, o.q, no_mean, 1.0, rng);
        const lowrank::SvdFactors f = lowrank::svd_decompose(y);
        if (!(lowrank::check_distinct(f).min_relative_gap > 100.0 * o.h)) continue;

        const double analytic = lowrank::estimator_divergence(f.d, o.p, o.q, est);
        const double numeric =
            lowrank::finite_difference_divergence(est, y, lowrank::FdConfig{o.h});
        const double rel_err = std::abs(analytic - numeric) / std::max(std::abs(analytic), 1.0);
        std::cout << "{\"analytic\":" << fmt17(analytic) << ",\"numeric\":" << fmt17(numeric)
                  << ",\"rel_err\":" << fmt17(rel_err) << "}\n";
        return;
    }
    throw lowrank::NumericalError("no draw with the required spectral separation");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral shrinkage estimators for noisy matrices, tuned by "
                 "unbiased risk estimates"};
    app.require_subcommand(1);

    SureOpts sure_opts;
    CLI::App* sure = app.add_subcommand("sure", "SURE report for one estimator on one matrix");
    sure->add_option("--input", sure_opts.input, "matrix CSV")->required();
    sure->add_option("--sigma2", sure_opts.sigma2, "noise variance (known)")
        ->required()
        ->check(CLI::PositiveNumber);
    sure->add_option("--estimator", sure_opts.estimator, "rr:<rank>, hard:<lambda> or soft:<lambda>")
        ->required();
    sure->add_flag("--transpose", sure_opts.transpose, "analyze the transpose (for wide input)");
    sure->callback([&] { run_sure(sure_opts); });

    PathOpts path_opts;
    CLI::App* path = app.add_subcommand("path", "SURE sweep over an estimator family");
    path->add_option("--input", path_opts.input, "matrix CSV")->required();
    path->add_option("--sigma2", path_opts.sigma2, "noise variance (known)")
        ->required()
        ->check(CLI::PositiveNumber);
    path->add_option("--family", path_opts.family, "rr, hard or soft")->required();
    path->add_option("--grid", path_opts.grid, "lo..hi for rr, start:stop:step for thresholds")
        ->required();
    path->add_flag("--transpose", path_opts.transpose, "analyze the transpose (for wide input)");
    path->callback([&] { run_path(path_opts); });

    SimulateOpts sim_opts;
    CLI::App* simulate = app.add_subcommand(
        "simulate", "Monte Carlo bias of divergence-based df against the covariance definition");
    simulate->add_option("--p", sim_opts.p, "rows")->check(CLI::PositiveNumber);
    simulate->add_option("--q", sim_opts.q, "cols")->check(CLI::PositiveNumber);
    simulate->add_option("--b", sim_opts.b, "replicates")->check(CLI::PositiveNumber);
    simulate->add_option("--seed", sim_opts.seed, "RNG seed");
    simulate->add_option("--family", sim_opts.family, "rr, hard or soft")->required();
    simulate->add_option("--grid", sim_opts.grid,
                         "lo..hi for rr, start:stop:step for thresholds "
                         "(default 0.25:10:0.25 for thresholds)");
    simulate->add_option("--out", sim_opts.out, "results CSV path")->required();
    simulate->callback([&] { run_simulate(sim_opts); });

    CheckOpts check_opts;
    CLI::App* check = app.add_subcommand(
        "check-divergence", "compare analytic divergence with central finite differences");
    // Long-only help here: the short -h slot belongs to the step size.
    check->set_help_flag("--help", "print help");
    check->add_option("--p", check_opts.p, "rows")->check(CLI::PositiveNumber);
    check->add_option("--q", check_opts.q, "cols")->check(CLI::PositiveNumber);
    check->add_option("--seed", check_opts.seed, "RNG seed");
    check->add_option("--estimator", check_opts.estimator,
                      "rr:<rank>, hard:<lambda> or soft:<lambda>")
        ->required();
    check->add_option("--h", check_opts.h, "central-difference step");
    check->callback([&] { run_check_divergence(check_opts); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);  // --help and friends
        }
        print_error("usage", e.what());
        return 2;
    } catch (const std::exception& e) {
        print_error(error_code_for(e), e.what());
        return 1;
    }
    return 0;
}
