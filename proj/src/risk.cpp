#include "lowrank/risk.hpp"

#include <cmath>
#include <cstdio>

namespace lowrank {

namespace {

void validate_divergence_args(const Eigen::VectorXd& d, int p, int q) {
    if (q < 1 || p < q) {
        throw std::invalid_argument("need p >= q >= 1");
    }
    if (d.size() != q) {
        throw std::invalid_argument("spectrum length " + std::to_string(d.size()) +
                                    " does not match q = " + std::to_string(q));
    }
    for (Eigen::Index k = 0; k < d.size(); ++k) {
        if (!std::isfinite(d(k)) || d(k) < 0.0) {
            throw std::invalid_argument("spectrum must be non-negative and finite");
        }
        if (k > 0 && d(k) > d(k - 1)) {
            throw std::invalid_argument("spectrum must be non-increasing");
        }
    }
}

void require_distinct(const Eigen::VectorXd& d, double gap_tol, const char* context) {
    const DistinctnessReport rep = spectrum_distinctness(d, gap_tol);
    if (!rep.distinct) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "%s: tied singular values (min relative gap %.3g, tol %.3g)",
                      context, rep.min_relative_gap, gap_tol);
        throw DegenerateSpectrum(rep.min_relative_gap, buf);
    }
}

}  // namespace

double divergence_reduced_rank(const Eigen::VectorXd& d, int p, int q, int rank,
                               double gap_tol) {
    validate_divergence_args(d, p, q);
    if (rank < 0 || rank > q) {
        throw std::invalid_argument("rank " + std::to_string(rank) + " outside [0, " +
                                    std::to_string(q) + "]");
    }
    // Constant map and identity map: exact values regardless of ties.
    if (rank == 0) return 0.0;
    if (rank == q) return static_cast<double>(p) * q;
    require_distinct(d, gap_tol, "reduced-rank divergence");
    double cross = 0.0;
    for (int k = 0; k < rank; ++k) {
        for (int l = rank; l < q; ++l) {
            const double dk2 = d(k) * d(k);
            const double dl2 = d(l) * d(l);
            cross += (dk2 + dl2) / (dk2 - dl2);
        }
    }
    return static_cast<double>(p) * rank + cross;
}

double divergence_hard_threshold(const Eigen::VectorXd& d, int p, int q, double lambda,
                                 double gap_tol) {
    validate_divergence_args(d, p, q);
    if (!std::isfinite(lambda) || lambda < 0.0) {
        throw std::invalid_argument("threshold must be finite and non-negative");
    }
    if (lambda == 0.0) return static_cast<double>(p) * q;  // identity map
    const double scale = std::max(d(0), 1.0);
    for (int k = 0; k < q; ++k) {
        if (std::abs(d(k) - lambda) <= gap_tol * scale) {
            throw ThresholdAtSingularValue(
                "threshold " + std::to_string(lambda) + " lies on singular value #" +
                std::to_string(k + 1) + "; the closed form is invalid there");
        }
    }
    int kept = 0;
    while (kept < q && d(kept) >= lambda) ++kept;
    if (kept == 0) return 0.0;  // estimator is zero near d
    require_distinct(d, gap_tol, "hard-threshold divergence");
    double cross = 0.0;
    for (int k = 0; k < kept; ++k) {
        const double dk2 = d(k) * d(k);
        for (int l = 0; l < q; ++l) {
            if (l == k) continue;
            cross += dk2 / (dk2 - d(l) * d(l));
        }
    }
    return (static_cast<double>(p) - q + 1.0) * kept + 2.0 * cross;
}

double divergence_soft_threshold(const Eigen::VectorXd& d, int p, int q, double lambda,
                                 double gap_tol) {
    validate_divergence_args(d, p, q);
    if (!std::isfinite(lambda) || lambda < 0.0) {
        throw std::invalid_argument("threshold must be finite and non-negative");
    }
    if (lambda == 0.0) return static_cast<double>(p) * q;  // identity map
    if (d(0) < lambda) return 0.0;                         // estimator is zero near d
    require_distinct(d, gap_tol, "soft-threshold divergence");
    double total = 0.0;
    if (p > q) {
        double ratios = 0.0;
        // d(k) > 0 whenever d(k) > lambda > 0, so the ratio is safe.
        for (int k = 0; k < q; ++k) {
            if (d(k) > lambda) ratios += 1.0 - lambda / d(k);
        }
        total += (static_cast<double>(p) - q) * ratios;
    }
    for (int k = 0; k < q; ++k) {
        if (d(k) >= lambda) total += 1.0;
    }
    double cross = 0.0;
    for (int k = 0; k < q; ++k) {
        const double num = d(k) * std::max(0.0, d(k) - lambda);
        if (num == 0.0) continue;
        const double dk2 = d(k) * d(k);
        for (int l = 0; l < q; ++l) {
            if (l == k) continue;
            cross += num / (dk2 - d(l) * d(l));
        }
    }
    return total + 2.0 * cross;
}

double divergence_spectral_general(const Eigen::VectorXd& d, int p, int q,
                                   const Eigen::VectorXd& g, const Eigen::VectorXd& gp,
                                   double gap_tol) {
    validate_divergence_args(d, p, q);
    if (g.size() != q || gp.size() != q) {
        throw std::invalid_argument("g and gp must match the spectrum length");
    }
    for (int k = 0; k < q; ++k) {
        if (!std::isfinite(g(k)) || !std::isfinite(gp(k))) {
            throw std::domain_error("spectral values and derivatives must be finite");
        }
        if (g(k) < 0.0) {
            throw std::domain_error("spectral values must be non-negative");
        }
    }
    require_distinct(d, gap_tol, "spectral divergence");
    double total = 0.0;
    if (p > q) {
        double ratios = 0.0;
        for (int k = 0; k < q; ++k) {
            if (d(k) > 0.0) {
                ratios += g(k) / d(k);
            } else if (g(k) == 0.0) {
                // lim f(d)/d = f'(0) when f(0) = 0.
                ratios += gp(k);
            } else {
                throw ZeroSingularValue("f_" + std::to_string(k + 1) +
                                        "(0) != 0 with p > q: f(d)/d is undefined at d = 0");
            }
        }
        total += (static_cast<double>(p) - q) * ratios;
    }
    total += gp.sum();
    double cross = 0.0;
    for (int k = 0; k < q; ++k) {
        const double num = d(k) * g(k);
        if (num == 0.0) continue;
        const double dk2 = d(k) * d(k);
        for (int l = 0; l < q; ++l) {
            if (l == k) continue;
            cross += num / (dk2 - d(l) * d(l));
        }
    }
    return total + 2.0 * cross;
}

double estimator_divergence(const Eigen::VectorXd& d, int p, int q,
                            const SpectralEstimator& est, double gap_tol) {
    if (const auto* rr = std::get_if<ReducedRank>(&est)) {
        return divergence_reduced_rank(d, p, q, rr->rank, gap_tol);
    }
    if (const auto* hard = std::get_if<HardThreshold>(&est)) {
        return divergence_hard_threshold(d, p, q, hard->lambda, gap_tol);
    }
    if (const auto* soft = std::get_if<SoftThreshold>(&est)) {
        return divergence_soft_threshold(d, p, q, soft->lambda, gap_tol);
    }
    return divergence_spectral_general(d, p, q, spectral_values(est, d),
                                       spectral_derivatives(est, d), gap_tol);
}

namespace {

RiskReport report_from_factors(const MatrixObs& y, const SvdFactors& f, bool distinct,
                               const SpectralEstimator& est, double gap_tol) {
    const int p = static_cast<int>(y.rows());
    const int q = static_cast<int>(y.cols());
    const double div = estimator_divergence(f.d, p, q, est, gap_tol);
    const Eigen::VectorXd g = spectral_values(est, f.d);
    const Eigen::MatrixXd mu = f.u * g.asDiagonal() * f.v.transpose();
    const double rss = frobenius_norm_sq(y.y() - mu);
    const double d_max = f.d(0) > 0.0 ? f.d(0) : 1.0;
    const bool stein = validate_stein_conditions(est, d_max, 128).stein_valid;
    RiskReport r;
    r.divergence = div;
    r.rss = rss;
    r.sure = rss - y.sigma2() * (static_cast<double>(p) * q) + 2.0 * y.sigma2() * div;
    r.stein_valid = stein;
    r.distinct = distinct;
    return r;
}

}  // namespace

RiskReport sure_estimate(const MatrixObs& y, const SpectralEstimator& est, double gap_tol) {
    const SvdFactors f = svd_decompose(y, gap_tol);
    return report_from_factors(y, f, check_distinct(f).distinct, est, gap_tol);
}

SurePath sure_path(const MatrixObs& y, const std::vector<SpectralEstimator>& grid,
                   double gap_tol) {
    const SvdFactors f = svd_decompose(y, gap_tol);
    const bool distinct = check_distinct(f).distinct;
    SurePath path;
    path.entries.reserve(grid.size());
    for (const SpectralEstimator& est : grid) {
        PathEntry entry{est, std::nullopt, ""};
        try {
            entry.report = report_from_factors(y, f, distinct, est, gap_tol);
        } catch (const std::exception& ex) {
            entry.error = ex.what();
        }
        path.entries.push_back(std::move(entry));
    }
    for (std::size_t i = 0; i < path.entries.size(); ++i) {
        const auto& rep = path.entries[i].report;
        if (!rep) continue;
        if (!path.best_any || rep->sure < path.entries[*path.best_any].report->sure) {
            path.best_any = i;
        }
        if (rep->stein_valid &&
            (!path.best_stein_valid ||
             rep->sure < path.entries[*path.best_stein_valid].report->sure)) {
            path.best_stein_valid = i;
        }
    }
    return path;
}

std::string risk_report_json(const SpectralEstimator& est, const RiskReport& r) {
    // Spec strings contain no characters needing JSON escapes.
    auto num = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    std::string s = "{\"estimator\":\"" + estimator_spec_string(est) + "\"";
    s += ",\"rss\":" + num(r.rss);
    s += ",\"divergence\":" + num(r.divergence);
    s += ",\"df\":" + num(r.divergence);
    s += ",\"sure\":" + num(r.sure);
    s += ",\"stein_valid\":";
    s += r.stein_valid ? "true" : "false";
    s += ",\"distinct\":";
    s += r.distinct ? "true" : "false";
    s += "}";
    return s;
}

}  // namespace lowrank
