#include "lowrank/estimators.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

namespace lowrank {

namespace {

void validate_rank(const ReducedRank& rr, Eigen::Index q) {
    if (rr.rank < 0 || rr.rank > q) {
        throw std::invalid_argument("rank " + std::to_string(rr.rank) +
                                    " outside [0, " + std::to_string(q) + "]");
    }
}

void validate_lambda(double lambda) {
    if (!std::isfinite(lambda) || lambda < 0.0) {
        throw std::invalid_argument("threshold must be finite and non-negative");
    }
}

void validate_custom(const CustomSpectral& c, Eigen::Index q) {
    if (c.values.size() != c.derivatives.size()) {
        throw std::invalid_argument("custom estimator: values and derivatives differ in length");
    }
    if (static_cast<Eigen::Index>(c.values.size()) != q) {
        throw std::invalid_argument("custom estimator has " + std::to_string(c.values.size()) +
                                    " functions for a spectrum of length " + std::to_string(q));
    }
}

void validate_spectrum(const Eigen::VectorXd& d) {
    if (d.size() == 0) throw std::invalid_argument("empty spectrum");
    for (Eigen::Index k = 0; k < d.size(); ++k) {
        if (!std::isfinite(d(k)) || d(k) < 0.0) {
            throw std::invalid_argument("spectrum must be non-negative and finite");
        }
        if (k > 0 && d(k) > d(k - 1)) {
            throw std::invalid_argument("spectrum must be non-increasing");
        }
    }
}

double checked_custom_eval(const std::function<double(double)>& f, double x) {
    const double v = f(x);
    if (!std::isfinite(v)) {
        throw std::domain_error("custom spectral function returned a non-finite value");
    }
    return v;
}

}  // namespace

Eigen::VectorXd spectral_values(const SpectralEstimator& est, const Eigen::VectorXd& d) {
    validate_spectrum(d);
    const Eigen::Index q = d.size();
    Eigen::VectorXd g(q);
    if (const auto* rr = std::get_if<ReducedRank>(&est)) {
        validate_rank(*rr, q);
        for (Eigen::Index k = 0; k < q; ++k) g(k) = k < rr->rank ? d(k) : 0.0;
    } else if (const auto* hard = std::get_if<HardThreshold>(&est)) {
        validate_lambda(hard->lambda);
        for (Eigen::Index k = 0; k < q; ++k) g(k) = d(k) >= hard->lambda ? d(k) : 0.0;
    } else if (const auto* soft = std::get_if<SoftThreshold>(&est)) {
        validate_lambda(soft->lambda);
        for (Eigen::Index k = 0; k < q; ++k) g(k) = std::max(0.0, d(k) - soft->lambda);
    } else {
        const auto& c = std::get<CustomSpectral>(est);
        validate_custom(c, q);
        for (Eigen::Index k = 0; k < q; ++k) {
            g(k) = checked_custom_eval(c.values[static_cast<std::size_t>(k)], d(k));
            if (g(k) < 0.0) {
                throw std::domain_error("custom spectral function returned a negative value");
            }
        }
    }
    return g;
}

Eigen::VectorXd spectral_derivatives(const SpectralEstimator& est, const Eigen::VectorXd& d) {
    validate_spectrum(d);
    const Eigen::Index q = d.size();
    Eigen::VectorXd gp(q);
    if (const auto* rr = std::get_if<ReducedRank>(&est)) {
        validate_rank(*rr, q);
        for (Eigen::Index k = 0; k < q; ++k) gp(k) = k < rr->rank ? 1.0 : 0.0;
    } else if (const auto* hard = std::get_if<HardThreshold>(&est)) {
        validate_lambda(hard->lambda);
        for (Eigen::Index k = 0; k < q; ++k) gp(k) = d(k) >= hard->lambda ? 1.0 : 0.0;
    } else if (const auto* soft = std::get_if<SoftThreshold>(&est)) {
        validate_lambda(soft->lambda);
        for (Eigen::Index k = 0; k < q; ++k) gp(k) = d(k) >= soft->lambda ? 1.0 : 0.0;
    } else {
        const auto& c = std::get<CustomSpectral>(est);
        validate_custom(c, q);
        for (Eigen::Index k = 0; k < q; ++k) {
            gp(k) = checked_custom_eval(c.derivatives[static_cast<std::size_t>(k)], d(k));
        }
    }
    return gp;
}

Eigen::MatrixXd apply_estimator(const SvdFactors& f, const SpectralEstimator& est) {
    if (f.u.cols() != f.d.size() || f.v.cols() != f.d.size() || f.v.rows() != f.v.cols()) {
        throw std::invalid_argument("inconsistent SVD factor shapes");
    }
    const Eigen::VectorXd g = spectral_values(est, f.d);
    return f.u * g.asDiagonal() * f.v.transpose();
}

SteinConditionReport validate_stein_conditions(const SpectralEstimator& est,
                                               double d_max, int grid_n) {
    if (!(d_max > 0.0) || !std::isfinite(d_max)) {
        throw std::invalid_argument("d_max must be positive and finite");
    }
    if (grid_n < 2) {
        throw std::invalid_argument("grid_n must be at least 2");
    }
    if (std::holds_alternative<ReducedRank>(est) || std::holds_alternative<SoftThreshold>(est)) {
        return {true, true, true, true};
    }
    if (const auto* hard = std::get_if<HardThreshold>(&est)) {
        // The jump of height lambda at the threshold breaks weak
        // differentiability, so the divergence is not an unbiased df
        // estimate. lambda == 0 is the identity (continuous) but is
        // still reported invalid so the flag tracks the family.
        const bool cont = hard->lambda == 0.0;
        return {true, true, cont, false};
    }

    const auto& c = std::get<CustomSpectral>(est);
    if (c.values.size() != c.derivatives.size() || c.values.empty()) {
        throw std::invalid_argument("custom estimator: values and derivatives must be "
                                    "non-empty and equal in length");
    }
    const std::size_t q = c.values.size();
    const std::size_t n = static_cast<std::size_t>(grid_n);
    const double dx = d_max / static_cast<double>(n);

    // Sample every function on (0, d_max]. Any non-finite or negative
    // sample fails all conditions rather than throwing: this routine
    // reports, it does not enforce.
    std::vector<std::vector<double>> fs(q, std::vector<double>(n));
    std::vector<std::vector<double>> fps(q, std::vector<double>(n));
    for (std::size_t k = 0; k < q; ++k) {
        for (std::size_t j = 0; j < n; ++j) {
            const double x = d_max * static_cast<double>(j + 1) / static_cast<double>(n);
            const double v = c.values[k](x);
            const double vp = c.derivatives[k](x);
            if (!std::isfinite(v) || !std::isfinite(vp) || v < 0.0) {
                return {false, false, false, false};
            }
            fs[k][j] = v;
            fps[k][j] = vp;
        }
    }

    double max_abs = 0.0;
    for (const auto& col : fs)
        for (double v : col) max_abs = std::max(max_abs, std::abs(v));
    const double tol = 1e-12 * std::max(1.0, max_abs);

    bool monotone = true;
    for (std::size_t k = 0; k + 1 < q && monotone; ++k) {
        for (std::size_t j = 0; j < n; ++j) {
            if (fs[k][j] + tol < fs[k + 1][j]) {
                monotone = false;
                break;
            }
        }
    }

    bool deriv_nonneg = true;
    for (const auto& col : fps) {
        for (double v : col) {
            if (v < -tol) {
                deriv_nonneg = false;
                break;
            }
        }
        if (!deriv_nonneg) break;
    }

    // A genuine jump shows as an increment far larger than any sampled
    // slope could explain over one grid step.
    bool continuous = true;
    for (std::size_t k = 0; k < q && continuous; ++k) {
        double max_slope = 0.0;
        for (double v : fps[k]) max_slope = std::max(max_slope, std::abs(v));
        const double allowed = 10.0 * std::max(max_slope, 1e-12) * dx;
        for (std::size_t j = 0; j + 1 < n; ++j) {
            if (std::abs(fs[k][j + 1] - fs[k][j]) > allowed) {
                continuous = false;
                break;
            }
        }
    }

    const bool valid = monotone && deriv_nonneg && continuous;
    return {monotone, deriv_nonneg, continuous, valid};
}

SpectralEstimator parse_estimator_spec(const std::string& spec) {
    const std::size_t colon = spec.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= spec.size()) {
        throw std::invalid_argument("estimator spec must look like rr:<rank>, "
                                    "hard:<lambda> or soft:<lambda>; got '" + spec + "'");
    }
    const std::string kind = spec.substr(0, colon);
    const std::string arg = spec.substr(colon + 1);
    const char* begin = arg.data();
    const char* end = arg.data() + arg.size();
    if (kind == "rr") {
        int rank = 0;
        const auto [ptr, ec] = std::from_chars(begin, end, rank);
        if (ec != std::errc{} || ptr != end || rank < 0) {
            throw std::invalid_argument("bad rank in estimator spec '" + spec + "'");
        }
        return ReducedRank{rank};
    }
    if (kind == "hard" || kind == "soft") {
        double lambda = 0.0;
        const auto [ptr, ec] = std::from_chars(begin, end, lambda);
        if (ec != std::errc{} || ptr != end || !std::isfinite(lambda) || lambda < 0.0) {
            throw std::invalid_argument("bad threshold in estimator spec '" + spec + "'");
        }
        return kind == "hard" ? SpectralEstimator(HardThreshold{lambda})
                              : SpectralEstimator(SoftThreshold{lambda});
    }
    throw std::invalid_argument("unknown estimator kind '" + kind + "'");
}

std::string estimator_spec_string(const SpectralEstimator& est) {
    char buf[64];
    if (const auto* rr = std::get_if<ReducedRank>(&est)) {
        std::snprintf(buf, sizeof buf, "rr:%d", rr->rank);
    } else if (const auto* hard = std::get_if<HardThreshold>(&est)) {
        std::snprintf(buf, sizeof buf, "hard:%.17g", hard->lambda);
    } else if (const auto* soft = std::get_if<SoftThreshold>(&est)) {
        std::snprintf(buf, sizeof buf, "soft:%.17g", soft->lambda);
    } else {
        return "custom";
    }
    return buf;
}

double estimator_param(const SpectralEstimator& est) {
    if (const auto* rr = std::get_if<ReducedRank>(&est)) return rr->rank;
    if (const auto* hard = std::get_if<HardThreshold>(&est)) return hard->lambda;
    if (const auto* soft = std::get_if<SoftThreshold>(&est)) return soft->lambda;
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace lowrank
