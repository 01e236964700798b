#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lowrank/estimators.hpp"

namespace lowrank {

// Everything SURE needs about one estimator at one observation. df is the
// divergence: for weakly differentiable estimators it is an unbiased
// estimate of sum_i cov(muhat_i, y_i) / sigma^2.
struct RiskReport {
    double divergence = 0.0;
    double rss = 0.0;
    double sure = 0.0;
    bool stein_valid = false;
    bool distinct = false;
};

// Closed-form divergences. All take the full non-increasing spectrum d of
// a p x q observation (p >= q = d.size()) and throw DegenerateSpectrum on
// ties, except where the estimator is locally constant or the identity:
// rank 0 / empty kept set give 0 and rank q / lambda 0 give p*q for any d.
double divergence_reduced_rank(const Eigen::VectorXd& d, int p, int q, int rank,
                               double gap_tol = kDefaultGapTol);
// Additionally throws ThresholdAtSingularValue when lambda > 0 lies within
// gap_tol * max(d_1, 1) of some d_k.
double divergence_hard_threshold(const Eigen::VectorXd& d, int p, int q, double lambda,
                                 double gap_tol = kDefaultGapTol);
double divergence_soft_threshold(const Eigen::VectorXd& d, int p, int q, double lambda,
                                 double gap_tol = kDefaultGapTol);

// General spectral-function divergence from precomputed g_k = f_k(d_k) and
// gp_k = f_k'(d_k):
//   (p - q) * sum_k g_k / d_k + sum_k gp_k + 2 * sum_{k != l} d_k g_k / (d_k^2 - d_l^2).
// At d_q = 0 with p > q the ratio term uses gp_q if g_q = 0, otherwise
// throws ZeroSingularValue.
double divergence_spectral_general(const Eigen::VectorXd& d, int p, int q,
                                   const Eigen::VectorXd& g, const Eigen::VectorXd& gp,
                                   double gap_tol = kDefaultGapTol);

// Dispatches to the matching closed form above (custom estimators go
// through divergence_spectral_general).
double estimator_divergence(const Eigen::VectorXd& d, int p, int q,
                            const SpectralEstimator& est, double gap_tol = kDefaultGapTol);

// Unbiased risk estimate for mean-squared error:
//   sure = rss - sigma^2 p q + 2 sigma^2 * divergence.
// The returned fields satisfy that identity bit-for-bit.
RiskReport sure_estimate(const MatrixObs& y, const SpectralEstimator& est,
                         double gap_tol = kDefaultGapTol);

struct PathEntry {
    SpectralEstimator estimator;
    std::optional<RiskReport> report;  // empty iff error is non-empty
    std::string error;
};

struct SurePath {
    std::vector<PathEntry> entries;
    // Index of the smallest SURE among entries whose report exists and is
    // stein_valid, and among all entries with a report. First wins ties.
    std::optional<std::size_t> best_stein_valid;
    std::optional<std::size_t> best_any;
};

// Evaluates sure_estimate over a grid, decomposing y once. Per-entry
// failures are recorded in the entry instead of aborting the sweep.
SurePath sure_path(const MatrixObs& y, const std::vector<SpectralEstimator>& grid,
                   double gap_tol = kDefaultGapTol);

// Single-line JSON with keys estimator, rss, divergence, df, sure,
// stein_valid, distinct; numbers carry 17 significant digits.
std::string risk_report_json(const SpectralEstimator& est, const RiskReport& r);

}  // namespace lowrank
