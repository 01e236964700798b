#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "lowrank/matrix_core.hpp"

namespace lowrank {

// Keep the top `rank` singular values unchanged, zero the rest.
struct ReducedRank {
    int rank = 0;
};

// Keep singular values >= lambda unchanged, zero the rest.
struct HardThreshold {
    double lambda = 0.0;
};

// Shrink every singular value by lambda, clipped at zero.
struct SoftThreshold {
    double lambda = 0.0;
};

// One spectral function per singular value index, with exact derivatives.
// values[k] maps d_k to the coefficient of u_k v_k^T; both callable sets
// must have the same length as the spectrum they are applied to.
struct CustomSpectral {
    std::vector<std::function<double(double)>> values;
    std::vector<std::function<double(double)>> derivatives;
};

using SpectralEstimator = std::variant<ReducedRank, HardThreshold, SoftThreshold, CustomSpectral>;

// Conditions under which the unbiased-risk identity is known to hold:
// f_1 >= ... >= f_q pointwise, non-negative derivatives, no jumps.
struct SteinConditionReport {
    bool monotone_across_k = false;
    bool derivative_nonneg = false;
    bool continuous = false;
    bool stein_valid = false;
};

// Coefficients f_k(d_k) for each singular value. Validates estimator
// parameters; throws std::domain_error if a custom function produces a
// negative or non-finite value.
Eigen::VectorXd spectral_values(const SpectralEstimator& est, const Eigen::VectorXd& d);

// Derivatives f_k'(d_k). Built-in conventions at kinks: the indicator
// 1(d >= lambda) is used for both thresholds, so d == lambda counts as kept.
Eigen::VectorXd spectral_derivatives(const SpectralEstimator& est, const Eigen::VectorXd& d);

// Reconstruction sum_k f_k(d_k) u_k v_k^T. Well-defined for tied spectra;
// only the divergence formulas require distinctness.
Eigen::MatrixXd apply_estimator(const SvdFactors& f, const SpectralEstimator& est);

// Checks the Stein conditions. Built-ins are resolved analytically
// (reduced rank and soft threshold hold; hard threshold has a jump for
// lambda > 0 and is flagged invalid regardless). Custom estimators are
// sampled at grid_n equispaced points of (0, d_max]; a jump is declared
// when a sampled increment exceeds 10x the largest sampled slope times
// the grid step. Requires d_max > 0 and grid_n >= 2.
SteinConditionReport validate_stein_conditions(const SpectralEstimator& est,
                                               double d_max, int grid_n);

// Spec strings "rr:<rank>", "hard:<lambda>", "soft:<lambda>".
SpectralEstimator parse_estimator_spec(const std::string& spec);
std::string estimator_spec_string(const SpectralEstimator& est);

// Grid coordinate of a built-in estimator: rank or lambda. NaN for custom.
double estimator_param(const SpectralEstimator& est);

}  // namespace lowrank
