#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "lowrank/estimators.hpp"

namespace lowrank {

struct FdConfig {
    // Central-difference step. Must exceed 1e-9 * max(1, max|y_ij|);
    // below that the quotient is rounding noise.
    double step = 1e-5;
};

using MatrixMap = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

// Numerical divergence sum_ij d map(y)_ij / d y_ij by central differences,
// 2 p q evaluations of map. Exceptions raised at a perturbed point are
// rethrown with the offending coordinate named.
double finite_difference_divergence(const MatrixMap& map, const Eigen::MatrixXd& y,
                                    const FdConfig& cfg = {});

// Same, for a spectral estimator applied through a fresh SVD per call.
double finite_difference_divergence(const SpectralEstimator& est, const MatrixObs& y,
                                    const FdConfig& cfg = {});

// Monte Carlo degrees of freedom from pairs (y_b, muhat_b) and the true
// mean:
//   (1 / (B sigma^2)) * sum_b sum_ij muhat_b,ij (y_b,ij - mean_ij).
// Usable only where the truth is known, i.e. in simulations.
double covariance_df(const std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>>& fits,
                     const Eigen::MatrixXd& mean, double sigma2);

}  // namespace lowrank
