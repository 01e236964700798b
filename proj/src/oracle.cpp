#include "lowrank/oracle.hpp"

#include <cmath>
#include <string>

namespace lowrank {

namespace {

std::string coord(Eigen::Index i, Eigen::Index j) {
    return "(" + std::to_string(i) + ", " + std::to_string(j) + ")";
}

}  // namespace

double finite_difference_divergence(const MatrixMap& map, const Eigen::MatrixXd& y,
                                    const FdConfig& cfg) {
    if (!map) {
        throw std::invalid_argument("finite_difference_divergence: empty map");
    }
    if (y.size() == 0 || !y.allFinite()) {
        throw std::invalid_argument("finite_difference_divergence: bad input matrix");
    }
    const double h = cfg.step;
    const double floor = 1e-9 * std::max(1.0, y.cwiseAbs().maxCoeff());
    if (!std::isfinite(h) || h <= 0.0) {
        throw std::invalid_argument("finite-difference step must be positive");
    }
    if (h < floor) {
        throw std::invalid_argument("finite-difference step " + std::to_string(h) +
                                    " is below the rounding floor for this input scale");
    }
    double total = 0.0;
    Eigen::MatrixXd probe = y;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        for (Eigen::Index j = 0; j < y.cols(); ++j) {
            double up = 0.0;
            double down = 0.0;
            try {
                probe(i, j) = y(i, j) + h;
                up = map(probe)(i, j);
                probe(i, j) = y(i, j) - h;
                down = map(probe)(i, j);
                probe(i, j) = y(i, j);
            } catch (const DegenerateSpectrum& ex) {
                throw DegenerateSpectrum(ex.min_relative_gap(),
                                         "perturbing entry " + coord(i, j) + ": " + ex.what());
            } catch (const std::exception& ex) {
                throw NumericalError("perturbing entry " + coord(i, j) + ": " + ex.what());
            }
            if (!std::isfinite(up) || !std::isfinite(down)) {
                throw NumericalError("non-finite estimate when perturbing entry " + coord(i, j));
            }
            total += (up - down) / (2.0 * h);
        }
    }
    return total;
}

double finite_difference_divergence(const SpectralEstimator& est, const MatrixObs& y,
                                    const FdConfig& cfg) {
    const double gap_tol = kDefaultGapTol;
    const MatrixMap map = [&est, gap_tol](const Eigen::MatrixXd& m) {
        return apply_estimator(svd_decompose(m, gap_tol), est);
    };
    return finite_difference_divergence(map, y.y(), cfg);
}

double covariance_df(const std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>>& fits,
                     const Eigen::MatrixXd& mean, double sigma2) {
    if (fits.empty()) {
        throw std::invalid_argument("covariance_df needs at least one replicate");
    }
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
        throw std::invalid_argument("sigma2 must be positive and finite");
    }
    double total = 0.0;
    for (const auto& [y_b, muhat_b] : fits) {
        if (y_b.rows() != mean.rows() || y_b.cols() != mean.cols() ||
            muhat_b.rows() != mean.rows() || muhat_b.cols() != mean.cols()) {
            throw std::invalid_argument("covariance_df: replicate shape differs from mean");
        }
        total += muhat_b.cwiseProduct(y_b - mean).sum();
    }
    return total / (static_cast<double>(fits.size()) * sigma2);
}

}  // namespace lowrank
