#include "lowrank/matrix_core.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace lowrank {

MatrixObs::MatrixObs(Eigen::MatrixXd entries, double sigma2)
    : y_(std::move(entries)), sigma2_(sigma2) {
    if (y_.rows() < 1 || y_.cols() < 1) {
        throw std::invalid_argument("observation matrix must be non-empty");
    }
    if (y_.rows() < y_.cols()) {
        throw std::invalid_argument(
            "observation matrix has " + std::to_string(y_.rows()) + " rows < " +
            std::to_string(y_.cols()) + " cols; transpose wide data first");
    }
    if (!y_.allFinite()) {
        throw std::invalid_argument("observation matrix has non-finite entries");
    }
    if (!std::isfinite(sigma2_) || sigma2_ < 0.0) {
        throw std::invalid_argument("sigma2 must be finite and non-negative");
    }
}

SvdFactors svd_decompose(const Eigen::MatrixXd& y, double gap_tol) {
    if (y.rows() < y.cols() || y.cols() < 1) {
        throw std::invalid_argument("svd_decompose expects a tall non-empty matrix");
    }
    if (!(gap_tol > 0.0) || !std::isfinite(gap_tol)) {
        throw std::invalid_argument("gap_tol must be a positive finite number");
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) {
        throw NumericalError("SVD did not converge");
    }
    SvdFactors f{svd.matrixU(), svd.singularValues(), svd.matrixV(), gap_tol};
    if (!f.u.allFinite() || !f.d.allFinite() || !f.v.allFinite()) {
        throw NumericalError("SVD produced non-finite factors");
    }
    return f;
}

SvdFactors svd_decompose(const MatrixObs& y, double gap_tol) {
    return svd_decompose(y.y(), gap_tol);
}

DistinctnessReport spectrum_distinctness(const Eigen::VectorXd& d, double gap_tol) {
    if (d.size() == 0) {
        throw std::invalid_argument("empty spectrum");
    }
    if (d.size() == 1) {
        return {true, std::numeric_limits<double>::infinity()};
    }
    // d is non-increasing, so adjacent gaps are the smallest ones.
    const double scale = std::max(d(0), std::numeric_limits<double>::min());
    double min_gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k + 1 < d.size(); ++k) {
        min_gap = std::min(min_gap, (d(k) - d(k + 1)) / scale);
    }
    return {min_gap > gap_tol, min_gap};
}

DistinctnessReport check_distinct(const SvdFactors& f) {
    return spectrum_distinctness(f.d, f.gap_tol);
}

double frobenius_norm_sq(const Eigen::MatrixXd& a) {
    return a.squaredNorm();
}

}  // namespace lowrank
