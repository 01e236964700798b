#pragma once

#include <Eigen/Dense>

#include "lowrank/errors.hpp"

namespace lowrank {

// Adjacent singular values closer than this (relative to the largest one)
// are treated as tied.
inline constexpr double kDefaultGapTol = 1e-8;

// Observation matrix with known noise variance. Stored tall: rows >= cols.
// Callers holding wide data must transpose before constructing.
class MatrixObs {
  public:
    // Requires entries finite, rows >= cols >= 1, sigma2 finite and >= 0.
    MatrixObs(Eigen::MatrixXd entries, double sigma2);

    const Eigen::MatrixXd& y() const noexcept { return y_; }
    double sigma2() const noexcept { return sigma2_; }
    Eigen::Index rows() const noexcept { return y_.rows(); }
    Eigen::Index cols() const noexcept { return y_.cols(); }

  private:
    Eigen::MatrixXd y_;
    double sigma2_;
};

// Thin SVD, Y = U diag(d) V^T: U is p x q, V is q x q, both with
// orthonormal columns, d non-increasing and non-negative.
struct SvdFactors {
    Eigen::MatrixXd u;
    Eigen::VectorXd d;
    Eigen::MatrixXd v;
    double gap_tol = kDefaultGapTol;
};

struct DistinctnessReport {
    bool distinct = false;
    // min_k (d_k - d_{k+1}) / d_1, +inf when there is a single value.
    double min_relative_gap = 0.0;
};

// Thin SVD of a tall matrix (rows >= cols). Throws NumericalError if the
// backend fails or returns non-finite factors; never returns garbage.
SvdFactors svd_decompose(const Eigen::MatrixXd& y, double gap_tol = kDefaultGapTol);
SvdFactors svd_decompose(const MatrixObs& y, double gap_tol = kDefaultGapTol);

// Pairwise distinctness of a non-increasing spectrum, judged against
// gap_tol. Adjacent gaps suffice because d is sorted.
DistinctnessReport spectrum_distinctness(const Eigen::VectorXd& d, double gap_tol);
DistinctnessReport check_distinct(const SvdFactors& f);

// Sum of squared entries.
double frobenius_norm_sq(const Eigen::MatrixXd& a);

}  // namespace lowrank
