#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "lowrank/risk.hpp"
#include "lowrank/rng.hpp"

namespace lowrank {

enum class EstimatorFamily { reduced_rank, hard_threshold, soft_threshold };

// Short names used on the CLI and in results CSV: rr, hard, soft.
std::string family_name(EstimatorFamily family);
EstimatorFamily parse_family(const std::string& name);

// Builds the family member at one grid coordinate (a rank for rr, a
// threshold for hard/soft). Validates the coordinate.
SpectralEstimator make_family_estimator(EstimatorFamily family, double param);

struct SimConfig {
    int p = 21;
    int q = 21;
    int replicates = 5000;
    std::uint64_t seed = 1;
    double sigma2 = 1.0;
    Eigen::MatrixXd mean;  // empty means zero
    EstimatorFamily family = EstimatorFamily::reduced_rank;
    std::vector<double> grid;  // ranks or lambdas, family-dependent
    double gap_tol = kDefaultGapTol;
};

// One grid coordinate after aggregation over replicates. bias is
// literally df_div - df_cov; se is the standard error of the paired
// per-replicate differences and the interval is bias +/- z * se.
struct SimulationPoint {
    double param = 0.0;
    double df_div = 0.0;
    double df_cov = 0.0;
    double bias = 0.0;
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    int n_skipped = 0;
};

struct SimulationResult {
    SimConfig config;
    std::vector<SimulationPoint> points;
};

// mean_ij + sqrt(sigma2) * z_ij with z drawn row-major from the stream.
// An empty mean stands for the zero matrix.
MatrixObs sample_gaussian_matrix(int p, int q, const Eigen::MatrixXd& mean,
                                 double sigma2, GaussianStream& rng);

// Paired comparison of the analytic divergence against the covariance
// definition of df, replicate by replicate. Each replicate b deterministically
// derives its own stream from (seed, b), so results are identical for any
// max_threads (0 means all hardware threads). Replicates with tied
// spectra, or grid points hit by ThresholdAtSingularValue, are skipped
// and counted; more than 1% skipped at any grid point aborts the run.
SimulationResult run_simulation(const SimConfig& cfg, int max_threads = 0);

struct BiasInterval {
    double bias = 0.0;
    double se = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

// Mean, standard error and normal-approximation confidence interval of a
// sample of paired differences. Requires at least two values.
BiasInterval bias_confidence(const std::vector<double>& diffs, double level);

// Inverse standard normal CDF by bisection on erfc. Accepts p in (0, 1).
double normal_quantile(double p);

// Results CSV: header family,param,df_div,df_cov,bias,se,ci_lo,ci_hi,
// n_skipped,B,p,q,seed; one row per grid point, floats with 10
// significant digits.
void write_results_csv(std::ostream& out, const SimulationResult& result);

}  // namespace lowrank
