#pragma once

#include <stdexcept>
#include <string>

namespace lowrank {

// Backend linear algebra produced something unusable (non-convergence,
// non-finite factors). Nothing downstream may run on such output.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Two singular values coincide within tolerance. The closed-form
// divergences divide by d_k^2 - d_l^2, so the result would be
// meaningless; callers must handle or avoid the tie explicitly.
class DegenerateSpectrum : public std::runtime_error {
  public:
    DegenerateSpectrum(double min_relative_gap, const std::string& what)
        : std::runtime_error(what), min_relative_gap_(min_relative_gap) {}

    // Smallest adjacent gap found, relative to the largest singular value.
    double min_relative_gap() const noexcept { return min_relative_gap_; }

  private:
    double min_relative_gap_;
};

// Hard-threshold level sits on a singular value, where the kept set is
// ambiguous and the closed form omits a point-mass derivative term.
class ThresholdAtSingularValue : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// For p > q the general divergence needs f_q(d_q)/d_q; at d_q = 0 that
// ratio is undefined unless f_q(0) = 0 (then the derivative is used).
class ZeroSingularValue : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

// Malformed matrix CSV input (ragged rows, non-numeric tokens, no data).
class CsvError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// A Monte Carlo run skipped more replicates than the configured budget
// allows at some grid point; partial results are not reported.
class SimulationAborted : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace lowrank
