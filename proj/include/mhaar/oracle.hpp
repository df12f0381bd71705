#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mhaar {

// One verification on a finite or closed-form fixture. A check passes when
// value <= threshold, or value > threshold for negative controls.
struct OracleCheck {
  std::string suite;
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool negative_control = false;
  bool pass() const { return negative_control ? value > threshold : value <= threshold; }
};

// Detailed-balance residuals (max over states of |pi_x P(x,y) - pi_y P(y,x)|,
// or the row-sum error if larger) of every reversible kernel on its fixture,
// and the naive-averaging control that must fail.
std::vector<OracleCheck> reversibility_checks();

// max |log E[estimate] - log r| over the fixture's parameter pairs, with the
// expectation taken over all random paths.
std::vector<OracleCheck> unbiasedness_checks();

// |mean - r| / SE over `replicates` independent draws on continuous fixtures.
std::vector<OracleCheck> unbiasedness_mc_checks(std::uint64_t seed, long replicates);

// Exact spectral gaps and Dirichlet forms of the averaged kernels for
// N = 1, 2, 3 against the marginal kernel; value is the largest violation.
std::vector<OracleCheck> monotonicity_checks(std::uint64_t seed);

}  // namespace mhaar
