#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

namespace mhaar {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// A NaN where a log-density or log-ratio is expected.
class InvariantError : public std::logic_error {
 public:
  explicit InvariantError(const std::string& what) : std::logic_error(what) {}
};

inline double checked(double v, const char* what) {
  if (std::isnan(v)) throw InvariantError(std::string("NaN in ") + what);
  return v;
}

double log_sum_exp(std::span<const double> v);
// log((1/n) sum_i exp(v_i)); -inf entries contribute zero.
double log_mean_exp(std::span<const double> v);

double log_normal_pdf(double x, double mean, double sd);
double log_gamma_pdf(double x, double shape, double rate);
double log_inv_gamma_pdf(double x, double shape, double scale);

}  // namespace mhaar
