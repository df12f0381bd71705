#include "mhaar/toy.hpp"

#include <algorithm>
#include <cmath>

namespace mhaar {

namespace {

double binom_pmf(int n, int k, double p) {
  if (k < 0 || k > n) return 0.0;
  const double lc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
  double l = lc;
  if (k > 0) l += k * std::log(p);
  if (n - k > 0) l += (n - k) * std::log1p(-p);
  return std::exp(l);
}

}  // namespace

ToyPair::ToyPair(ToyModel m) : m_(m) {
  if (!(m.a > 0.0)) throw std::invalid_argument("toy model needs a > 0");
  if (!(m.theta >= 0.0 && m.theta < 1.0)) throw std::invalid_argument("toy model needs 0 <= theta < 1");
}

int ToyPair::sample_q(const int& x, Rng& rng) const {
  return rng.bernoulli(m_.theta, "stay") ? x : -x;
}

double ToyPair::sample_u_forward(const int& x, const int& y, Rng& rng) const {
  if (x == y) return 1.0;
  const double w[2] = {1.0 / (1.0 + m_.a), m_.a / (1.0 + m_.a)};
  return rng.choose(w, "toy u") == 0 ? m_.a : 1.0 / m_.a;
}

double ToyPair::log_ratio(const int& x, const int& y, const double& u) const {
  if (x == y) return 0.0;
  return std::log(u);
}

double pflip_exact(const ToyModel& m, int n) {
  if (n < 1) throw std::invalid_argument("N must be at least 1");
  const double a = m.a;
  const double p = 1.0 / (1.0 + a);
  double s1 = 0.0, s2 = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double w = (k * a + (n - k) / a) / n;
    s1 += binom_pmf(n, k, p) * std::min(1.0, w);
    const double c = a / (1.0 + a) * binom_pmf(n - 1, k - 1, p) +
                     1.0 / (1.0 + a) * binom_pmf(n - 1, k, p);
    s2 += c * std::min(1.0, 1.0 / w);
  }
  return (1.0 - m.theta) * 0.5 * (s1 + s2);
}

double toy_relaxation_time(const ToyModel& m, int n) { return 1.0 / (2.0 * pflip_exact(m, n)); }

double gamma_reduction(double a, int n) {
  const ToyModel m{a, 0.0};
  return toy_relaxation_time(m, n) / toy_relaxation_time(m, 1);
}

MixingBounds mixing_time_bounds(const ToyModel& m, int n, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw std::invalid_argument("eps must be in (0, 1/2)");
  const double t = toy_relaxation_time(m, n);
  return {-(t - 1.0) * std::log(2.0 * eps), -t * std::log(eps / 2.0)};
}

FlipEstimate pflip_monte_carlo(const ToyModel& m, int n, long steps, Rng& rng) {
  const ToyPair pair(m);
  int x = 1;
  long flips = 0;
  for (long i = 0; i < steps; ++i) {
    const int y = mhaar_step(x, pair, n, rng).state;
    flips += (y != x);
    x = y;
  }
  const double p = static_cast<double>(flips) / static_cast<double>(steps);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(steps))};
}

}  // namespace mhaar
