#pragma once

#include "mhaar/kernels.hpp"

namespace mhaar {

// Two-state target on {-1, +1} with uniform mass. A flip is proposed with
// probability 1 - theta and its ratio estimate is u in {a, 1/a} with
// P(u = a) = 1/(1+a). A stay carries u = 1.
struct ToyModel {
  double a = 2.0;
  double theta = 0.0;
};

class ToyPair final : public ProposalPair<int, double> {
 public:
  explicit ToyPair(ToyModel m);
  int sample_q(const int& x, Rng& rng) const override;
  double sample_u_forward(const int& x, const int& y, Rng& rng) const override;
  double involution(const double& u) const override { return 1.0 / u; }
  double log_ratio(const int& x, const int& y, const double& u) const override;
  const ToyModel& model() const { return m_; }

 private:
  ToyModel m_;
};

// Probability that one step of the N-estimator kernel flips the state,
// from the binomial closed form.
double pflip_exact(const ToyModel& m, int n);
double toy_relaxation_time(const ToyModel& m, int n);
// T_relax(N) / T_relax(1) at theta = 0.
double gamma_reduction(double a, int n);

struct MixingBounds {
  double lower;
  double upper;
};
MixingBounds mixing_time_bounds(const ToyModel& m, int n, double eps);

struct FlipEstimate {
  double p;
  double se;
};
FlipEstimate pflip_monte_carlo(const ToyModel& m, int n, long steps, Rng& rng);

}  // namespace mhaar
