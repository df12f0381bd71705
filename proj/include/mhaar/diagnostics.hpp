#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <stdexcept>
#include <vector>

#include "mhaar/numeric.hpp"
#include "mhaar/rng.hpp"

namespace mhaar {

// Exact transition matrix on an enumerated state list with its target.
struct FiniteKernelMatrix {
  Eigen::MatrixXd P;
  Eigen::VectorXd pi;
  std::size_t size() const { return static_cast<std::size_t>(pi.size()); }
};

Eigen::VectorXd normalise_log_weights(const std::vector<double>& log_w);

// Builds P(i, j) by walking every random path of step from states[i].
// Landing states must be in the list.
template <class X, class StepFn>
FiniteKernelMatrix enumerate_kernel(const std::vector<X>& states,
                                    const std::vector<double>& log_pi, StepFn&& step,
                                    bool reverse_order = false) {
  const std::size_t n = states.size();
  FiniteKernelMatrix k{Eigen::MatrixXd::Zero(n, n), normalise_log_weights(log_pi)};
  for (std::size_t i = 0; i < n; ++i) {
    auto outs = enumerate_outcomes<X>(
        [&](Rng& r) { return X(step(states[i], r)); }, reverse_order);
    for (auto& [p, y] : outs) {
      auto it = std::find(states.begin(), states.end(), y);
      if (it == states.end()) throw std::logic_error("kernel left the enumerated state set");
      k.P(i, it - states.begin()) += p;
    }
  }
  return k;
}

// Expectation of run(rng) over all random paths.
template <class Run>
double enumerate_expectation(Run&& run) {
  double e = 0.0;
  for (auto& [p, v] : enumerate_outcomes<double>(run)) e += p * v;
  return e;
}

// Solves pi P = pi with sum(pi) = 1.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P);

double detailed_balance_residual(const FiniteKernelMatrix& k);
double stationarity_residual(const FiniteKernelMatrix& k);
double max_row_sum_error(const FiniteKernelMatrix& k);
// 1/2 sum pi_x P(x,y) (f(x) - f(y))^2
double dirichlet_form(const FiniteKernelMatrix& k, const Eigen::VectorXd& f);
// <f, f>_pi - <f, P f>_pi
double dirichlet_form_via_autocorrelation(const FiniteKernelMatrix& k,
                                          const Eigen::VectorXd& f);
// 1 - second largest eigenvalue of a pi-reversible P.
double right_spectral_gap(const FiniteKernelMatrix& k);
double variance_under(const FiniteKernelMatrix& k, const Eigen::VectorXd& f);

struct IacEstimate {
  double iac = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  int batches = 0;
  double mean = 0.0;
  double mcse = 0.0;  // sqrt(iac * var / n)
};

// Geyer initial monotone sequence estimate, with a confidence interval from
// the spread of the same estimate over contiguous batches.
IacEstimate iac_estimate(const std::vector<double>& series, int batches = 10);
double geyer_ims_iac(const std::vector<double>& series);

struct EnsembleCurve {
  std::vector<std::vector<double>> mean;  // [functional][iteration]
  std::vector<std::vector<double>> se;
};

template <class X>
EnsembleCurve ensemble_convergence(
    const std::function<X(const X&, Rng&)>& step, const X& x0, int n_chains, int horizon,
    const std::vector<std::function<double(const X&)>>& functionals,
    const std::function<std::unique_ptr<Rng>(int)>& chain_rng) {
  const std::size_t nf = functionals.size();
  EnsembleCurve c;
  c.mean.assign(nf, std::vector<double>(horizon + 1, 0.0));
  c.se.assign(nf, std::vector<double>(horizon + 1, 0.0));
  std::vector<std::vector<double>> sq(nf, std::vector<double>(horizon + 1, 0.0));
  for (int ch = 0; ch < n_chains; ++ch) {
    auto rng = chain_rng(ch);
    X x = x0;
    for (int t = 0; t <= horizon; ++t) {
      if (t > 0) x = step(x, *rng);
      for (std::size_t j = 0; j < nf; ++j) {
        const double v = functionals[j](x);
        c.mean[j][t] += v;
        sq[j][t] += v * v;
      }
    }
  }
  for (std::size_t j = 0; j < nf; ++j)
    for (int t = 0; t <= horizon; ++t) {
      const double m = c.mean[j][t] / n_chains;
      const double var = std::max(0.0, sq[j][t] / n_chains - m * m);
      c.mean[j][t] = m;
      c.se[j][t] = std::sqrt(var / n_chains);
    }
  return c;
}

}  // namespace mhaar
