#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "mhaar/numeric.hpp"
#include "mhaar/parallel.hpp"
#include "mhaar/rng.hpp"

namespace mhaar {

enum class Branch { plain, q1, q2 };

struct KernelReport {
  bool accepted = false;
  Branch branch = Branch::plain;
  double log_ratio = 0.0;
  int n_estimators = 1;
};

template <class X>
struct Step {
  X state;
  KernelReport report;
};

template <class X>
struct Target {
  virtual ~Target() = default;
  virtual double log_density(const X& x) const = 0;
};

template <class X>
struct Proposal {
  virtual ~Proposal() = default;
  virtual X sample(const X& from, Rng& rng) const = 0;
  virtual double log_density(const X& from, const X& to) const = 0;
};

// Proposal on X together with auxiliary laws Q_{x,y} on U and an
// involution phi such that the backward law is Q_{x,y} pushed through phi.
// log_ratio(x, y, u) is log r_u(x, y) = log r(x, y) + log dQbar_{y,x}/dQ_{x,y}(u).
template <class X, class U>
struct ProposalPair {
  virtual ~ProposalPair() = default;
  virtual X sample_q(const X& x, Rng& rng) const = 0;
  virtual U sample_u_forward(const X& x, const X& y, Rng& rng) const = 0;
  virtual U involution(const U& u) const = 0;
  virtual double log_ratio(const X& x, const X& y, const U& u) const = 0;
  virtual U sample_u_backward(const X& x, const X& y, Rng& rng) const {
    return involution(sample_u_forward(x, y, rng));
  }
};

// Markov kernel on U that is reversible with respect to Q_{x,y}.
template <class X, class U>
struct InnerKernel {
  virtual ~InnerKernel() = default;
  virtual U sample(const X& x, const X& y, const U& u, Rng& rng) const = 0;
};

inline std::size_t categorical_sample(std::span<const double> log_weights, Rng& rng) {
  return rng.categorical_log(log_weights, "categorical");
}

inline double log_q_ratio_or_reject(double num, double den) {
  if (num == kNegInf) return kNegInf;
  return num - den;
}

template <class X>
Step<X> mh_step(const X& x, const Target<X>& target, const Proposal<X>& q, Rng& rng) {
  X y = q.sample(x, rng);
  const double ly = checked(target.log_density(y), "target density");
  double lr = kNegInf;
  if (ly != kNegInf) {
    const double lx = checked(target.log_density(x), "target density");
    const double lq = log_q_ratio_or_reject(q.log_density(y, x), q.log_density(x, y));
    lr = lq == kNegInf ? kNegInf : ly - lx + lq;
  }
  Step<X> s{x, {false, Branch::plain, checked(lr, "mh ratio"), 1}};
  if (rng.accept(lr)) {
    s.state = std::move(y);
    s.report.accepted = true;
  }
  return s;
}

// Pseudo-marginal ratio kernel: one draw from Q_{x,y}.
template <class X, class U>
Step<X> pmr_step(const X& x, const ProposalPair<X, U>& pair, Rng& rng) {
  X y = pair.sample_q(x, rng);
  const U u = pair.sample_u_forward(x, y, rng);
  const double lr = checked(pair.log_ratio(x, y, u), "pmr ratio");
  Step<X> s{x, {false, Branch::q1, lr, 1}};
  if (rng.accept(lr)) {
    s.state = std::move(y);
    s.report.accepted = true;
  }
  return s;
}

// Averaged-ratio kernel with branch probability beta(x, y) for Q1.
// Q1 averages N forward ratios; Q2 conditions one slot on the backward law
// and averages the reverse ratios, accepting with the reciprocal.
template <class X, class U, class Beta>
Step<X> mhaar_step_beta(const X& x, const ProposalPair<X, U>& pair, int n,
                        Beta&& beta, Rng& rng) {
  if (n < 1) throw std::invalid_argument("N must be at least 1");
  X y = pair.sample_q(x, rng);
  const double b_xy = beta(x, y);
  const bool first = rng.bernoulli(b_xy, "branch");
  auto streams = rng.split(static_cast<std::size_t>(n));
  std::vector<double> lr(n);
  const double b_yx = beta(y, x);
  Step<X> s{x, {false, first ? Branch::q1 : Branch::q2, 0.0, n}};
  double l;
  if (first) {
    parallel_for(n, rng.concurrent(), [&](std::size_t i) {
      const U u = pair.sample_u_forward(x, y, *streams[i]);
      lr[i] = checked(pair.log_ratio(x, y, u), "estimator ratio");
    });
    l = b_yx >= 1.0 ? kNegInf : log_mean_exp(lr) + std::log1p(-b_yx) - std::log(b_xy);
  } else {
    parallel_for(n, rng.concurrent(), [&](std::size_t i) {
      const U u = i == 0 ? pair.sample_u_backward(x, y, *streams[i])
                         : pair.sample_u_forward(y, x, *streams[i]);
      lr[i] = checked(pair.log_ratio(y, x, u), "estimator ratio");
    });
    if (b_yx <= 0.0 || lr[0] == kNegInf) {
      l = kNegInf;
    } else {
      // log of 1 / rbar(y, x)
      l = -(log_mean_exp(lr) + std::log1p(-b_xy) - std::log(b_yx));
    }
  }
  s.report.log_ratio = checked(l, "averaged ratio");
  if (rng.accept(l)) {
    s.state = std::move(y);
    s.report.accepted = true;
  }
  return s;
}

template <class X, class U>
Step<X> mhaar_step(const X& x, const ProposalPair<X, U>& pair, int n, Rng& rng) {
  return mhaar_step_beta(x, pair, n, [](const X&, const X&) { return 0.5; }, rng);
}

// Averaged-ratio kernel with estimators correlated through a
// Q_{x,y}-reversible kernel K. Q2 places the conditioned draw at a uniform
// slot and runs K_{y,x} outward from it in both directions.
template <class X, class U>
Step<X> dependent_mhaar_step(const X& x, const ProposalPair<X, U>& pair,
                             const InnerKernel<X, U>& k_inner, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("N must be at least 1");
  X y = pair.sample_q(x, rng);
  const bool first = rng.bernoulli(0.5, "branch");
  std::vector<U> us;
  us.reserve(n);
  std::vector<double> lr(n);
  Step<X> s{x, {false, first ? Branch::q1 : Branch::q2, 0.0, n}};
  double l;
  if (first) {
    us.push_back(pair.sample_u_forward(x, y, rng));
    for (int i = 1; i < n; ++i) us.push_back(k_inner.sample(x, y, us.back(), rng));
    for (int i = 0; i < n; ++i) lr[i] = checked(pair.log_ratio(x, y, us[i]), "estimator ratio");
    l = log_mean_exp(lr);
  } else {
    const std::size_t k = rng.uniform_index(static_cast<std::size_t>(n), "slot");
    us.assign(n, pair.sample_u_backward(x, y, rng));
    for (std::size_t i = k + 1; i < static_cast<std::size_t>(n); ++i)
      us[i] = k_inner.sample(y, x, us[i - 1], rng);
    for (std::size_t i = k; i-- > 0;) us[i] = k_inner.sample(y, x, us[i + 1], rng);
    for (int i = 0; i < n; ++i) lr[i] = checked(pair.log_ratio(y, x, us[i]), "estimator ratio");
    l = lr[k] == kNegInf ? kNegInf : -log_mean_exp(lr);
  }
  s.report.log_ratio = l;
  if (rng.accept(l)) {
    s.state = std::move(y);
    s.report.accepted = true;
  }
  return s;
}

template <class X>
struct Lifted {
  X x;
  int a = 1;  // 1 uses Q1, 2 uses Q2
  bool operator==(const Lifted&) const = default;
};

// Non-reversible variant on X x {1, 2}: the direction is kept on acceptance
// and flipped on rejection.
template <class X, class U>
Step<Lifted<X>> nonrev_mhaar_step(const Lifted<X>& s0, const ProposalPair<X, U>& pair,
                                  int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("N must be at least 1");
  const X& x = s0.x;
  X y = pair.sample_q(x, rng);
  auto streams = rng.split(static_cast<std::size_t>(n));
  std::vector<double> lr(n);
  double l;
  if (s0.a == 1) {
    parallel_for(n, rng.concurrent(), [&](std::size_t i) {
      lr[i] = checked(pair.log_ratio(x, y, pair.sample_u_forward(x, y, *streams[i])),
                      "estimator ratio");
    });
    l = log_mean_exp(lr);
  } else {
    parallel_for(n, rng.concurrent(), [&](std::size_t i) {
      const U u = i == 0 ? pair.sample_u_backward(x, y, *streams[i])
                         : pair.sample_u_forward(y, x, *streams[i]);
      lr[i] = checked(pair.log_ratio(y, x, u), "estimator ratio");
    });
    l = lr[0] == kNegInf ? kNegInf : -log_mean_exp(lr);
  }
  Step<Lifted<X>> s{s0, {false, s0.a == 1 ? Branch::q1 : Branch::q2, l, n}};
  if (rng.accept(l)) {
    s.state.x = std::move(y);
    s.report.accepted = true;
  } else {
    s.state.a = 3 - s0.a;
  }
  return s;
}

// Negative control: always averages N forward ratios and accepts with the
// mean, without the Q2 branch. Not reversible in general.
template <class X, class U>
Step<X> naive_average_step(const X& x, const ProposalPair<X, U>& pair, int n, Rng& rng) {
  X y = pair.sample_q(x, rng);
  auto streams = rng.split(static_cast<std::size_t>(n));
  std::vector<double> lr(n);
  for (int i = 0; i < n; ++i)
    lr[i] = checked(pair.log_ratio(x, y, pair.sample_u_forward(x, y, *streams[i])),
                    "estimator ratio");
  const double l = log_mean_exp(lr);
  Step<X> s{x, {false, Branch::q1, l, n}};
  if (rng.accept(l)) {
    s.state = std::move(y);
    s.report.accepted = true;
  }
  return s;
}

}  // namespace mhaar
