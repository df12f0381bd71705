#pragma once

#include <algorithm>
#include <vector>

#include "mhaar/latent.hpp"

namespace mhaar {

// Particles u[t][i] of an SMC through the bridge sequence, with incremental
// log-weights logw[t][i] = log f_{t+1}(u_t) - log f_t(u_t).
template <class Z>
struct AnnealedParticles {
  std::vector<std::vector<Z>> u;
  std::vector<std::vector<double>> logw;
  // log of prod_t mean_i w_t^(i)
  double log_c() const {
    double l = 0.0;
    for (const auto& w : logw) l += log_mean_exp(w);
    return l;
  }
};

namespace detail {

template <class Theta, class Z>
double bridge_log_weight(int t, const Theta& th, const Theta& th2, const Z& u,
                         const LatentBridge<Theta, Z>& b) {
  const double a = b.log_f(t + 1, th, th2, u);
  if (a == kNegInf) return kNegInf;
  return checked(a - b.log_f(t, th, th2, u), "bridge weight");
}

// Multinomial resample-move through t = 1..T. When `cond` is given, slot 0
// follows it and keeps ancestor 0.
template <class Theta, class Z>
AnnealedParticles<Z> anneal_particles(const Theta& th, const Theta& th2,
                                      std::vector<Z> start, const std::vector<Z>* cond,
                                      const LatentBridge<Theta, Z>& b, Rng& rng) {
  const int T = b.steps();
  const std::size_t n = start.size();
  AnnealedParticles<Z> p;
  p.u.push_back(std::move(start));
  for (int t = 0;; ++t) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = bridge_log_weight(t, th, th2, p.u[t][i], b);
    p.logw.push_back(w);
    if (t == T) break;
    if (std::all_of(w.begin(), w.end(), [](double v) { return v == kNegInf; }))
      throw std::domain_error("particle degeneracy");
    std::vector<Z> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (cond && i == 0) {
        next[0] = (*cond)[t + 1];
        continue;
      }
      const std::size_t a = rng.categorical_log(w, "ancestor");
      next[i] = b.kernel(t + 1, th, th2, p.u[t][a], rng);
    }
    p.u.push_back(std::move(next));
  }
  return p;
}

}  // namespace detail

// SMC estimate of C_{theta,theta',z}: N particles started from R_theta(z, .).
template <class Theta, class Z>
AnnealedParticles<Z> annealed_smc(const Theta& th, const Theta& th2, const Z& z, int n,
                                  const LatentBridge<Theta, Z>& b, Rng& rng) {
  std::vector<Z> start(n);
  for (auto& u : start) u = b.refresh(th, z, rng);
  return detail::anneal_particles<Theta, Z>(th, th2, std::move(start), nullptr, b, rng);
}

// Averaged kernel with the N annealing paths interacting through resampling.
// Q1 accepts with q ratio times C-hat and draws z' from the terminal weights;
// Q2 builds one reversed path and a conditional SMC anchored on it.
template <class Theta, class Z>
Step<LatentState<Theta, Z>> mhaar_smc_latent_step(const LatentState<Theta, Z>& x,
                                                  const LatentBridge<Theta, Z>& b,
                                                  const Proposal<Theta>& q, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("N must be at least 1");
  const Theta& th = x.theta;
  const Theta th2 = q.sample(th, rng);
  const bool first = rng.bernoulli(0.5, "branch");
  Step<LatentState<Theta, Z>> s{x, {false, first ? Branch::q1 : Branch::q2, kNegInf, n}};
  if (!b.admissible(th, th2)) return s;
  const int T = b.steps();
  if (first) {
    const double lq = log_q_ratio_or_reject(q.log_density(th2, th), q.log_density(th, th2));
    if (lq == kNegInf) return s;
    const auto p = annealed_smc(th, th2, x.z, n, b, rng);
    s.report.log_ratio = checked(lq + p.log_c(), "SMC ratio");
    if (rng.accept(s.report.log_ratio)) {
      const std::size_t k = rng.categorical_log(p.logw[T], "terminal index");
      s.state = {th2, b.refresh(th2, p.u[T][k], rng)};
      s.report.accepted = true;
    }
    return s;
  }
  const double lq = log_q_ratio_or_reject(q.log_density(th, th2), q.log_density(th2, th));
  const auto rev = detail::anneal_back(th, th2, b.refresh(th, x.z, rng), b, rng);
  Z z2 = b.refresh(th2, rev.front(), rng);
  std::vector<Z> start(n);
  start[0] = rev[0];
  for (int i = 1; i < n; ++i) start[i] = b.refresh(th2, z2, rng);
  const auto p = detail::anneal_particles<Theta, Z>(th2, th, std::move(start), &rev, b, rng);
  const double l = lq + p.log_c();
  s.report.log_ratio = (lq == kNegInf || p.logw[0][0] == kNegInf) ? kNegInf : -l;
  for (int t = 1; t <= T; ++t)
    if (p.logw[t][0] == kNegInf) s.report.log_ratio = kNegInf;
  if (rng.accept(s.report.log_ratio)) {
    s.state = {th2, std::move(z2)};
    s.report.accepted = true;
  }
  return s;
}

}  // namespace mhaar
