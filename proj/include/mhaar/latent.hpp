#pragma once

#include <memory>
#include <vector>

#include "mhaar/kernels.hpp"

namespace mhaar {

template <class Theta, class Z>
struct LatentState {
  Theta theta;
  Z z;
  bool operator==(const LatentState&) const = default;
};

template <class Theta, class Z>
struct LatentModel {
  virtual ~LatentModel() = default;
  // Unnormalised log pi(theta, z).
  virtual double log_joint(const Theta& th, const Z& z) const = 0;
};

// Annealing bridge on the latent space itself. f_0 = pi(theta, .),
// f_{T+1} = pi(theta', .), f_{theta,theta',t} = f_{theta',theta,T+1-t},
// kernel(t, ...) is f_t-reversible, refresh(theta, .) is pi_theta-reversible.
template <class Theta, class Z>
struct LatentBridge {
  virtual ~LatentBridge() = default;
  virtual int steps() const = 0;
  virtual double log_f(int t, const Theta& th, const Theta& th2, const Z& z) const = 0;
  virtual Z kernel(int t, const Theta& th, const Theta& th2, const Z& z, Rng& rng) const = 0;
  virtual Z refresh(const Theta& th, const Z& z, Rng& rng) const = 0;
  // False when theta' is outside the prior support, so no path is built.
  virtual bool admissible(const Theta&, const Theta&) const { return true; }
};

// Bridge on a space V different from the latent space Z. enter and exit are
// the forward endpoint kernels Z -> V at t = 0 and V -> Z at t = T+1;
// enter_back and exit_back are the backward ones, by default obtained from
// the forward ones with the parameters swapped.
template <class Theta, class Z, class V>
struct SpaceBridge {
  virtual ~SpaceBridge() = default;
  virtual int steps() const = 0;
  virtual double log_f(int t, const Theta& th, const Theta& th2, const V& v) const = 0;
  virtual V kernel(int t, const Theta& th, const Theta& th2, const V& v, Rng& rng) const = 0;
  virtual V enter(const Theta& th, const Theta& th2, const Z& z, Rng& rng) const = 0;
  virtual Z exit(const Theta& th, const Theta& th2, const V& v, Rng& rng) const = 0;
  // Backward kernel at T+1 for the (th, th2) bridge: z lives on the th2 side.
  virtual V enter_back(const Theta& th, const Theta& th2, const Z& z, Rng& rng) const {
    return enter(th2, th, z, rng);
  }
  // Backward kernel at 0 for the (th, th2) bridge: returns a th-side latent.
  virtual Z exit_back(const Theta& th, const Theta& th2, const V& v, Rng& rng) const {
    return exit(th2, th, v, rng);
  }
  virtual bool admissible(const Theta&, const Theta&) const { return true; }
};

// V = Z with enter = R_theta and exit = R_theta'.
template <class Theta, class Z>
class SameSpaceBridge final : public SpaceBridge<Theta, Z, Z> {
 public:
  explicit SameSpaceBridge(const LatentBridge<Theta, Z>& b) : b_(b) {}
  int steps() const override { return b_.steps(); }
  double log_f(int t, const Theta& th, const Theta& th2, const Z& v) const override {
    return b_.log_f(t, th, th2, v);
  }
  Z kernel(int t, const Theta& th, const Theta& th2, const Z& v, Rng& rng) const override {
    return b_.kernel(t, th, th2, v, rng);
  }
  Z enter(const Theta& th, const Theta&, const Z& z, Rng& rng) const override {
    return b_.refresh(th, z, rng);
  }
  Z exit(const Theta&, const Theta& th2, const Z& v, Rng& rng) const override {
    return b_.refresh(th2, v, rng);
  }
  bool admissible(const Theta& th, const Theta& th2) const override {
    return b_.admissible(th, th2);
  }

 private:
  const LatentBridge<Theta, Z>& b_;
};

// log of q(theta',theta)/q(theta,theta') prod_{t=0}^T f_{t+1}(u_t)/f_t(u_t).
// Takes no latent argument: the ratio does not depend on z or z'.
template <class Theta, class Bridge, class V>
double ais_latent_log_ratio(const Theta& th, const Theta& th2, const std::vector<V>& path,
                            const Bridge& bridge, const Proposal<Theta>& q) {
  if (static_cast<int>(path.size()) != bridge.steps() + 1)
    throw std::invalid_argument("path length does not match the bridge");
  double l = log_q_ratio_or_reject(q.log_density(th2, th), q.log_density(th, th2));
  if (l == kNegInf) return kNegInf;
  for (int t = 0; t <= bridge.steps(); ++t) {
    const double a = bridge.log_f(t + 1, th, th2, path[t]);
    if (a == kNegInf) return kNegInf;
    const double b = bridge.log_f(t, th, th2, path[t]);
    if (b == kNegInf) return kInf;
    l += a - b;
  }
  return checked(l, "latent AIS ratio");
}

namespace detail {

template <class Theta, class V, class Bridge>
std::vector<V> anneal_from(const Theta& th, const Theta& th2, V u0, const Bridge& b, Rng& rng) {
  std::vector<V> path;
  path.reserve(b.steps() + 1);
  path.push_back(std::move(u0));
  for (int t = 1; t <= b.steps(); ++t) path.push_back(b.kernel(t, th, th2, path.back(), rng));
  return path;
}

// u_T = uT, u_{t-1} ~ K_{th2,th,t}(u_t): the reversed path of the (th, th2)
// forward law, laid out in (th2, th) orientation.
template <class Theta, class V, class Bridge>
std::vector<V> anneal_back(const Theta& th, const Theta& th2, V uT, const Bridge& b, Rng& rng) {
  const int T = b.steps();
  std::vector<V> path(T + 1);
  path[T] = std::move(uT);
  for (int t = T; t >= 1; --t) path[t - 1] = b.kernel(t, th2, th, path[t], rng);
  return path;
}

}  // namespace detail

// Neal's AIS within MH: one path, both orientations with probability 1/2.
template <class Theta, class Z>
Step<LatentState<Theta, Z>> ais_within_mh_step(const LatentState<Theta, Z>& x,
                                               const LatentBridge<Theta, Z>& b,
                                               const Proposal<Theta>& q, Rng& rng) {
  const Theta th2 = q.sample(x.theta, rng);
  const bool first = rng.bernoulli(0.5, "branch");
  Step<LatentState<Theta, Z>> s{x, {false, first ? Branch::q1 : Branch::q2, kNegInf, 1}};
  if (!b.admissible(x.theta, th2)) return s;
  double l;
  Z z2;
  if (first) {
    const auto u = detail::anneal_from(x.theta, th2, b.refresh(x.theta, x.z, rng), b, rng);
    l = ais_latent_log_ratio(x.theta, th2, u, b, q);
    z2 = b.refresh(th2, u.back(), rng);
  } else {
    const auto u = detail::anneal_back(x.theta, th2, b.refresh(x.theta, x.z, rng), b, rng);
    z2 = b.refresh(th2, u.front(), rng);
    l = -ais_latent_log_ratio(th2, x.theta, u, b, q);
  }
  s.report.log_ratio = l;
  if (rng.accept(l)) {
    s.state = {th2, std::move(z2)};
    s.report.accepted = true;
  }
  return s;
}

// N annealing paths per step. In Q1 the index of the path feeding z' is drawn
// only after acceptance; Q2 keeps the conditioned path in slot 0.
template <class Theta, class Z>
Step<LatentState<Theta, Z>> mhaar_latent_step(const LatentState<Theta, Z>& x,
                                              const LatentBridge<Theta, Z>& b,
                                              const Proposal<Theta>& q, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("N must be at least 1");
  const Theta& th = x.theta;
  const Theta th2 = q.sample(th, rng);
  const bool first = rng.bernoulli(0.5, "branch");
  Step<LatentState<Theta, Z>> s{x, {false, first ? Branch::q1 : Branch::q2, kNegInf, n}};
  if (!b.admissible(th, th2)) return s;
  auto streams = rng.split(static_cast<std::size_t>(n));
  std::vector<std::vector<Z>> paths(n);
  std::vector<double> lr(n);
  if (first) {
    parallel_for(n, rng.concurrent(), [&](std::size_t i) {
      paths[i] = detail::anneal_from(th, th2, b.refresh(th, x.z, *streams[i]), b, *streams[i]);
      lr[i] = ais_latent_log_ratio(th, th2, paths[i], b, q);
    });
    s.report.log_ratio = log_mean_exp(lr);
    if (rng.accept(s.report.log_ratio)) {
      const std::size_t k = rng.categorical_log(lr, "path index");
      s.state = {th2, b.refresh(th2, paths[k].back(), rng)};
      s.report.accepted = true;
    }
    return s;
  }
  paths[0] = detail::anneal_back(th, th2, b.refresh(th, x.z, *streams[0]), b, *streams[0]);
  Z z2 = b.refresh(th2, paths[0].front(), *streams[0]);
  lr[0] = ais_latent_log_ratio(th2, th, paths[0], b, q);
  parallel_for(n, rng.concurrent(), [&](std::size_t i) {
    if (i == 0) return;
    paths[i] = detail::anneal_from(th2, th, b.refresh(th2, z2, *streams[i]), b, *streams[i]);
    lr[i] = ais_latent_log_ratio(th2, th, paths[i], b, q);
  });
  s.report.log_ratio = lr[0] == kNegInf ? kNegInf : -log_mean_exp(lr);
  if (rng.accept(s.report.log_ratio)) {
    s.state = {th2, std::move(z2)};
    s.report.accepted = true;
  }
  return s;
}

// Averaged kernel with annealing on a different space and branch probability
// beta(theta, theta') for Q1. The acceptance ratio is r^N (1 - beta(theta',theta))
// / beta(theta,theta').
template <class Theta, class Z, class V, class Beta>
Step<LatentState<Theta, Z>> mhaar_latent_step_bridged(const LatentState<Theta, Z>& x,
                                                      const SpaceBridge<Theta, Z, V>& b,
                                                      const Proposal<Theta>& q, int n,
                                                      Beta&& beta, Rng& rng) {
  if (n < 1) throw std::invalid_argument("N must be at least 1");
  const Theta& th = x.theta;
  const Theta th2 = q.sample(th, rng);
  const double b_xy = beta(th, th2);
  const bool first = rng.bernoulli(b_xy, "branch");
  Step<LatentState<Theta, Z>> s{x, {false, first ? Branch::q1 : Branch::q2, kNegInf, n}};
  if (!b.admissible(th, th2)) return s;
  const double b_yx = beta(th2, th);
  auto streams = rng.split(static_cast<std::size_t>(n));
  std::vector<std::vector<V>> paths(n);
  std::vector<double> lr(n);
  if (first) {
    parallel_for(n, rng.concurrent(), [&](std::size_t i) {
      paths[i] = detail::anneal_from(th, th2, b.enter(th, th2, x.z, *streams[i]), b, *streams[i]);
      lr[i] = ais_latent_log_ratio(th, th2, paths[i], b, q);
    });
    s.report.log_ratio =
        b_yx >= 1.0 ? kNegInf : log_mean_exp(lr) + std::log1p(-b_yx) - std::log(b_xy);
    if (rng.accept(s.report.log_ratio)) {
      const std::size_t k = rng.categorical_log(lr, "path index");
      s.state = {th2, b.exit(th, th2, paths[k].back(), rng)};
      s.report.accepted = true;
    }
    return s;
  }
  paths[0] = detail::anneal_back(th, th2, b.enter_back(th2, th, x.z, *streams[0]), b, *streams[0]);
  Z z2 = b.exit_back(th2, th, paths[0].front(), *streams[0]);
  lr[0] = ais_latent_log_ratio(th2, th, paths[0], b, q);
  parallel_for(n, rng.concurrent(), [&](std::size_t i) {
    if (i == 0) return;
    paths[i] = detail::anneal_from(th2, th, b.enter(th2, th, z2, *streams[i]), b, *streams[i]);
    lr[i] = ais_latent_log_ratio(th2, th, paths[i], b, q);
  });
  if (b_yx <= 0.0 || lr[0] == kNegInf)
    s.report.log_ratio = kNegInf;
  else
    s.report.log_ratio = -(log_mean_exp(lr) + std::log1p(-b_xy) - std::log(b_yx));
  if (rng.accept(s.report.log_ratio)) {
    s.state = {th2, std::move(z2)};
    s.report.accepted = true;
  }
  return s;
}

}  // namespace mhaar
