#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <vector>

#include "mhaar/ising.hpp"
#include "mhaar/kernels.hpp"

namespace mhaar {

// Likelihood l_theta(y) = g_theta(y) / C_theta with C_theta unavailable.
template <class Y>
struct DoublyIntractableModel {
  virtual ~DoublyIntractableModel() = default;
  virtual double log_g(double theta, const Y& y) const = 0;
  virtual double log_prior(double theta) const = 0;
  virtual Y sample_likelihood(double theta, Rng& rng) const = 0;
  virtual bool exact_sampler() const = 0;
  // One l_theta-invariant, l_theta-reversible update.
  virtual Y mcmc_update(double theta, const Y& y, Rng& rng) const = 0;
  virtual const Y& data() const = 0;
};

// beta_t = 1 - t/(T+1); the bridge at step t sits at parameter
// theta (1 - beta_t) + theta' beta_t.
struct AnnealingSchedule {
  int T = 0;
  double beta(int t) const { return static_cast<double>(T + 1 - t) / (T + 1); }
  double param(int t, double theta, double theta2) const {
    const double w1 = static_cast<double>(t) / (T + 1);
    return w1 * theta + beta(t) * theta2;
  }
};

// Bridge densities and kernels derived from one parametrised family, so
// f_{theta,theta',t} = f_{theta',theta,T+1-t} and the same for kernels.
template <class Y>
class GeometricBridge {
 public:
  GeometricBridge(const DoublyIntractableModel<Y>& model, int T) : model_(model), sched_{T} {}
  int steps() const { return sched_.T; }
  double log_f(int t, double th, double th2, const Y& u) const {
    return model_.log_g(sched_.param(t, th, th2), u);
  }
  Y kernel(int t, double th, double th2, const Y& u, Rng& rng) const {
    return model_.mcmc_update(sched_.param(t, th, th2), u, rng);
  }
  const AnnealingSchedule& schedule() const { return sched_; }

 private:
  const DoublyIntractableModel<Y>& model_;
  AnnealingSchedule sched_;
};

template <class Y>
double ais_exchange_log_ratio(double th, double th2, const std::vector<Y>& path,
                              const DoublyIntractableModel<Y>& model,
                              const GeometricBridge<Y>& bridge, const Proposal<double>& q) {
  if (path.empty()) return kNegInf;
  const double lp2 = model.log_prior(th2);
  if (lp2 == kNegInf) return kNegInf;
  const double lq = log_q_ratio_or_reject(q.log_density(th2, th), q.log_density(th, th2));
  if (lq == kNegInf) return kNegInf;
  double l = lq + lp2 - model.log_prior(th) + model.log_g(th2, model.data()) -
             model.log_g(th, model.data());
  const int T = bridge.steps();
  for (int t = 0; t <= T; ++t) {
    const double a = bridge.log_f(t + 1, th, th2, path[t]);
    const double b = bridge.log_f(t, th, th2, path[t]);
    if (a == kNegInf) return kNegInf;
    l += a - b;
  }
  return checked(l, "AIS exchange ratio");
}

// Forward path law Q_{theta,theta'}: u_0 ~ l_{theta'}, u_t ~ R_{theta,theta',t}(u_{t-1}).
// The involution reverses the path.
template <class Y>
class AisExchangePair final : public ProposalPair<double, std::vector<Y>> {
 public:
  AisExchangePair(const DoublyIntractableModel<Y>& model, const GeometricBridge<Y>& bridge,
                  const Proposal<double>& q)
      : model_(model), bridge_(bridge), q_(q) {}

  double sample_q(const double& th, Rng& rng) const override { return q_.sample(th, rng); }

  std::vector<Y> sample_u_forward(const double& th, const double& th2, Rng& rng) const override {
    if (model_.log_prior(th2) == kNegInf) return {};
    std::vector<Y> path;
    path.reserve(bridge_.steps() + 1);
    path.push_back(model_.sample_likelihood(th2, rng));
    for (int t = 1; t <= bridge_.steps(); ++t)
      path.push_back(bridge_.kernel(t, th, th2, path.back(), rng));
    return path;
  }

  std::vector<Y> involution(const std::vector<Y>& u) const override {
    return std::vector<Y>(u.rbegin(), u.rend());
  }

  double log_ratio(const double& th, const double& th2, const std::vector<Y>& u) const override {
    return ais_exchange_log_ratio(th, th2, u, model_, bridge_, q_);
  }

 private:
  const DoublyIntractableModel<Y>& model_;
  const GeometricBridge<Y>& bridge_;
  const Proposal<double>& q_;
};

template <class Y>
Step<double> exchange_mhaar_step(double th, const AisExchangePair<Y>& pair, int n, Rng& rng) {
  return mhaar_step(th, pair, n, rng);
}

// Shares one draw from l_{theta'} across the N paths (Q1), or anchors the
// N-1 forward paths at the reversed path's endpoint (Q2).
template <class Y>
Step<double> exchange_mhaar_reduced_step(double th, const DoublyIntractableModel<Y>& model,
                                         const GeometricBridge<Y>& bridge,
                                         const Proposal<double>& q, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("N must be at least 1");
  const double th2 = q.sample(th, rng);
  const bool first = rng.bernoulli(0.5, "branch");
  Step<double> s{th, {false, first ? Branch::q1 : Branch::q2, kNegInf, n}};
  const int T = bridge.steps();
  if (model.log_prior(th2) == kNegInf) return s;
  const Y start = model.sample_likelihood(th2, rng);
  auto streams = rng.split(static_cast<std::size_t>(n));
  std::vector<double> lr(n);
  double l;
  if (first) {
    parallel_for(n, rng.concurrent(), [&](std::size_t i) {
      std::vector<Y> path{start};
      for (int t = 1; t <= T; ++t) path.push_back(bridge.kernel(t, th, th2, path.back(), *streams[i]));
      lr[i] = ais_exchange_log_ratio(th, th2, path, model, bridge, q);
    });
    l = log_mean_exp(lr);
  } else {
    // Reversed path: u_T = start, u_{t-1} ~ R_{theta',theta,t}(u_t).
    std::vector<Y> rev(T + 1);
    rev[T] = start;
    for (int t = T; t >= 1; --t) rev[t - 1] = bridge.kernel(t, th2, th, rev[t], *streams[0]);
    lr[0] = ais_exchange_log_ratio(th2, th, rev, model, bridge, q);
    const Y anchor = rev[0];
    parallel_for(n, rng.concurrent(), [&](std::size_t i) {
      if (i == 0) return;
      std::vector<Y> path{anchor};
      for (int t = 1; t <= T; ++t) path.push_back(bridge.kernel(t, th2, th, path.back(), *streams[i]));
      lr[i] = ais_exchange_log_ratio(th2, th, path, model, bridge, q);
    });
    l = lr[0] == kNegInf ? kNegInf : -log_mean_exp(lr);
  }
  s.report.log_ratio = l;
  if (rng.accept(l)) {
    s.state = th2;
    s.report.accepted = true;
  }
  return s;
}

// Pseudo-marginal chain on theta that carries the log of its target estimate.
struct PmtState {
  double theta = 0.0;
  double log_estimate = kNegInf;
  bool operator==(const PmtState&) const = default;
};

// log of eta(theta) g_theta(y) mean_i h(z_i) / g_theta(z_i), z_i ~ l_theta.
template <class Y, class LogH>
double pmt_log_estimate(double th, const DoublyIntractableModel<Y>& model, LogH&& log_h, int n,
                        Rng& rng) {
  const double lp = model.log_prior(th);
  if (lp == kNegInf) return kNegInf;
  auto streams = rng.split(static_cast<std::size_t>(n));
  std::vector<double> w(n);
  parallel_for(n, rng.concurrent(), [&](std::size_t i) {
    const Y z = model.sample_likelihood(th, *streams[i]);
    w[i] = log_h(z) - model.log_g(th, z);
  });
  return checked(lp + model.log_g(th, model.data()) + log_mean_exp(w), "PMT estimate");
}

template <class Y, class LogH>
PmtState pmt_init(double th, const DoublyIntractableModel<Y>& model, LogH&& log_h, int n,
                  Rng& rng) {
  PmtState s{th, pmt_log_estimate(th, model, log_h, n, rng)};
  if (s.log_estimate == kNegInf)
    throw std::invalid_argument("zero target estimate at the initial state");
  return s;
}

template <class Y, class LogH>
Step<PmtState> pmt_step(const PmtState& s0, const DoublyIntractableModel<Y>& model,
                        LogH&& log_h, const Proposal<double>& q, int n, Rng& rng) {
  const double th2 = q.sample(s0.theta, rng);
  Step<PmtState> s{s0, {false, Branch::plain, kNegInf, n}};
  const double lq = log_q_ratio_or_reject(q.log_density(th2, s0.theta), q.log_density(s0.theta, th2));
  double est = kNegInf;
  if (lq != kNegInf && model.log_prior(th2) != kNegInf)
    est = pmt_log_estimate(th2, model, log_h, n, rng);
  const double l = est == kNegInf ? kNegInf : est - s0.log_estimate + lq;
  s.report.log_ratio = l;
  if (rng.accept(l)) {
    s.state = {th2, est};
    s.report.accepted = true;
  }
  return s;
}

// Ising likelihood g_theta(z) = exp(theta * sum_{i~j} z_i z_j) on a free
// boundary lattice, with a prior given as a log-density on theta.
class IsingModel final : public DoublyIntractableModel<Spins> {
 public:
  enum class Sampler { exact, wolff };

  IsingModel(Lattice lat, Spins data, Sampler sampler, int wolff_iterations,
             std::function<double(double)> log_prior);

  double log_g(double theta, const Spins& y) const override { return theta * bond_sum(lat_, y); }
  double log_prior(double theta) const override { return log_prior_(theta); }
  Spins sample_likelihood(double theta, Rng& rng) const override;
  bool exact_sampler() const override { return sampler_ == Sampler::exact; }
  Spins mcmc_update(double theta, const Spins& y, Rng& rng) const override {
    return wolff_update(lat_, y, theta, rng);
  }
  const Spins& data() const override { return data_; }
  const Lattice& lattice() const { return lat_; }
  // Exact tables; available when the lattice has at most 20 sites.
  const IsingExact* exact() const { return exact_.get(); }

 private:
  Lattice lat_;
  Spins data_;
  Sampler sampler_;
  int wolff_iterations_;
  std::function<double(double)> log_prior_;
  std::shared_ptr<IsingExact> exact_;
};

// theta' = |theta + sd * e|: symmetric normal random walk reflected at 0.
class ReflectedNormalWalk final : public Proposal<double> {
 public:
  explicit ReflectedNormalWalk(double sd) : sd_(sd) {}
  double sample(const double& from, Rng& rng) const override {
    return std::abs(from + sd_ * rng.normal("theta step"));
  }
  double log_density(const double& from, const double& to) const override;

 private:
  double sd_;
};

// Uniform move to one of the other points of a finite grid.
class GridProposal final : public Proposal<double> {
 public:
  explicit GridProposal(std::vector<double> grid) : grid_(std::move(grid)) {}
  double sample(const double& from, Rng& rng) const override;
  double log_density(const double& from, const double& to) const override;
  const std::vector<double>& grid() const { return grid_; }

 private:
  std::vector<double> grid_;
};

}  // namespace mhaar
