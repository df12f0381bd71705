#include "mhaar/transdim.hpp"

#include <algorithm>
#include <cmath>

namespace mhaar {

int NeighbourModelProposal::sample(const int& m, Rng& rng) const {
  if (m <= lo_) return lo_ + 1;
  if (m >= hi_) return hi_ - 1;
  return rng.bernoulli(0.5, "model move") ? m + 1 : m - 1;
}

double NeighbourModelProposal::log_density(const int& m, const int& m2) const {
  if (std::abs(m - m2) != 1 || m2 < lo_ || m2 > hi_) return kNegInf;
  if (m <= lo_ || m >= hi_) return 0.0;
  return -std::log(2.0);
}

double green_log_ratio(int m, int m2, const Vec& z, const Vec& w, const TransdimModel& model,
                       const JumpSpec& spec, const Proposal<int>& q) {
  const double lq = log_q_ratio_or_reject(q.log_density(m2, m), q.log_density(m, m2));
  if (lq == kNegInf) return kNegInf;
  const double lw = spec.log_match_density(m, m2, w);
  if (lw == kNegInf || !model.in_domain(m, z)) return kNegInf;
  const Mapped y = spec.map(m, m2, z, w);
  const double num = model.log_joint(m2, y.z);
  if (num == kNegInf) return kNegInf;
  const double den = model.log_joint(m, z);
  if (den == kNegInf) return kInf;
  return checked(lq + num + spec.log_match_density(m2, m, y.w) + y.log_jacobian - den - lw,
                 "Green ratio");
}

double TransdimBridge::log_f0(int m, int m2, const Ext& v) const {
  const double lw = spec_.log_match_density(m, m2, v.w);
  if (lw == kNegInf || !model_.in_domain(m, v.z)) return kNegInf;
  return model_.log_joint(m, v.z) + lw;
}

double TransdimBridge::log_f_end(int m, int m2, const Ext& v) const {
  if (spec_.log_match_density(m, m2, v.w) == kNegInf || !model_.in_domain(m, v.z))
    return kNegInf;
  const Mapped y = spec_.map(m, m2, v.z, v.w);
  const double l = log_f0(m2, m, y.ext());
  return l == kNegInf ? kNegInf : l + y.log_jacobian;
}

double TransdimBridge::log_f(int t, const int& m, const int& m2, const Ext& v) const {
  if (t == 0) return log_f0(m, m2, v);
  if (t == T_ + 1) return log_f_end(m, m2, v);
  if (m < m2) {
    const double a = log_f0(m, m2, v);
    const double b = log_f_end(m, m2, v);
    if (a == kNegInf || b == kNegInf) return kNegInf;
    const double wa = static_cast<double>(T_ + 1 - t) / (T_ + 1);
    const double wb = static_cast<double>(t) / (T_ + 1);
    return wa * a + wb * b;
  }
  if (spec_.log_match_density(m, m2, v.w) == kNegInf || !model_.in_domain(m, v.z))
    return kNegInf;
  const Mapped y = spec_.map(m, m2, v.z, v.w);
  const double l = log_f(T_ + 1 - t, m2, m, y.ext());
  return l == kNegInf ? kNegInf : l + y.log_jacobian;
}

Ext TransdimBridge::kernel(int t, const int& m, const int& m2, const Ext& v, Rng& rng) const {
  if (m < m2) {
    Ext y = spec_.bridge_proposal(m, m2, v, rng);
    const double ly = log_f(t, m, m2, y);
    const double l = ly == kNegInf ? kNegInf : ly - log_f(t, m, m2, v);
    return rng.accept(l, "bridge move") ? y : v;
  }
  const Ext c = spec_.map(m, m2, v.z, v.w).ext();
  const Ext k = kernel(T_ + 1 - t, m2, m, c, rng);
  if (k == c) return v;
  return spec_.map(m2, m, k.z, k.w).ext();
}

Ext TransdimBridge::enter(const int& m, const int& m2, const Vec& z, Rng& rng) const {
  return {z, spec_.sample_match(m, m2, rng)};
}

Vec TransdimBridge::exit(const int& m, const int& m2, const Ext& v, Rng&) const {
  return spec_.map(m, m2, v.z, v.w).z;
}

Ext TransdimBridge::enter_back(const int& m, const int& m2, const Vec& z, Rng& rng) const {
  const Vec w = spec_.sample_match(m2, m, rng);
  return spec_.map(m2, m, z, w).ext();
}

Vec TransdimBridge::exit_back(const int&, const int&, const Ext& v, Rng&) const { return v.z; }

bool TransdimBridge::admissible(const int&, const int& m2) const {
  return m2 >= model_.min_model() && m2 <= model_.max_model();
}

Step<TdState> rmj_step(const TdState& x, const TransdimModel& model, const JumpSpec& spec,
                       const Proposal<int>& q, int n,
                       const std::function<double(int, int)>& beta, Rng& rng) {
  if (n < 1) throw std::invalid_argument("N must be at least 1");
  const int m = x.theta;
  const int m2 = q.sample(m, rng);
  const double b_xy = beta(m, m2);
  const bool first = rng.bernoulli(b_xy, "branch");
  Step<TdState> s{x, {false, first ? Branch::q1 : Branch::q2, kNegInf, n}};
  if (m2 < model.min_model() || m2 > model.max_model()) return s;
  const double b_yx = beta(m2, m);
  auto streams = rng.split(static_cast<std::size_t>(n));
  std::vector<double> lr(n);
  if (first) {
    std::vector<Vec> ws(n);
    parallel_for(n, rng.concurrent(), [&](std::size_t i) {
      ws[i] = spec.sample_match(m, m2, *streams[i]);
      lr[i] = green_log_ratio(m, m2, x.z, ws[i], model, spec, q);
    });
    s.report.log_ratio =
        b_yx >= 1.0 ? kNegInf : log_mean_exp(lr) + std::log1p(-b_yx) - std::log(b_xy);
    if (rng.accept(s.report.log_ratio)) {
      const std::size_t k = rng.categorical_log(lr, "match index");
      s.state = {m2, spec.map(m, m2, x.z, ws[k]).z};
      s.report.accepted = true;
    }
    return s;
  }
  const Mapped y = spec.map(m, m2, x.z, spec.sample_match(m, m2, *streams[0]));
  lr[0] = green_log_ratio(m2, m, y.z, y.w, model, spec, q);
  parallel_for(n, rng.concurrent(), [&](std::size_t i) {
    if (i == 0) return;
    lr[i] = green_log_ratio(m2, m, y.z, spec.sample_match(m2, m, *streams[i]), model, spec, q);
  });
  if (b_yx <= 0.0 || lr[0] == kNegInf)
    s.report.log_ratio = kNegInf;
  else
    s.report.log_ratio = -(log_mean_exp(lr) + std::log1p(-b_xy) - std::log(b_yx));
  if (rng.accept(s.report.log_ratio)) {
    s.state = {m2, y.z};
    s.report.accepted = true;
  }
  return s;
}

Step<TdState> ais_rj_step(const TdState& x, const TransdimBridge& bridge, const Proposal<int>& q,
                          int n, const std::function<double(int, int)>& beta, Rng& rng) {
  return mhaar_latent_step_bridged(x, bridge, q, n, beta, rng);
}

double round_trip_error(const JumpSpec& spec, int m, int m2, const Vec& z, const Vec& w) {
  const Mapped a = spec.map(m, m2, z, w);
  const Mapped b = spec.map(m2, m, a.z, a.w);
  if (b.z.size() != z.size() || b.w.size() != w.size()) return kInf;
  double e = std::abs(a.log_jacobian + b.log_jacobian);
  for (std::size_t i = 0; i < z.size(); ++i) e = std::max(e, std::abs(b.z[i] - z[i]));
  for (std::size_t i = 0; i < w.size(); ++i) e = std::max(e, std::abs(b.w[i] - w[i]));
  return e;
}

}  // namespace mhaar
