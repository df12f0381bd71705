#include "mhaar/ssm.hpp"

#include <cmath>
#include <stdexcept>

namespace mhaar {

namespace {

std::size_t draw_index(std::span<const double> logw, Rng& rng, const char* what) {
  for (double l : logw)
    if (l > kNegInf) return rng.categorical_log(logw, what);
  throw std::domain_error("particle degeneracy");
}

void draw_indices(std::span<const double> logw, std::span<std::size_t> out, Rng& rng,
                  const char* what) {
  for (double l : logw)
    if (l > kNegInf) return rng.categorical_log_many(logw, out, what);
  throw std::domain_error("particle degeneracy");
}

ParticleSystem run_smc(const StateSpaceModel& model, const Vec& th, int m, const Path* cond,
                       Rng& rng) {
  const int T = model.length();
  if (m < (cond ? 2 : 1)) throw std::invalid_argument("too few particles");
  if (cond && static_cast<int>(cond->size()) != T)
    throw std::invalid_argument("conditioned path has the wrong length");
  ParticleSystem ps;
  ps.x.assign(T, std::vector<double>(m));
  ps.logw.assign(T, std::vector<double>(m));
  ps.a.assign(T, std::vector<int>(m, 0));
  const int first = cond ? 1 : 0;
  for (int i = 0; i < m; ++i) {
    const double v = i < first ? (*cond)[0] : model.sample_mu(th, rng);
    ps.x[0][i] = v;
    ps.logw[0][i] = model.log_g(th, 0, v);
  }
  std::vector<std::size_t> anc_draw(m - first);
  for (int t = 1; t < T; ++t) {
    draw_indices(ps.logw[t - 1], anc_draw, rng, "ancestor");
    for (int i = 0; i < m; ++i) {
      const int anc = i < first ? 0 : static_cast<int>(anc_draw[i - first]);
      const double prev = ps.x[t - 1][anc];
      const double v = i < first ? (*cond)[t] : model.sample_f(th, t, prev, rng);
      ps.a[t][i] = anc;
      ps.x[t][i] = v;
      // bootstrap weight; the conditioned slot has the same form
      ps.logw[t][i] = model.log_g(th, t, v);
      if (i < first && model.log_f(th, t, prev, v) == kNegInf) ps.logw[t][i] = kNegInf;
    }
  }
  return ps;
}

}  // namespace

double StateSpaceModel::log_p(const Vec& th, const Path& z) const {
  const int T = length();
  if (static_cast<int>(z.size()) != T) throw std::invalid_argument("path has the wrong length");
  double l = log_mu(th, z[0]) + log_g(th, 0, z[0]);
  for (int t = 1; t < T && l > kNegInf; ++t) l += log_f(th, t, z[t - 1], z[t]) + log_g(th, t, z[t]);
  return l;
}

double StateSpaceModel::log_joint(const Vec& th, const Path& z) const {
  const double lp = log_prior(th);
  if (lp == kNegInf) return kNegInf;
  return lp + log_p(th, z);
}

Path ParticleSystem::path(const std::vector<int>& k) const {
  Path p(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) p[t] = x[t][k[t]];
  return p;
}

double ParticleSystem::log_c() const {
  double l = 0.0;
  for (const auto& w : logw) l += log_mean_exp(w);
  return l;
}

ParticleSystem csmc(const StateSpaceModel& model, const Vec& th, int m, const Path& z, Rng& rng) {
  return run_smc(model, th, m, &z, rng);
}

ParticleSystem particle_filter(const StateSpaceModel& model, const Vec& th, int m, Rng& rng) {
  return run_smc(model, th, m, nullptr, rng);
}

std::vector<int> backward_indices(const ParticleSystem& ps, const StateSpaceModel& model,
                                  const Vec& th, Rng& rng) {
  const int T = ps.length(), m = ps.particles();
  std::vector<int> k(T);
  k[T - 1] = static_cast<int>(draw_index(ps.logw[T - 1], rng, "backward index"));
  std::vector<double> lw(m);
  for (int t = T - 2; t >= 0; --t) {
    const double next = ps.x[t + 1][k[t + 1]];
    for (int i = 0; i < m; ++i) {
      lw[i] = ps.logw[t][i] == kNegInf ? kNegInf
                                       : ps.logw[t][i] + model.log_f(th, t + 1, ps.x[t][i], next);
    }
    k[t] = static_cast<int>(draw_index(lw, rng, "backward index"));
  }
  return k;
}

Path backward_sample(const ParticleSystem& ps, const StateSpaceModel& model, const Vec& th,
                     Rng& rng) {
  return ps.path(backward_indices(ps, model, th, rng));
}

double path_log_ratio(const StateSpaceModel& model, const Proposal<Vec>& q, const Vec& th,
                      const Vec& th2, const Vec& tht, const Path& z, const Path& z2) {
  const double lq = log_q_ratio_or_reject(q.log_density(th2, th), q.log_density(th, th2));
  if (lq == kNegInf) return kNegInf;
  const double num = model.log_joint(th2, z2);
  if (num == kNegInf) return kNegInf;
  return checked(lq + num + model.log_p(tht, z) - model.log_joint(th, z) - model.log_p(tht, z2),
                 "path ratio");
}

RbTables rb_tables(const ParticleSystem& ps, const StateSpaceModel& model,
                   const Proposal<Vec>& q, const Vec& th, const Vec& th2, const Vec& tht,
                   const Path& z) {
  RbTables tab;
  tab.th2 = th2;
  tab.tht = tht;
  const double lq = log_q_ratio_or_reject(q.log_density(th2, th), q.log_density(th, th2));
  const double lp2 = model.log_prior(th2);
  if (lq == kNegInf || lp2 == kNegInf) return tab;
  const int T = ps.length(), m = ps.particles();
  double lognorm = lq + lp2 + model.log_p(tht, z) - model.log_joint(th, z);
  tab.log_alpha.assign(T, Vec(m));
  Vec d(m), col(m);
  for (int t = 0; t < T; ++t) {
    Vec& al = tab.log_alpha[t];
    for (int j = 0; j < m; ++j) {
      const double xj = ps.x[t][j];
      double u = ps.logw[t][j];
      if (u == kNegInf) {
        al[j] = kNegInf;
        continue;
      }
      u += model.log_g(th2, t, xj) - model.log_g(tht, t, xj);
      if (t == 0) {
        u += model.log_mu(th2, xj) - model.log_mu(tht, xj);
        al[j] = u;
        continue;
      }
      for (int i = 0; i < m; ++i) {
        const double xi = ps.x[t - 1][i];
        d[i] = ps.logw[t - 1][i] == kNegInf ? kNegInf
                                            : ps.logw[t - 1][i] + model.log_f(tht, t, xi, xj);
        col[i] = tab.log_alpha[t - 1][i] == kNegInf
                     ? kNegInf
                     : tab.log_alpha[t - 1][i] + model.log_f(th2, t, xi, xj);
      }
      const double ld = log_sum_exp(d);
      al[j] = ld == kNegInf ? kNegInf : u - ld + log_sum_exp(col);
    }
    if (t == T - 1) lognorm -= log_sum_exp(ps.logw[t]);
    const double s = log_sum_exp(al);
    if (s == kNegInf) return tab;
    for (double& v : al) v -= s;
    lognorm += s;
  }
  tab.log_ratio = checked(lognorm, "all-paths ratio");
  return tab;
}

std::vector<int> ffbs_tilted_indices(const RbTables& tab, const ParticleSystem& ps,
                                     const StateSpaceModel& model, Rng& rng) {
  if (tab.log_ratio == kNegInf) throw std::domain_error("degenerate path tables");
  const int T = ps.length(), m = ps.particles();
  std::vector<int> k(T);
  k[T - 1] = static_cast<int>(draw_index(tab.log_alpha[T - 1], rng, "tilted index"));
  Vec lw(m);
  for (int t = T - 2; t >= 0; --t) {
    const double next = ps.x[t + 1][k[t + 1]];
    for (int i = 0; i < m; ++i)
      lw[i] = tab.log_alpha[t][i] == kNegInf
                  ? kNegInf
                  : tab.log_alpha[t][i] + model.log_f(tab.th2, t + 1, ps.x[t][i], next);
    k[t] = static_cast<int>(draw_index(lw, rng, "tilted index"));
  }
  return k;
}

Vec midpoint(const Vec& a, const Vec& b) {
  Vec c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = 0.5 * (a[i] + b[i]);
  return c;
}

Step<SsmState> mwpg_step(const SsmState& x, const StateSpaceModel& model,
                         const Proposal<Vec>& q, int m, Rng& rng) {
  const ParticleSystem ps = csmc(model, x.theta, m, x.z, rng);
  Path z2 = backward_sample(ps, model, x.theta, rng);
  const Vec th2 = q.sample(x.theta, rng);
  Step<SsmState> s{{x.theta, z2}, {false, Branch::plain, kNegInf, 1}};
  const double lq = log_q_ratio_or_reject(q.log_density(th2, x.theta), q.log_density(x.theta, th2));
  const double ly = model.log_joint(th2, z2);
  if (lq != kNegInf && ly != kNegInf)
    s.report.log_ratio = checked(ly - model.log_joint(x.theta, z2) + lq, "MwPG ratio");
  if (rng.accept(s.report.log_ratio)) {
    s.state.theta = th2;
    s.report.accepted = true;
  }
  return s;
}

Step<SsmState> mhaar_csmc_rb_step(const SsmState& x, const StateSpaceModel& model,
                                  const Proposal<Vec>& q, int m, const ThetaRule& rule1,
                                  const ThetaRule& rule2, Rng& rng) {
  const Vec& th = x.theta;
  const Vec th2 = q.sample(th, rng);
  const bool first = rng.bernoulli(0.5, "branch");
  Step<SsmState> s{x, {false, first ? Branch::q1 : Branch::q2, kNegInf, 1}};
  if (model.log_prior(th2) == kNegInf) return s;
  const Vec tht = first ? rule1(th, th2) : rule2(th, th2);
  const ParticleSystem ps = csmc(model, tht, m, x.z, rng);
  Path z2;
  if (first) {
    const RbTables tab = rb_tables(ps, model, q, th, th2, tht, x.z);
    s.report.log_ratio = tab.log_ratio;
    if (!rng.accept(s.report.log_ratio)) return s;
    z2 = ps.path(ffbs_tilted_indices(tab, ps, model, rng));
  } else {
    z2 = backward_sample(ps, model, tht, rng);
    const double l = rb_ratio_log(ps, model, q, th2, th, tht, z2);
    s.report.log_ratio = l == kNegInf ? kNegInf : -l;
    if (!rng.accept(s.report.log_ratio)) return s;
  }
  s.state = {th2, std::move(z2)};
  s.report.accepted = true;
  return s;
}

Step<SsmState> mhaar_csmc_sub_step(const SsmState& x, const StateSpaceModel& model,
                                   const Proposal<Vec>& q, int m, int n, const ThetaRule& rule1,
                                   const ThetaRule& rule2, Rng& rng) {
  if (n < 1) throw std::invalid_argument("N must be at least 1");
  const Vec& th = x.theta;
  const Vec th2 = q.sample(th, rng);
  const bool first = rng.bernoulli(0.5, "branch");
  Step<SsmState> s{x, {false, first ? Branch::q1 : Branch::q2, kNegInf, n}};
  if (model.log_prior(th2) == kNegInf) return s;
  const Vec tht = first ? rule1(th, th2) : rule2(th, th2);
  const ParticleSystem ps = csmc(model, tht, m, x.z, rng);
  auto streams = rng.split(static_cast<std::size_t>(n));
  std::vector<Path> u(n);
  std::vector<double> lr(n);
  if (first) {
    parallel_for(n, rng.concurrent(), [&](std::size_t i) {
      u[i] = backward_sample(ps, model, tht, *streams[i]);
      lr[i] = path_log_ratio(model, q, th, th2, tht, x.z, u[i]);
    });
    s.report.log_ratio = log_mean_exp(lr);
    if (!rng.accept(s.report.log_ratio)) return s;
    const std::size_t k = rng.categorical_log(lr, "path index");
    s.state = {th2, std::move(u[k])};
    s.report.accepted = true;
    return s;
  }
  // Slot 0 holds the current path; z' is one more backward draw.
  Path z2 = backward_sample(ps, model, tht, *streams[0]);
  lr[0] = path_log_ratio(model, q, th2, th, tht, z2, x.z);
  parallel_for(n, rng.concurrent(), [&](std::size_t i) {
    if (i == 0) return;
    lr[i] = path_log_ratio(model, q, th2, th, tht, z2, backward_sample(ps, model, tht, *streams[i]));
  });
  s.report.log_ratio = lr[0] == kNegInf ? kNegInf : -log_mean_exp(lr);
  if (rng.accept(s.report.log_ratio)) {
    s.state = {th2, std::move(z2)};
    s.report.accepted = true;
  }
  return s;
}

double SsmLatentBridge::log_f(int t, const Vec& th, const Vec& th2, const Path& z) const {
  if (t == 0) return model_.log_joint(th, z);
  if (t == 2) return model_.log_joint(th2, z);
  // eta at the midpoint is constant in z and cancels along the bridge
  return model_.log_p(rule_(th, th2), z);
}

Path SsmLatentBridge::kernel(int, const Vec& th, const Vec& th2, const Path& z, Rng& rng) const {
  const Vec mid = rule_(th, th2);
  return backward_sample(csmc(model_, mid, m_, z, rng), model_, mid, rng);
}

Path SsmLatentBridge::refresh(const Vec& th, const Path& z, Rng& rng) const {
  Path p = z;
  for (int i = 0; i < refresh_sweeps_; ++i)
    p = backward_sample(csmc(model_, th, m_, p, rng), model_, th, rng);
  return p;
}

Vec NormalWalk::sample(const Vec& from, Rng& rng) const {
  Vec y = from;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += sd_[i] * rng.normal("parameter step");
  return y;
}

double NormalWalk::log_density(const Vec& from, const Vec& to) const {
  double l = 0.0;
  for (std::size_t i = 0; i < from.size(); ++i) l += log_normal_pdf(to[i], from[i], sd_[i]);
  return l;
}

double NonlinearSsm::drift(int t, double prev) {
  return prev / 2.0 + 25.0 * prev / (1.0 + prev * prev) + 8.0 * std::cos(1.2 * (t + 1));
}

double NonlinearSsm::log_prior(const Vec& th) const {
  if (th.size() != 2) throw std::invalid_argument("theta must be (sigma_v, sigma_w)");
  double l = 0.0;
  for (double s : th) {
    if (!(s > 0.0) || !std::isfinite(s)) return kNegInf;
    l += log_inv_gamma_pdf(s * s, a_, b_) + std::log(2.0 * s);
  }
  return l;
}

double NonlinearSsm::log_mu(const Vec&, double z) const {
  return log_normal_pdf(z, 0.0, std::sqrt(10.0));
}

double NonlinearSsm::log_f(const Vec& th, int t, double prev, double z) const {
  return log_normal_pdf(z, drift(t, prev), th[0]);
}

double NonlinearSsm::log_g(const Vec& th, int t, double z) const {
  return log_normal_pdf(y_[t], z * z / 20.0, th[1]);
}

double NonlinearSsm::sample_mu(const Vec&, Rng& rng) const {
  return std::sqrt(10.0) * rng.normal("initial state");
}

double NonlinearSsm::sample_f(const Vec& th, int t, double prev, Rng& rng) const {
  return drift(t, prev) + th[0] * rng.normal("state noise");
}

SsmSeries nonlinear_ssm_simulate(double var_v, double var_w, int p, Rng& rng) {
  if (var_v < 0.0 || var_w < 0.0) throw std::invalid_argument("variances must be non-negative");
  const double sv = std::sqrt(var_v), sw = std::sqrt(var_w);
  SsmSeries s;
  for (int t = 0; t < p; ++t) {
    const double z = t == 0 ? std::sqrt(10.0) * rng.normal("initial state")
                            : NonlinearSsm::drift(t, s.z.back()) + sv * rng.normal("state noise");
    s.z.push_back(z);
    s.y.push_back(z * z / 20.0 + sw * rng.normal("observation noise"));
  }
  return s;
}

}  // namespace mhaar
