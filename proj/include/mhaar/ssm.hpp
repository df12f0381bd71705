#pragma once

#include <functional>
#include <vector>

#include "mhaar/latent.hpp"

namespace mhaar {

using Vec = std::vector<double>;
using Path = std::vector<double>;
using SsmState = LatentState<Vec, Path>;

// p_theta(z, y) = mu(z_0) prod f(z_{t-1}, z_t) prod g(z_t, y_t). Times are
// 0-based here; models that depend on the time index receive it as is.
// Particles are proposed from the model itself (bootstrap).
class StateSpaceModel {
 public:
  virtual ~StateSpaceModel() = default;
  virtual int length() const = 0;
  virtual double log_prior(const Vec& th) const = 0;
  virtual double log_mu(const Vec& th, double z) const = 0;
  virtual double log_f(const Vec& th, int t, double prev, double z) const = 0;
  virtual double log_g(const Vec& th, int t, double z) const = 0;
  virtual double sample_mu(const Vec& th, Rng& rng) const = 0;
  virtual double sample_f(const Vec& th, int t, double prev, Rng& rng) const = 0;

  double log_p(const Vec& th, const Path& z) const;
  // log eta(theta) + log p_theta(z, y); -inf off the prior support.
  double log_joint(const Vec& th, const Path& z) const;
};

// x[t][i], log-weights w[t][i] and ancestors a[t][i] (index into t-1; a[0]
// unused). Slot 0 carries the conditioned path when there is one.
struct ParticleSystem {
  std::vector<std::vector<double>> x;
  std::vector<std::vector<double>> logw;
  std::vector<std::vector<int>> a;
  int particles() const { return x.empty() ? 0 : static_cast<int>(x[0].size()); }
  int length() const { return static_cast<int>(x.size()); }
  Path path(const std::vector<int>& k) const;
  // sum_t log mean_i w_t^(i)
  double log_c() const;
};

ParticleSystem csmc(const StateSpaceModel& model, const Vec& th, int m, const Path& z, Rng& rng);
ParticleSystem particle_filter(const StateSpaceModel& model, const Vec& th, int m, Rng& rng);

// Indices drawn by backward sampling: k_{T-1} from w_{T-1}, then k_t from
// w_t f(x_t, x_{t+1}^{k_{t+1}}).
std::vector<int> backward_indices(const ParticleSystem& ps, const StateSpaceModel& model,
                                  const Vec& th, Rng& rng);
Path backward_sample(const ParticleSystem& ps, const StateSpaceModel& model, const Vec& th,
                     Rng& rng);

// log of q(th2,th) eta(th2) p_th2(z2) p_tht(z) / (q(th,th2) eta(th) p_tht(z2) p_th(z)).
double path_log_ratio(const StateSpaceModel& model, const Proposal<Vec>& q, const Vec& th,
                      const Vec& th2, const Vec& tht, const Path& z, const Path& z2);

// Forward tables of the chain factorisation of phi_tht(k | zeta) times
// path_log_ratio(z, zeta^(k)), normalised per time step.
struct RbTables {
  std::vector<Vec> log_alpha;  // per t, normalised to log-sum 0
  double log_ratio = kNegInf;  // log of the full sum over k
  Vec th2, tht;
};

RbTables rb_tables(const ParticleSystem& ps, const StateSpaceModel& model,
                   const Proposal<Vec>& q, const Vec& th, const Vec& th2, const Vec& tht,
                   const Path& z);
inline double rb_ratio_log(const ParticleSystem& ps, const StateSpaceModel& model,
                           const Proposal<Vec>& q, const Vec& th, const Vec& th2,
                           const Vec& tht, const Path& z) {
  return rb_tables(ps, model, q, th, th2, tht, z).log_ratio;
}
// Draws k with probability proportional to the tabled product.
std::vector<int> ffbs_tilted_indices(const RbTables& tab, const ParticleSystem& ps,
                                     const StateSpaceModel& model, Rng& rng);

using ThetaRule = std::function<Vec(const Vec&, const Vec&)>;
Vec midpoint(const Vec& a, const Vec& b);

Step<SsmState> mwpg_step(const SsmState& x, const StateSpaceModel& model,
                         const Proposal<Vec>& q, int m, Rng& rng);

// All backward paths of one cSMC sweep, through the sum-product tables.
Step<SsmState> mhaar_csmc_rb_step(const SsmState& x, const StateSpaceModel& model,
                                  const Proposal<Vec>& q, int m, const ThetaRule& rule1,
                                  const ThetaRule& rule2, Rng& rng);

// N backward paths of one cSMC sweep.
Step<SsmState> mhaar_csmc_sub_step(const SsmState& x, const StateSpaceModel& model,
                                   const Proposal<Vec>& q, int m, int n, const ThetaRule& rule1,
                                   const ThetaRule& rule2, Rng& rng);

// Latent bridge with T = 1: f_1 = p_{rule(theta, theta')}(., y) and the bridge
// kernel is a cSMC sweep with backward sampling at that parameter. refresh
// runs `refresh_sweeps` cSMC sweeps at theta (0 keeps z).
class SsmLatentBridge final : public LatentBridge<Vec, Path> {
 public:
  SsmLatentBridge(const StateSpaceModel& model, int m, ThetaRule rule = midpoint,
                  int refresh_sweeps = 0)
      : model_(model), m_(m), rule_(std::move(rule)), refresh_sweeps_(refresh_sweeps) {}
  int steps() const override { return 1; }
  double log_f(int t, const Vec& th, const Vec& th2, const Path& z) const override;
  Path kernel(int t, const Vec& th, const Vec& th2, const Path& z, Rng& rng) const override;
  Path refresh(const Vec& th, const Path& z, Rng& rng) const override;
  bool admissible(const Vec&, const Vec& th2) const override {
    return model_.log_prior(th2) != kNegInf;
  }

 private:
  const StateSpaceModel& model_;
  int m_;
  ThetaRule rule_;
  int refresh_sweeps_;
};

// Independent normal steps with the given standard deviations.
class NormalWalk final : public Proposal<Vec> {
 public:
  explicit NormalWalk(Vec sd) : sd_(std::move(sd)) {}
  Vec sample(const Vec& from, Rng& rng) const override;
  double log_density(const Vec& from, const Vec& to) const override;

 private:
  Vec sd_;
};

// Z_1 ~ N(0, 10); Z_t = Z_{t-1}/2 + 25 Z_{t-1}/(1 + Z_{t-1}^2) + 8 cos(1.2 t) + V_t;
// Y_t = Z_t^2 / 20 + W_t, t = 1..P. theta = (sigma_v, sigma_w), standard
// deviations; the IG(a, b) priors on the variances carry the factor 2 sigma.
class NonlinearSsm final : public StateSpaceModel {
 public:
  explicit NonlinearSsm(Vec y, double prior_shape = 0.01, double prior_scale = 0.01)
      : y_(std::move(y)), a_(prior_shape), b_(prior_scale) {}
  int length() const override { return static_cast<int>(y_.size()); }
  double log_prior(const Vec& th) const override;
  double log_mu(const Vec& th, double z) const override;
  double log_f(const Vec& th, int t, double prev, double z) const override;
  double log_g(const Vec& th, int t, double z) const override;
  double sample_mu(const Vec& th, Rng& rng) const override;
  double sample_f(const Vec& th, int t, double prev, Rng& rng) const override;
  static double drift(int t, double prev);  // t is 0-based
  const Vec& data() const { return y_; }

 private:
  Vec y_;
  double a_, b_;
};

struct SsmSeries {
  Path z;
  Vec y;
};
SsmSeries nonlinear_ssm_simulate(double var_v, double var_w, int p, Rng& rng);

}  // namespace mhaar
