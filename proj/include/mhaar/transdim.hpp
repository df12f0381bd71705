#pragma once

#include <functional>
#include <vector>

#include "mhaar/latent.hpp"

namespace mhaar {

using Vec = std::vector<double>;
using TdState = LatentState<int, Vec>;

// Point of the extended space Z_{m,m'} = Z_m x matching space.
struct Ext {
  Vec z;
  Vec w;
  bool operator==(const Ext&) const = default;
};

// phi_{m,m'}(z, w) = (z', w') with log |det d(z',w')/d(z,w)|.
struct Mapped {
  Vec z;
  Vec w;
  double log_jacobian = 0.0;
  Ext ext() const { return {z, w}; }
};

class TransdimModel {
 public:
  virtual ~TransdimModel() = default;
  virtual int min_model() const = 0;
  virtual int max_model() const = 0;
  virtual double log_joint(int m, const Vec& z) const = 0;
  // Whether z is a point of Z_m (ordering, positivity, size), regardless of
  // its density.
  virtual bool in_domain(int m, const Vec& z) const = 0;
  // pi(m, .)-invariant move.
  virtual Vec within_model_move(int m, const Vec& z, Rng& rng) const = 0;
};

// Dimension matching between neighbouring models.
class JumpSpec {
 public:
  virtual ~JumpSpec() = default;
  virtual Vec sample_match(int m, int m2, Rng& rng) const = 0;
  virtual double log_match_density(int m, int m2, const Vec& w) const = 0;
  virtual Mapped map(int m, int m2, const Vec& z, const Vec& w) const = 0;
  // Symmetric proposal on the extended space of the (m, m2) pair with m < m2,
  // used by the bridge kernels.
  virtual Ext bridge_proposal(int m, int m2, const Ext& v, Rng& rng) const = 0;
};

// Uniform over {m-1, m+1}, reflected at the ends of the model range.
class NeighbourModelProposal final : public Proposal<int> {
 public:
  NeighbourModelProposal(int lo, int hi) : lo_(lo), hi_(hi) {}
  int sample(const int& m, Rng& rng) const override;
  double log_density(const int& m, const int& m2) const override;

 private:
  int lo_, hi_;
};

// Q1 when moving up, Q2 when moving down.
inline double up_down_beta(int m, int m2) { return m2 > m ? 1.0 : 0.0; }
inline double half_beta(int, int) { return 0.5; }

// Green's ratio for one matching draw: q ratio times
// pi(m', z') omega_{m',m}(w') |J| / (pi(m, z) omega_{m,m'}(w)).
double green_log_ratio(int m, int m2, const Vec& z, const Vec& w, const TransdimModel& model,
                       const JumpSpec& spec, const Proposal<int>& q);

// Bridges on Z_{m,m'}. f_0 = pi(m, z) omega_{m,m'}(w) and f_{T+1} is the
// pushforward of f_{m',m,0} through phi^{-1}, Jacobian included. For m < m'
// the intermediate densities interpolate the endpoints geometrically and the
// kernels are Metropolis moves with the JumpSpec's symmetric proposal; the
// other orientation is obtained through phi, so the swap symmetry holds by
// construction.
class TransdimBridge final : public SpaceBridge<int, Vec, Ext> {
 public:
  TransdimBridge(const TransdimModel& model, const JumpSpec& spec, int T)
      : model_(model), spec_(spec), T_(T) {}
  int steps() const override { return T_; }
  double log_f(int t, const int& m, const int& m2, const Ext& v) const override;
  Ext kernel(int t, const int& m, const int& m2, const Ext& v, Rng& rng) const override;
  Ext enter(const int& m, const int& m2, const Vec& z, Rng& rng) const override;
  Vec exit(const int& m, const int& m2, const Ext& v, Rng& rng) const override;
  Ext enter_back(const int& m, const int& m2, const Vec& z, Rng& rng) const override;
  Vec exit_back(const int& m, const int& m2, const Ext& v, Rng& rng) const override;
  bool admissible(const int& m, const int& m2) const override;

 private:
  double log_f0(int m, int m2, const Ext& v) const;
  double log_f_end(int m, int m2, const Ext& v) const;
  const TransdimModel& model_;
  const JumpSpec& spec_;
  int T_;
};

// log prod_{t=0}^T f_{m,m',t+1}(u_t) / f_{m,m',t}(u_t) times the q ratio.
inline double rj_log_ratio(int m, int m2, const std::vector<Ext>& path, const TransdimBridge& b,
                           const Proposal<int>& q) {
  return ais_latent_log_ratio(m, m2, path, b, q);
}

// Reversible multiple jump without annealing: N matching draws averaged.
Step<TdState> rmj_step(const TdState& x, const TransdimModel& model, const JumpSpec& spec,
                       const Proposal<int>& q, int n,
                       const std::function<double(int, int)>& beta, Rng& rng);

// Annealed version: N bridged paths of T steps each.
Step<TdState> ais_rj_step(const TdState& x, const TransdimBridge& bridge, const Proposal<int>& q,
                          int n, const std::function<double(int, int)>& beta, Rng& rng);

// phi_{m',m} o phi_{m,m'} round trip error, max abs over components.
double round_trip_error(const JumpSpec& spec, int m, int m2, const Vec& z, const Vec& w);

}  // namespace mhaar
