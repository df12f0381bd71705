#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "mhaar/exchange.hpp"
#include "mhaar/latent.hpp"
#include "mhaar/ssm.hpp"
#include "mhaar/transdim.hpp"

namespace mhaar {

// Ising on a tiny lattice with theta restricted to a grid: every random
// source (exact sampler, Wolff seeds and bonds, grid proposal) is finite.
struct IsingGridFixture {
  std::vector<double> grid;
  std::vector<double> log_eta;
  Lattice lattice;
  Spins data;
  std::unique_ptr<IsingModel> model;
  std::unique_ptr<GridProposal> q;

  IsingGridFixture(int rows = 2, int cols = 1);
  double log_prior(double theta) const;
  std::vector<double> log_posterior() const;
  // r(theta, theta') with exact normalising constants.
  double exact_log_ratio(double th, double th2) const;
};

// pi(theta, z) tabulated on a parameter grid {0..n_theta-1} and a finite
// latent {0..n_z-1}. Bridges interpolate log pi geometrically; bridge
// kernels are Metropolis moves to a uniform other value; the refresh R_theta
// is the identity, the same Metropolis move on pi_theta, or an exact draw.
class FiniteLatentFixture final : public LatentBridge<int, int>, public Proposal<int> {
 public:
  enum class Refresh { identity, metropolis, exact };
  FiniteLatentFixture(int T, Refresh refresh, std::uint64_t seed, int n_theta = 3, int n_z = 2);

  int steps() const override { return T_; }
  double log_f(int t, const int& th, const int& th2, const int& z) const override;
  int kernel(int t, const int& th, const int& th2, const int& z, Rng& rng) const override;
  int refresh(const int& th, const int& z, Rng& rng) const override;

  int sample(const int& from, Rng& rng) const override;
  double log_density(const int& from, const int& to) const override;

  double log_joint(int th, int z) const { return log_pi_[th][z]; }
  double log_marginal(int th) const;
  std::vector<LatentState<int, int>> states() const;
  std::vector<double> log_target() const;
  int n_theta() const { return static_cast<int>(log_pi_.size()); }
  int n_z() const { return static_cast<int>(log_pi_[0].size()); }

 private:
  int metropolis(int z, const std::function<double(int)>& lf, Rng& rng) const;
  int T_;
  Refresh refresh_;
  std::vector<std::vector<double>> log_pi_;
};

// Models m = 1..3 with z in {0,1}^m and tabulated pi(m, z). Going up draws
// w in {0,1} with masses (0.3, 0.7) and appends w XOR z_1; going down needs
// no matching variable.
class FiniteTransdimFixture final : public TransdimModel, public JumpSpec {
 public:
  explicit FiniteTransdimFixture(std::uint64_t seed, int max_m = 3);
  int min_model() const override { return 1; }
  int max_model() const override { return max_m_; }
  double log_joint(int m, const Vec& z) const override;
  bool in_domain(int m, const Vec& z) const override;
  Vec within_model_move(int m, const Vec& z, Rng& rng) const override;
  Vec sample_match(int m, int m2, Rng& rng) const override;
  double log_match_density(int m, int m2, const Vec& w) const override;
  Mapped map(int m, int m2, const Vec& z, const Vec& w) const override;
  Ext bridge_proposal(int m, int m2, const Ext& v, Rng& rng) const override;

  std::vector<TdState> states() const;
  std::vector<double> log_target() const;
  double log_model_mass(int m) const;

 private:
  int max_m_;
  std::vector<std::vector<double>> table_;  // [m-1][bits of z]
};

// Model 1: z ~ N(0,1). Model 2: (a, b) ~ N(0,1) x N(0, s^2). Going up draws
// w ~ N(0,1) and sets (a, b) = (z, s w). Model 2 carries mass factor r.
class NestedGaussianFixture final : public TransdimModel, public JumpSpec {
 public:
  explicit NestedGaussianFixture(double scale = 1.0, double mass_ratio = 1.0)
      : s_(scale), log_r_(std::log(mass_ratio)) {}
  int min_model() const override { return 1; }
  int max_model() const override { return 2; }
  double log_joint(int m, const Vec& z) const override;
  bool in_domain(int m, const Vec& z) const override {
    return (m == 1 || m == 2) && static_cast<int>(z.size()) == m;
  }
  Vec within_model_move(int m, const Vec& z, Rng& rng) const override;
  Vec sample_match(int m, int m2, Rng& rng) const override;
  double log_match_density(int m, int m2, const Vec& w) const override;
  Mapped map(int m, int m2, const Vec& z, const Vec& w) const override;
  Ext bridge_proposal(int m, int m2, const Ext& v, Rng& rng) const override;

 private:
  double s_;
  double log_r_;
};

// Two-state HMM with states {0, 1}. theta = (p) is the probability of
// staying put, on a finite grid with a tabulated prior; the initial law is
// (0.6, 0.4) and each observation equals the state with probability 0.75.
class TwoStateHmmFixture final : public StateSpaceModel {
 public:
  TwoStateHmmFixture(std::vector<int> y, Vec grid = {0.3, 0.8}, Vec prior = {0.4, 0.6});
  int length() const override { return static_cast<int>(y_.size()); }
  double log_prior(const Vec& th) const override;
  double log_mu(const Vec& th, double z) const override;
  double log_f(const Vec& th, int t, double prev, double z) const override;
  double log_g(const Vec& th, int t, double z) const override;
  double sample_mu(const Vec& th, Rng& rng) const override;
  double sample_f(const Vec& th, int t, double prev, Rng& rng) const override;

  const Vec& grid() const { return grid_; }
  std::vector<Path> paths() const;     // all 2^T latent paths
  std::vector<SsmState> states() const;  // grid x paths
  std::vector<double> log_target() const;
  // Exact log l_theta(y) by summing over paths.
  double log_likelihood(const Vec& th) const;

 private:
  std::vector<int> y_;
  Vec grid_, prior_;
};

// Uniform move to one of the other grid points, for one-dimensional theta.
class VecGridProposal final : public Proposal<Vec> {
 public:
  explicit VecGridProposal(Vec grid) : g_(std::move(grid)) {}
  Vec sample(const Vec& from, Rng& rng) const override;
  double log_density(const Vec& from, const Vec& to) const override;

 private:
  Vec g_;
};

// pi(theta, z) = eta(theta) N(z; theta, 1) N(y; z, 1) with eta = N(0, 3^2).
// Bridges interpolate log pi geometrically; every kernel is an exact draw
// from its target, so ratios and marginals are available in closed form.
class GaussianLatentFixture final : public LatentBridge<double, double>,
                                    public Proposal<double> {
 public:
  GaussianLatentFixture(double y, int T, double step = 0.5) : y_(y), T_(T), step_(step) {}
  int steps() const override { return T_; }
  double log_f(int t, const double& th, const double& th2, const double& z) const override;
  double kernel(int t, const double& th, const double& th2, const double& z,
                Rng& rng) const override;
  double refresh(const double& th, const double& z, Rng& rng) const override;

  double sample(const double& from, Rng& rng) const override;
  double log_density(const double& from, const double& to) const override;

  double log_joint(double th, double z) const;
  double log_marginal(double th) const;  // log of the integral over z

 private:
  double y_;
  int T_;
  double step_;
};

// z_0 ~ N(0, 1), z_t = a z_{t-1} + N(0, sigma_v^2), y_t = z_t + N(0, sigma_w^2)
// with theta = (sigma_v, sigma_w) and independent N(1, 1) priors truncated
// to positive values (unnormalised).
class LinearGaussianSsm final : public StateSpaceModel {
 public:
  LinearGaussianSsm(Vec y, double a = 0.8) : y_(std::move(y)), a_(a) {}
  int length() const override { return static_cast<int>(y_.size()); }
  double log_prior(const Vec& th) const override;
  double log_mu(const Vec& th, double z) const override;
  double log_f(const Vec& th, int t, double prev, double z) const override;
  double log_g(const Vec& th, int t, double z) const override;
  double sample_mu(const Vec& th, Rng& rng) const override;
  double sample_f(const Vec& th, int t, double prev, Rng& rng) const override;

  // Kalman filter likelihood and an exact draw from p_theta(z | y).
  double log_likelihood(const Vec& th) const;
  Path sample_smoothing(const Vec& th, Rng& rng) const;

 private:
  Vec y_;
  double a_;
};

}  // namespace mhaar
