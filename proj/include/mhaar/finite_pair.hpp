#pragma once

#include <cstdint>
#include <vector>

#include "mhaar/kernels.hpp"

namespace mhaar {

// Finite target on {0..n-1} with a finite auxiliary space {0..k-1}, a
// tabulated proposal q, tabulated laws Q_{x,y} and an involution phi on U.
// The ratio is r(x,y) Q_{y,x}(phi(u)) / Q_{x,y}(u), so every identity of a
// proposal pair holds exactly.
class FinitePair final : public ProposalPair<int, int>,
                         public Target<int>,
                         public Proposal<int> {
 public:
  FinitePair(std::vector<double> pi, std::vector<std::vector<double>> q,
             std::vector<std::vector<std::vector<double>>> aux, std::vector<int> phi);
  // Random fixture with n states and k auxiliary values; phi swaps 0<->1
  // and fixes the rest.
  static FinitePair random(int n, int k, std::uint64_t seed);

  int states() const { return static_cast<int>(pi_.size()); }
  int aux_size() const { return static_cast<int>(phi_.size()); }
  std::vector<int> state_list() const;
  std::vector<double> log_pi_list() const;
  double aux_prob(int x, int y, int u) const { return aux_[x][y][u]; }
  double exact_ratio(int x, int y) const;

  // Target / Proposal for plain MH.
  double log_density(const int& x) const override;
  int sample(const int& from, Rng& rng) const override;
  double log_density(const int& from, const int& to) const override;

  int sample_q(const int& x, Rng& rng) const override { return sample(x, rng); }
  int sample_u_forward(const int& x, const int& y, Rng& rng) const override;
  int involution(const int& u) const override { return phi_[u]; }
  double log_ratio(const int& x, const int& y, const int& u) const override;

 private:
  std::vector<double> pi_;
  std::vector<std::vector<double>> q_;
  std::vector<std::vector<std::vector<double>>> aux_;
  std::vector<int> phi_;
};

// Metropolis chain on U that is reversible with respect to Q_{x,y}: propose
// a uniform other value and accept with the ratio of Q masses.
class FiniteAuxMetropolis final : public InnerKernel<int, int> {
 public:
  explicit FiniteAuxMetropolis(const FinitePair& pair) : pair_(pair) {}
  int sample(const int& x, const int& y, const int& u, Rng& rng) const override;

 private:
  const FinitePair& pair_;
};

// Redraws u from Q_{x,y} independently of the current value.
class FiniteAuxRefresh final : public InnerKernel<int, int> {
 public:
  explicit FiniteAuxRefresh(const FinitePair& pair) : pair_(pair) {}
  int sample(const int& x, const int& y, const int&, Rng& rng) const override {
    return pair_.sample_u_forward(x, y, rng);
  }

 private:
  const FinitePair& pair_;
};

class IdentityInner final : public InnerKernel<int, int> {
 public:
  int sample(const int&, const int&, const int& u, Rng&) const override { return u; }
};

}  // namespace mhaar
