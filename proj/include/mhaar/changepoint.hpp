#pragma once

#include <string>
#include <vector>

#include "mhaar/transdim.hpp"

namespace mhaar {

struct ChangepointHyper {
  double L = 1.0;
  double lambda = 3.0;
  int m_max = 10;
  double c = 1.0, d = 1.0, e = 1.0, f = 1.0;
  // poisson: sum_j n_j log h_j - sum_j h_j (s_j - s_{j-1}).
  // displayed: sum_j h_j log n_j - sum_j h_j (s_j - s_{j-1}); empty
  // segments have zero likelihood.
  enum class Likelihood { poisson, displayed } likelihood = Likelihood::poisson;
};

// Step sizes of the within-model moves and of the bridge proposal.
struct ChangepointMoves {
  double log_height_sd = 0.3;
  double position_window = 0.05;  // fraction of L
  double log_hyper_sd = 0.3;
  double bridge_position_sd = 0.05;  // fraction of L
  double bridge_height_sd = 0.2;
  double bridge_hyper_sd = 0.2;
  double bridge_u_sd = 0.1;
};

// Poisson process on [0, L] with a step intensity of m steps.
// z_m = (s_1..s_{m-1}, h_1..h_m, alpha, beta). Moves m -> m+1 split a step
// at s* ~ U(0, L) with u ~ U(0, 1); the reverse move merges the steps around
// the interior change point with index j, drawn uniformly.
class ChangepointModel final : public TransdimModel, public JumpSpec {
 public:
  ChangepointModel(std::vector<double> events, ChangepointHyper hyper,
                   ChangepointMoves moves = {});

  static int dim(int m) { return 2 * m + 1; }
  int min_model() const override { return 1; }
  int max_model() const override { return hyper_.m_max; }
  double log_joint(int m, const Vec& z) const override;
  bool in_domain(int m, const Vec& z) const override;
  Vec within_model_move(int m, const Vec& z, Rng& rng) const override;

  Vec sample_match(int m, int m2, Rng& rng) const override;
  double log_match_density(int m, int m2, const Vec& w) const override;
  Mapped map(int m, int m2, const Vec& z, const Vec& w) const override;
  Ext bridge_proposal(int m, int m2, const Ext& v, Rng& rng) const override;

  double log_likelihood(int m, const Vec& z) const;
  double log_prior(int m, const Vec& z) const;
  // Number of events in each of the m segments.
  std::vector<int> counts(int m, const Vec& z) const;
  const std::vector<double>& events() const { return events_; }
  const ChangepointHyper& hyper() const { return hyper_; }
  // A point of Z_m: equal spacing, heights at the overall rate.
  Vec initial_state(int m) const;

 private:
  std::vector<double> events_;
  ChangepointHyper hyper_;
  ChangepointMoves moves_;
};

// n event times drawn i.i.d. from the density proportional to a step
// function with the given breakpoints (interior) and rates, sorted.
std::vector<double> changepoint_synthetic(int n, double L, const std::vector<double>& breaks,
                                          const std::vector<double>& rates, Rng& rng);

std::vector<double> read_real_column(const std::string& path);

}  // namespace mhaar
