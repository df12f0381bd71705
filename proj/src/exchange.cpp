#include "mhaar/exchange.hpp"

#include <cmath>

namespace mhaar {

IsingModel::IsingModel(Lattice lat, Spins data, Sampler sampler, int wolff_iterations,
                       std::function<double(double)> log_prior)
    : lat_(std::move(lat)),
      data_(std::move(data)),
      sampler_(sampler),
      wolff_iterations_(wolff_iterations),
      log_prior_(std::move(log_prior)) {
  if (static_cast<int>(data_.size()) != lat_.sites())
    throw std::invalid_argument("data does not match the lattice");
  if (lat_.sites() <= 20) exact_ = std::make_shared<IsingExact>(lat_);
  if (sampler_ == Sampler::exact && !exact_)
    throw std::invalid_argument("exact sampler needs a lattice with at most 20 sites");
}

Spins IsingModel::sample_likelihood(double theta, Rng& rng) const {
  if (sampler_ == Sampler::exact) return exact_->sample(theta, rng);
  Spins z = uniform_spins(lat_, rng);
  for (int i = 0; i < wolff_iterations_; ++i) z = wolff_update(lat_, std::move(z), theta, rng);
  return z;
}

double ReflectedNormalWalk::log_density(const double& from, const double& to) const {
  if (to < 0.0) return kNegInf;
  const double a = log_normal_pdf(to, from, sd_);
  const double b = log_normal_pdf(-to, from, sd_);
  const double v[2] = {a, b};
  return log_sum_exp(v);
}

double GridProposal::sample(const double& from, Rng& rng) const {
  std::vector<double> w(grid_.size(), 1.0);
  for (std::size_t i = 0; i < grid_.size(); ++i)
    if (grid_[i] == from) w[i] = 0.0;
  return grid_[rng.choose(w, "grid move")];
}

double GridProposal::log_density(const double& from, const double& to) const {
  if (from == to) return kNegInf;
  for (double g : grid_)
    if (g == to) return -std::log(static_cast<double>(grid_.size() - 1));
  return kNegInf;
}

}  // namespace mhaar
