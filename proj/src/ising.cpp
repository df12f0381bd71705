#include "mhaar/ising.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "mhaar/numeric.hpp"

namespace mhaar {

Lattice::Lattice(int r, int c) : rows(r), cols(c), neighbours(r * c) {
  if (r < 1 || c < 1) throw std::invalid_argument("lattice dimensions must be positive");
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) {
      const int s = i * c + j;
      if (j + 1 < c) bonds.emplace_back(s, s + 1);
      if (i + 1 < r) bonds.emplace_back(s, s + c);
    }
  for (auto [a, b] : bonds) {
    neighbours[a].push_back(b);
    neighbours[b].push_back(a);
  }
}

int bond_sum(const Lattice& lat, const Spins& z) {
  int s = 0;
  for (auto [a, b] : lat.bonds) s += z[a] * z[b];
  return s;
}

Spins spins_from_index(const Lattice& lat, std::uint64_t idx) {
  Spins z(lat.sites());
  for (int i = 0; i < lat.sites(); ++i) z[i] = (idx >> i & 1) ? 1 : -1;
  return z;
}

Spins wolff_update(const Lattice& lat, Spins z, double theta, Rng& rng) {
  if (theta < 0.0) throw std::invalid_argument("Wolff update needs theta >= 0");
  const double p_add = -std::expm1(-2.0 * theta);
  const int n = lat.sites();
  const int seed = static_cast<int>(rng.uniform_index(n, "wolff seed"));
  std::vector<char> in(n, 0);
  std::vector<int> stack{seed};
  in[seed] = 1;
  const std::int8_t s0 = z[seed];
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    for (int j : lat.neighbours[i]) {
      if (in[j] || z[j] != s0) continue;
      if (rng.bernoulli(p_add, "wolff bond")) {
        in[j] = 1;
        stack.push_back(j);
      }
    }
  }
  for (int i = 0; i < n; ++i)
    if (in[i]) z[i] = static_cast<std::int8_t>(-z[i]);
  return z;
}

Spins uniform_spins(const Lattice& lat, Rng& rng) {
  Spins z(lat.sites());
  for (auto& s : z) s = rng.bernoulli(0.5, "spin") ? 1 : -1;
  return z;
}

IsingExact::IsingExact(const Lattice& lat) : lat_(lat) {
  if (lat.sites() > 20) throw std::invalid_argument("exact Ising tables need at most 20 sites");
  std::map<int, std::vector<std::uint32_t>> by_level;
  const std::uint32_t total = 1u << lat.sites();
  for (std::uint32_t i = 0; i < total; ++i)
    by_level[bond_sum(lat, spins_from_index(lat, i))].push_back(i);
  for (auto& [s, v] : by_level) {
    levels_.push_back(s);
    configs_.push_back(std::move(v));
  }
}

double IsingExact::log_partition(double theta) const {
  std::vector<double> l(levels_.size());
  for (std::size_t k = 0; k < l.size(); ++k)
    l[k] = std::log(static_cast<double>(configs_[k].size())) + theta * levels_[k];
  return log_sum_exp(l);
}

Spins IsingExact::sample(double theta, Rng& rng) const {
  std::vector<double> l(levels_.size());
  for (std::size_t k = 0; k < l.size(); ++k)
    l[k] = std::log(static_cast<double>(configs_[k].size())) + theta * levels_[k];
  const std::size_t k = rng.categorical_log(l, "ising level");
  const std::size_t i = rng.uniform_index(configs_[k].size(), "ising config");
  return spins_from_index(lat_, configs_[k][i]);
}

double ising_exact_log_partition(const Lattice& lat, double theta) {
  return IsingExact(lat).log_partition(theta);
}

}  // namespace mhaar
