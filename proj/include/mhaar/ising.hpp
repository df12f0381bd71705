#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "mhaar/rng.hpp"

namespace mhaar {

using Spins = std::vector<std::int8_t>;  // row-major, entries +-1

// Rectangular lattice with free boundary.
struct Lattice {
  int rows = 0;
  int cols = 0;
  std::vector<std::vector<int>> neighbours;
  std::vector<std::pair<int, int>> bonds;

  Lattice() = default;
  Lattice(int r, int c);
  int sites() const { return rows * cols; }
};

// sum over nearest-neighbour pairs of z_i z_j
int bond_sum(const Lattice& lat, const Spins& z);
Spins spins_from_index(const Lattice& lat, std::uint64_t idx);

// One Wolff cluster flip for g_theta(z) = exp(theta * bond_sum(z)).
Spins wolff_update(const Lattice& lat, Spins z, double theta, Rng& rng);
Spins uniform_spins(const Lattice& lat, Rng& rng);

// Exact tables for lattices with at most 20 sites: configurations grouped by
// bond sum, so log C_theta and exact draws cost O(number of levels).
class IsingExact {
 public:
  explicit IsingExact(const Lattice& lat);
  double log_partition(double theta) const;
  Spins sample(double theta, Rng& rng) const;
  const std::vector<int>& levels() const { return levels_; }
  const std::vector<std::vector<std::uint32_t>>& configs() const { return configs_; }

 private:
  Lattice lat_;
  std::vector<int> levels_;
  std::vector<std::vector<std::uint32_t>> configs_;
};

double ising_exact_log_partition(const Lattice& lat, double theta);

}  // namespace mhaar
