#include "mhaar/finite_pair.hpp"

#include <cmath>
#include <stdexcept>

namespace mhaar {

FinitePair::FinitePair(std::vector<double> pi, std::vector<std::vector<double>> q,
                       std::vector<std::vector<std::vector<double>>> aux,
                       std::vector<int> phi)
    : pi_(std::move(pi)), q_(std::move(q)), aux_(std::move(aux)), phi_(std::move(phi)) {
  const std::size_t k = phi_.size();
  for (std::size_t u = 0; u < k; ++u)
    if (phi_[phi_[u]] != static_cast<int>(u)) throw std::invalid_argument("phi is not an involution");
}

FinitePair FinitePair::random(int n, int k, std::uint64_t seed) {
  StreamRng rng(seed, 0);
  std::vector<double> pi(n);
  for (auto& p : pi) p = 0.2 + rng.uniform();
  std::vector<std::vector<double>> q(n, std::vector<double>(n, 0.0));
  for (int x = 0; x < n; ++x) {
    double s = 0.0;
    for (int y = 0; y < n; ++y)
      if (y != x) s += q[x][y] = 0.2 + rng.uniform();
    for (int y = 0; y < n; ++y) q[x][y] /= s;
  }
  std::vector<std::vector<std::vector<double>>> aux(
      n, std::vector<std::vector<double>>(n, std::vector<double>(k)));
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      double s = 0.0;
      for (int u = 0; u < k; ++u) s += aux[x][y][u] = 0.05 + rng.uniform();
      for (int u = 0; u < k; ++u) aux[x][y][u] /= s;
    }
  std::vector<int> phi(k);
  for (int u = 0; u < k; ++u) phi[u] = u;
  if (k >= 2) std::swap(phi[0], phi[1]);
  return FinitePair(pi, q, aux, phi);
}

std::vector<int> FinitePair::state_list() const {
  std::vector<int> s(pi_.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<int>(i);
  return s;
}

std::vector<double> FinitePair::log_pi_list() const {
  std::vector<double> l;
  for (double p : pi_) l.push_back(std::log(p));
  return l;
}

double FinitePair::exact_ratio(int x, int y) const {
  return pi_[y] * q_[y][x] / (pi_[x] * q_[x][y]);
}

double FinitePair::log_density(const int& x) const { return std::log(pi_[x]); }

int FinitePair::sample(const int& from, Rng& rng) const {
  return static_cast<int>(rng.choose(q_[from], "q"));
}

double FinitePair::log_density(const int& from, const int& to) const {
  return std::log(q_[from][to]);
}

int FinitePair::sample_u_forward(const int& x, const int& y, Rng& rng) const {
  return static_cast<int>(rng.choose(aux_[x][y], "aux"));
}

double FinitePair::log_ratio(const int& x, const int& y, const int& u) const {
  return std::log(exact_ratio(x, y)) + std::log(aux_[y][x][phi_[u]]) -
         std::log(aux_[x][y][u]);
}

int FiniteAuxMetropolis::sample(const int& x, const int& y, const int& u, Rng& rng) const {
  const int k = pair_.aux_size();
  std::vector<double> w(k, 1.0);
  w[u] = 0.0;
  const int v = static_cast<int>(rng.choose(w, "inner proposal"));
  const double lr = std::log(pair_.aux_prob(x, y, v)) - std::log(pair_.aux_prob(x, y, u));
  return rng.accept(lr, "inner accept") ? v : u;
}

}  // namespace mhaar
