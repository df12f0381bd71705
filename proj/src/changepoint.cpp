#include "mhaar/changepoint.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace mhaar {

namespace {

inline double s_at(const Vec& z, int m, double L, int j) {
  if (j == 0) return 0.0;
  if (j == m) return L;
  return z[j - 1];
}

}  // namespace

ChangepointModel::ChangepointModel(std::vector<double> events, ChangepointHyper hyper,
                                   ChangepointMoves moves)
    : events_(std::move(events)), hyper_(hyper), moves_(moves) {
  std::sort(events_.begin(), events_.end());
  if (!(hyper_.L > 0.0)) throw std::invalid_argument("L must be positive");
  if (hyper_.m_max < 1) throw std::invalid_argument("m_max must be at least 1");
  for (double y : events_)
    if (y < 0.0 || y > hyper_.L) throw std::invalid_argument("event outside [0, L]");
}

bool ChangepointModel::in_domain(int m, const Vec& z) const {
  if (m < 1 || m > hyper_.m_max || static_cast<int>(z.size()) != dim(m)) return false;
  double prev = 0.0;
  for (int j = 0; j < m - 1; ++j) {
    if (!(z[j] > prev)) return false;
    prev = z[j];
  }
  if (!(prev < hyper_.L)) return false;
  for (int j = m - 1; j < dim(m); ++j)
    if (!(z[j] > 0.0) || !std::isfinite(z[j])) return false;
  return true;
}

std::vector<int> ChangepointModel::counts(int m, const Vec& z) const {
  std::vector<int> n(m);
  for (int j = 1; j <= m; ++j) {
    auto lo = std::lower_bound(events_.begin(), events_.end(), s_at(z, m, hyper_.L, j - 1));
    auto hi = j == m ? events_.end()
                     : std::lower_bound(events_.begin(), events_.end(), s_at(z, m, hyper_.L, j));
    n[j - 1] = static_cast<int>(hi - lo);
  }
  return n;
}

double ChangepointModel::log_likelihood(int m, const Vec& z) const {
  const auto n = counts(m, z);
  double l = 0.0;
  for (int j = 1; j <= m; ++j) {
    const double h = z[m - 1 + j - 1];
    const double len = s_at(z, m, hyper_.L, j) - s_at(z, m, hyper_.L, j - 1);
    if (hyper_.likelihood == ChangepointHyper::Likelihood::poisson) {
      l += n[j - 1] * std::log(h);
    } else {
      if (n[j - 1] == 0) return kNegInf;
      l += h * std::log(static_cast<double>(n[j - 1]));
    }
    l -= h * len;
  }
  return l;
}

double ChangepointModel::log_prior(int m, const Vec& z) const {
  const double L = hyper_.L;
  double l = m * std::log(hyper_.lambda) - std::lgamma(m + 1.0);
  // even order statistics of 2m-1 uniforms on (0, L)
  l += std::lgamma(2.0 * m) - (2.0 * m - 1.0) * std::log(L);
  for (int j = 1; j <= m; ++j) l += std::log(s_at(z, m, L, j) - s_at(z, m, L, j - 1));
  const double alpha = z[2 * m - 1], beta = z[2 * m];
  for (int j = 0; j < m; ++j) l += log_gamma_pdf(z[m - 1 + j], alpha, beta);
  l += log_gamma_pdf(alpha, hyper_.c, hyper_.d) + log_gamma_pdf(beta, hyper_.e, hyper_.f);
  return l;
}

double ChangepointModel::log_joint(int m, const Vec& z) const {
  if (!in_domain(m, z)) return kNegInf;
  const double ll = log_likelihood(m, z);
  if (ll == kNegInf) return kNegInf;
  return checked(log_prior(m, z) + ll, "change-point density");
}

Vec ChangepointModel::within_model_move(int m, const Vec& z0, Rng& rng) const {
  Vec z = z0;
  double lz = log_joint(m, z);
  auto try_move = [&](Vec y, double log_hastings) {
    const double ly = log_joint(m, y);
    const double l = ly == kNegInf ? kNegInf : ly - lz + log_hastings;
    if (rng.accept(l, "within-model move")) {
      z = std::move(y);
      lz = ly;
    }
  };
  for (int j = 0; j < m - 1; ++j) {
    Vec y = z;
    y[j] += hyper_.L * moves_.position_window * (2.0 * rng.uniform("position step") - 1.0);
    try_move(std::move(y), 0.0);
  }
  for (int j = m - 1; j < dim(m); ++j) {
    const double sd = j < 2 * m - 1 ? moves_.log_height_sd : moves_.log_hyper_sd;
    Vec y = z;
    const double step = sd * rng.normal("log step");
    y[j] = z[j] * std::exp(step);
    try_move(std::move(y), step);
  }
  return z;
}

Vec ChangepointModel::sample_match(int m, int m2, Rng& rng) const {
  if (m2 == m + 1) return {hyper_.L * rng.uniform("split position"), rng.uniform("split u")};
  if (m2 == m - 1) return {static_cast<double>(1 + rng.uniform_index(m2, "merge index"))};
  throw std::invalid_argument("only neighbouring models are matched");
}

double ChangepointModel::log_match_density(int m, int m2, const Vec& w) const {
  if (m2 == m + 1) {
    if (w.size() != 2 || !(w[0] > 0.0 && w[0] < hyper_.L) || !(w[1] > 0.0 && w[1] < 1.0))
      return kNegInf;
    return -std::log(hyper_.L);
  }
  if (m2 == m - 1) {
    if (w.size() != 1 || w[0] != std::floor(w[0]) || w[0] < 1 || w[0] > m2) return kNegInf;
    return -std::log(static_cast<double>(m2));
  }
  return kNegInf;
}

Mapped ChangepointModel::map(int m, int m2, const Vec& z, const Vec& w) const {
  const double L = hyper_.L;
  Mapped out;
  if (m2 == m + 1) {
    const double s = w[0], u = w[1];
    int j = 1;  // segment of s*
    while (j < m && z[j - 1] < s) ++j;
    const double a = s - s_at(z, m, L, j - 1), b = s_at(z, m, L, j) - s;
    const double h = z[m - 1 + j - 1];
    const double r = std::log((1.0 - u) / u);
    const double hm = std::exp(std::log(h) - b / (a + b) * r);
    const double hp = std::exp(std::log(h) + a / (a + b) * r);
    out.z.assign(z.begin(), z.begin() + (j - 1));
    out.z.push_back(s);
    out.z.insert(out.z.end(), z.begin() + (j - 1), z.begin() + (m - 1));
    for (int i = 1; i <= m; ++i) {
      if (i == j) {
        out.z.push_back(hm);
        out.z.push_back(hp);
      } else {
        out.z.push_back(z[m - 1 + i - 1]);
      }
    }
    out.z.push_back(z[2 * m - 1]);
    out.z.push_back(z[2 * m]);
    out.w = {static_cast<double>(j)};
    out.log_jacobian = 2.0 * std::log(hm + hp) - std::log(h);
    return out;
  }
  if (m2 == m - 1) {
    const int j = static_cast<int>(w[0]);
    const double s = z[j - 1];
    const double a = s - s_at(z, m, L, j - 1), b = s_at(z, m, L, j + 1) - s;
    const double hm = z[m - 1 + j - 1], hp = z[m - 1 + j];
    const double h = std::exp((a * std::log(hm) + b * std::log(hp)) / (a + b));
    for (int i = 0; i < m - 1; ++i)
      if (i != j - 1) out.z.push_back(z[i]);
    for (int i = 1; i <= m; ++i) {
      if (i == j) out.z.push_back(h);
      else if (i != j + 1) out.z.push_back(z[m - 1 + i - 1]);
    }
    out.z.push_back(z[2 * m - 1]);
    out.z.push_back(z[2 * m]);
    out.w = {s, hm / (hm + hp)};
    out.log_jacobian = std::log(h) - 2.0 * std::log(hm + hp);
    return out;
  }
  throw std::invalid_argument("only neighbouring models are matched");
}

Ext ChangepointModel::bridge_proposal(int m, int, const Ext& v, Rng& rng) const {
  Ext y = v;
  const std::size_t nz = v.z.size();
  const std::size_t i = rng.uniform_index(nz + v.w.size(), "bridge coordinate");
  const double e = rng.normal("bridge step");
  if (i < nz) {
    const int ii = static_cast<int>(i);
    const double sd = ii < m - 1      ? moves_.bridge_position_sd * hyper_.L
                      : ii < 2 * m - 1 ? moves_.bridge_height_sd
                                       : moves_.bridge_hyper_sd;
    y.z[i] += sd * e;
  } else if (i == nz) {
    y.w[0] += moves_.bridge_position_sd * hyper_.L * e;
  } else {
    y.w[1] += moves_.bridge_u_sd * e;
  }
  return y;
}

Vec ChangepointModel::initial_state(int m) const {
  Vec z;
  for (int j = 1; j < m; ++j) z.push_back(hyper_.L * j / m);
  const double rate = std::max(1.0, static_cast<double>(events_.size())) / hyper_.L;
  for (int j = 0; j < m; ++j) z.push_back(rate);
  z.push_back(1.0);
  z.push_back(1.0 / rate);
  return z;
}

std::vector<double> changepoint_synthetic(int n, double L, const std::vector<double>& breaks,
                                          const std::vector<double>& rates, Rng& rng) {
  if (rates.size() != breaks.size() + 1) throw std::invalid_argument("need one rate per segment");
  std::vector<double> edges{0.0};
  edges.insert(edges.end(), breaks.begin(), breaks.end());
  edges.push_back(L);
  std::vector<double> mass(rates.size());
  for (std::size_t j = 0; j < rates.size(); ++j) mass[j] = rates[j] * (edges[j + 1] - edges[j]);
  std::vector<double> y(n);
  for (auto& v : y) {
    const std::size_t j = rng.choose(mass, "segment");
    v = edges[j] + (edges[j + 1] - edges[j]) * rng.uniform("event time");
  }
  std::sort(y.begin(), y.end());
  return y;
}

std::vector<double> read_real_column(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<double> v;
  double x;
  while (in >> x) v.push_back(x);
  if (!in.eof()) throw std::runtime_error("malformed number in " + path);
  return v;
}

}  // namespace mhaar
