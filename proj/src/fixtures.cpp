#include "mhaar/fixtures.hpp"

#include <algorithm>
#include <cmath>

#include "mhaar/rng.hpp"

namespace mhaar {

IsingGridFixture::IsingGridFixture(int rows, int cols)
    : grid{0.2, 0.5, 0.9}, log_eta{std::log(1.0), std::log(2.0), std::log(1.5)}, lattice(rows, cols) {
  data.assign(lattice.sites(), 1);
  data.back() = -1;
  model = std::make_unique<IsingModel>(lattice, data, IsingModel::Sampler::exact, 0,
                                       [this](double th) { return log_prior(th); });
  q = std::make_unique<GridProposal>(grid);
}

double IsingGridFixture::log_prior(double theta) const {
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid[i] == theta) return log_eta[i];
  return kNegInf;
}

std::vector<double> IsingGridFixture::log_posterior() const {
  std::vector<double> l;
  for (double th : grid)
    l.push_back(log_prior(th) + model->log_g(th, data) - model->exact()->log_partition(th));
  return l;
}

double IsingGridFixture::exact_log_ratio(double th, double th2) const {
  const double lq = q->log_density(th2, th) - q->log_density(th, th2);
  auto lpost = [&](double t) {
    return log_prior(t) + model->log_g(t, data) - model->exact()->log_partition(t);
  };
  return lq + lpost(th2) - lpost(th);
}

FiniteLatentFixture::FiniteLatentFixture(int T, Refresh refresh, std::uint64_t seed,
                                         int n_theta, int n_z)
    : T_(T), refresh_(refresh) {
  StreamRng r(seed, 0);
  log_pi_.assign(n_theta, std::vector<double>(n_z));
  for (auto& row : log_pi_)
    for (auto& v : row) v = std::log(0.2 + r.uniform());
}

double FiniteLatentFixture::log_f(int t, const int& th, const int& th2, const int& z) const {
  const double a = static_cast<double>(T_ + 1 - t) / (T_ + 1);
  const double b = static_cast<double>(t) / (T_ + 1);
  double l = 0.0;
  if (a > 0.0) l += a * log_pi_[th][z];
  if (b > 0.0) l += b * log_pi_[th2][z];
  return l;
}

int FiniteLatentFixture::metropolis(int z, const std::function<double(int)>& lf,
                                    Rng& rng) const {
  const int n = n_z();
  std::vector<double> w(n, 1.0);
  w[z] = 0.0;
  const int y = static_cast<int>(rng.choose(w, "latent move"));
  return rng.accept(lf(y) - lf(z), "latent accept") ? y : z;
}

int FiniteLatentFixture::kernel(int t, const int& th, const int& th2, const int& z,
                                Rng& rng) const {
  return metropolis(z, [&](int v) { return log_f(t, th, th2, v); }, rng);
}

int FiniteLatentFixture::refresh(const int& th, const int& z, Rng& rng) const {
  if (refresh_ == Refresh::identity) return z;
  if (refresh_ == Refresh::exact) return static_cast<int>(rng.categorical_log(log_pi_[th], "latent draw"));
  return metropolis(z, [&](int v) { return log_pi_[th][v]; }, rng);
}

int FiniteLatentFixture::sample(const int& from, Rng& rng) const {
  std::vector<double> w(n_theta(), 1.0);
  w[from] = 0.0;
  return static_cast<int>(rng.choose(w, "theta move"));
}

double FiniteLatentFixture::log_density(const int& from, const int& to) const {
  if (from == to || to < 0 || to >= n_theta()) return kNegInf;
  return -std::log(static_cast<double>(n_theta() - 1));
}

double FiniteLatentFixture::log_marginal(int th) const { return log_sum_exp(log_pi_[th]); }

std::vector<LatentState<int, int>> FiniteLatentFixture::states() const {
  std::vector<LatentState<int, int>> s;
  for (int th = 0; th < n_theta(); ++th)
    for (int z = 0; z < n_z(); ++z) s.push_back({th, z});
  return s;
}

std::vector<double> FiniteLatentFixture::log_target() const {
  std::vector<double> l;
  for (auto& s : states()) l.push_back(log_pi_[s.theta][s.z]);
  return l;
}

namespace {

std::size_t bits_of(const Vec& z) {
  std::size_t b = 0;
  for (std::size_t i = 0; i < z.size(); ++i)
    if (z[i] != 0.0) b |= std::size_t{1} << i;
  return b;
}

}  // namespace

FiniteTransdimFixture::FiniteTransdimFixture(std::uint64_t seed, int max_m) : max_m_(max_m) {
  StreamRng r(seed, 0);
  for (int m = 1; m <= max_m; ++m) {
    std::vector<double> row(std::size_t{1} << m);
    for (auto& v : row) v = std::log(0.2 + r.uniform());
    table_.push_back(row);
  }
}

bool FiniteTransdimFixture::in_domain(int m, const Vec& z) const {
  if (m < 1 || m > max_m_ || static_cast<int>(z.size()) != m) return false;
  return std::all_of(z.begin(), z.end(), [](double v) { return v == 0.0 || v == 1.0; });
}

double FiniteTransdimFixture::log_joint(int m, const Vec& z) const {
  if (!in_domain(m, z)) return kNegInf;
  return table_[m - 1][bits_of(z)];
}

Vec FiniteTransdimFixture::within_model_move(int m, const Vec& z, Rng& rng) const {
  Vec y = z;
  const std::size_t i = rng.uniform_index(m, "coordinate");
  y[i] = 1.0 - y[i];
  return rng.accept(log_joint(m, y) - log_joint(m, z)) ? y : z;
}

Vec FiniteTransdimFixture::sample_match(int m, int m2, Rng& rng) const {
  if (m2 == m + 1) {
    const double w[2] = {0.3, 0.7};
    return {static_cast<double>(rng.choose(w, "match"))};
  }
  return {};
}

double FiniteTransdimFixture::log_match_density(int m, int m2, const Vec& w) const {
  if (m2 == m + 1) {
    if (w.size() != 1) return kNegInf;
    if (w[0] == 0.0) return std::log(0.3);
    if (w[0] == 1.0) return std::log(0.7);
    return kNegInf;
  }
  if (m2 == m - 1) return w.empty() ? 0.0 : kNegInf;
  return kNegInf;
}

Mapped FiniteTransdimFixture::map(int m, int m2, const Vec& z, const Vec& w) const {
  Mapped out;
  if (m2 == m + 1) {
    out.z = z;
    out.z.push_back(w[0] == z[0] ? 0.0 : 1.0);
  } else {
    out.z.assign(z.begin(), z.end() - 1);
    out.w = {z.back() == z[0] ? 0.0 : 1.0};
  }
  return out;
}

Ext FiniteTransdimFixture::bridge_proposal(int, int, const Ext& v, Rng& rng) const {
  Ext y = v;
  const std::size_t i = rng.uniform_index(v.z.size() + v.w.size(), "bridge coordinate");
  double& c = i < v.z.size() ? y.z[i] : y.w[i - v.z.size()];
  c = 1.0 - c;
  return y;
}

std::vector<TdState> FiniteTransdimFixture::states() const {
  std::vector<TdState> s;
  for (int m = 1; m <= max_m_; ++m)
    for (std::size_t b = 0; b < (std::size_t{1} << m); ++b) {
      Vec z(m);
      for (int i = 0; i < m; ++i) z[i] = (b >> i & 1) ? 1.0 : 0.0;
      s.push_back({m, z});
    }
  return s;
}

std::vector<double> FiniteTransdimFixture::log_target() const {
  std::vector<double> l;
  for (auto& s : states()) l.push_back(log_joint(s.theta, s.z));
  return l;
}

double FiniteTransdimFixture::log_model_mass(int m) const { return log_sum_exp(table_[m - 1]); }

double NestedGaussianFixture::log_joint(int m, const Vec& z) const {
  if (!in_domain(m, z)) return kNegInf;
  if (m == 1) return log_normal_pdf(z[0], 0.0, 1.0);
  return log_r_ + log_normal_pdf(z[0], 0.0, 1.0) + log_normal_pdf(z[1], 0.0, s_);
}

Vec NestedGaussianFixture::within_model_move(int m, const Vec& z, Rng& rng) const {
  Vec y = z;
  for (int i = 0; i < m; ++i) y[i] += rng.normal("rw");
  return rng.accept(log_joint(m, y) - log_joint(m, z)) ? y : z;
}

Vec NestedGaussianFixture::sample_match(int m, int m2, Rng& rng) const {
  if (m == 1 && m2 == 2) return {rng.normal("match")};
  return {};
}

double NestedGaussianFixture::log_match_density(int m, int m2, const Vec& w) const {
  if (m == 1 && m2 == 2) return w.size() == 1 ? log_normal_pdf(w[0], 0.0, 1.0) : kNegInf;
  if (m == 2 && m2 == 1) return w.empty() ? 0.0 : kNegInf;
  return kNegInf;
}

Mapped NestedGaussianFixture::map(int m, int, const Vec& z, const Vec& w) const {
  if (m == 1) return {{z[0], s_ * w[0]}, {}, std::log(s_)};
  return {{z[0]}, {z[1] / s_}, -std::log(s_)};
}

Ext NestedGaussianFixture::bridge_proposal(int, int, const Ext& v, Rng& rng) const {
  Ext y = v;
  y.z[0] += 0.7 * rng.normal("bridge");
  y.w[0] += 0.7 * rng.normal("bridge");
  return y;
}

TwoStateHmmFixture::TwoStateHmmFixture(std::vector<int> y, Vec grid, Vec prior)
    : y_(std::move(y)), grid_(std::move(grid)), prior_(std::move(prior)) {
  if (grid_.size() != prior_.size()) throw std::invalid_argument("one prior mass per grid point");
}

double TwoStateHmmFixture::log_prior(const Vec& th) const {
  for (std::size_t i = 0; i < grid_.size(); ++i)
    if (th[0] == grid_[i]) return std::log(prior_[i]);
  return kNegInf;
}

double TwoStateHmmFixture::log_mu(const Vec&, double z) const {
  return std::log(z == 0.0 ? 0.6 : 0.4);
}

double TwoStateHmmFixture::log_f(const Vec& th, int, double prev, double z) const {
  return std::log(prev == z ? th[0] : 1.0 - th[0]);
}

double TwoStateHmmFixture::log_g(const Vec&, int t, double z) const {
  return std::log(static_cast<int>(z) == y_[t] ? 0.75 : 0.25);
}

double TwoStateHmmFixture::sample_mu(const Vec&, Rng& rng) const {
  const double w[2] = {0.6, 0.4};
  return static_cast<double>(rng.choose(w, "initial state"));
}

double TwoStateHmmFixture::sample_f(const Vec& th, int, double prev, Rng& rng) const {
  const double stay = th[0];
  const double w[2] = {prev == 0.0 ? stay : 1.0 - stay, prev == 0.0 ? 1.0 - stay : stay};
  return static_cast<double>(rng.choose(w, "state move"));
}

std::vector<Path> TwoStateHmmFixture::paths() const {
  const int T = length();
  std::vector<Path> out;
  for (std::size_t b = 0; b < (std::size_t{1} << T); ++b) {
    Path p(T);
    for (int t = 0; t < T; ++t) p[t] = (b >> t & 1) ? 1.0 : 0.0;
    out.push_back(p);
  }
  return out;
}

std::vector<SsmState> TwoStateHmmFixture::states() const {
  std::vector<SsmState> s;
  for (double g : grid_)
    for (auto& p : paths()) s.push_back({{g}, p});
  return s;
}

std::vector<double> TwoStateHmmFixture::log_target() const {
  std::vector<double> l;
  for (auto& s : states()) l.push_back(log_joint(s.theta, s.z));
  return l;
}

double TwoStateHmmFixture::log_likelihood(const Vec& th) const {
  std::vector<double> l;
  for (auto& p : paths()) l.push_back(log_p(th, p));
  return log_sum_exp(l);
}

Vec VecGridProposal::sample(const Vec& from, Rng& rng) const {
  std::vector<double> w(g_.size());
  for (std::size_t i = 0; i < g_.size(); ++i) w[i] = g_[i] == from[0] ? 0.0 : 1.0;
  return {g_[rng.choose(w, "grid move")]};
}

double VecGridProposal::log_density(const Vec& from, const Vec& to) const {
  if (from[0] == to[0]) return kNegInf;
  bool found = false;
  for (double g : g_) found = found || g == to[0];
  return found ? -std::log(static_cast<double>(g_.size() - 1)) : kNegInf;
}

double GaussianLatentFixture::log_joint(double th, double z) const {
  return log_normal_pdf(th, 0.0, 3.0) + log_normal_pdf(z, th, 1.0) + log_normal_pdf(y_, z, 1.0);
}

double GaussianLatentFixture::log_marginal(double th) const {
  return log_normal_pdf(th, 0.0, 3.0) + log_normal_pdf(y_, th, std::sqrt(2.0));
}

double GaussianLatentFixture::log_f(int t, const double& th, const double& th2,
                                    const double& z) const {
  const double b = static_cast<double>(t) / (T_ + 1);
  if (t == 0) return log_joint(th, z);
  if (t == T_ + 1) return log_joint(th2, z);
  return (1 - b) * log_joint(th, z) + b * log_joint(th2, z);
}

double GaussianLatentFixture::kernel(int t, const double& th, const double& th2, const double&,
                                     Rng& rng) const {
  // f_t in z is N(z; mix, 1) N(y; z, 1) up to a constant
  const double b = static_cast<double>(t) / (T_ + 1);
  const double mix = (1 - b) * th + b * th2;
  return 0.5 * (mix + y_) + std::sqrt(0.5) * rng.normal("bridge draw");
}

double GaussianLatentFixture::refresh(const double& th, const double&, Rng& rng) const {
  return 0.5 * (th + y_) + std::sqrt(0.5) * rng.normal("refresh draw");
}

double GaussianLatentFixture::sample(const double& from, Rng& rng) const {
  return from + step_ * rng.normal("theta step");
}

double GaussianLatentFixture::log_density(const double& from, const double& to) const {
  return log_normal_pdf(to, from, step_);
}

double LinearGaussianSsm::log_prior(const Vec& th) const {
  if (th.size() != 2 || !(th[0] > 0) || !(th[1] > 0)) return kNegInf;
  return log_normal_pdf(th[0], 1.0, 1.0) + log_normal_pdf(th[1], 1.0, 1.0);
}

double LinearGaussianSsm::log_mu(const Vec&, double z) const { return log_normal_pdf(z, 0.0, 1.0); }

double LinearGaussianSsm::log_f(const Vec& th, int, double prev, double z) const {
  return log_normal_pdf(z, a_ * prev, th[0]);
}

double LinearGaussianSsm::log_g(const Vec& th, int t, double z) const {
  return log_normal_pdf(y_[t], z, th[1]);
}

double LinearGaussianSsm::sample_mu(const Vec&, Rng& rng) const { return rng.normal("initial state"); }

double LinearGaussianSsm::sample_f(const Vec& th, int, double prev, Rng& rng) const {
  return a_ * prev + th[0] * rng.normal("transition");
}

namespace {

struct KalmanPass {
  Vec m, P;  // filtered moments
  double log_lik = 0.0;
};

KalmanPass kalman(const Vec& y, double a, double sv, double sw) {
  KalmanPass k;
  double mp = 0.0, pp = 1.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (t > 0) {
      mp = a * k.m.back();
      pp = a * a * k.P.back() + sv * sv;
    }
    const double s = pp + sw * sw;
    k.log_lik += log_normal_pdf(y[t], mp, std::sqrt(s));
    const double gain = pp / s;
    k.m.push_back(mp + gain * (y[t] - mp));
    k.P.push_back((1 - gain) * pp);
  }
  return k;
}

}  // namespace

double LinearGaussianSsm::log_likelihood(const Vec& th) const {
  return kalman(y_, a_, th[0], th[1]).log_lik;
}

Path LinearGaussianSsm::sample_smoothing(const Vec& th, Rng& rng) const {
  const auto k = kalman(y_, a_, th[0], th[1]);
  const int T = length();
  Path z(T);
  z[T - 1] = k.m[T - 1] + std::sqrt(k.P[T - 1]) * rng.normal("smoothing draw");
  for (int t = T - 2; t >= 0; --t) {
    const double j = k.P[t] * a_ / (a_ * a_ * k.P[t] + th[0] * th[0]);
    const double mean = k.m[t] + j * (z[t + 1] - a_ * k.m[t]);
    const double var = k.P[t] - j * a_ * k.P[t];
    z[t] = mean + std::sqrt(var) * rng.normal("smoothing draw");
  }
  return z;
}

}  // namespace mhaar
