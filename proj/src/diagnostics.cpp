#include "mhaar/diagnostics.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

namespace mhaar {

Eigen::VectorXd normalise_log_weights(const std::vector<double>& log_w) {
  const double lse = log_sum_exp(log_w);
  Eigen::VectorXd p(log_w.size());
  for (std::size_t i = 0; i < log_w.size(); ++i) p(i) = std::exp(log_w[i] - lse);
  return p;
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P) {
  const auto n = P.rows();
  Eigen::MatrixXd a(n + 1, n);
  a.topRows(n) = P.transpose() - Eigen::MatrixXd::Identity(n, n);
  a.row(n).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  b(n) = 1.0;
  return a.colPivHouseholderQr().solve(b);
}

double detailed_balance_residual(const FiniteKernelMatrix& k) {
  double r = 0.0;
  const auto n = k.P.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      r = std::max(r, std::abs(k.pi(i) * k.P(i, j) - k.pi(j) * k.P(j, i)));
  return r;
}

double stationarity_residual(const FiniteKernelMatrix& k) {
  const Eigen::VectorXd d = k.P.transpose() * k.pi - k.pi;
  return d.cwiseAbs().maxCoeff();
}

double max_row_sum_error(const FiniteKernelMatrix& k) {
  return (k.P.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

double dirichlet_form(const FiniteKernelMatrix& k, const Eigen::VectorXd& f) {
  double e = 0.0;
  const auto n = k.P.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = f(i) - f(j);
      e += k.pi(i) * k.P(i, j) * d * d;
    }
  return 0.5 * e;
}

double dirichlet_form_via_autocorrelation(const FiniteKernelMatrix& k,
                                          const Eigen::VectorXd& f) {
  const Eigen::VectorXd pf = k.P * f;
  return (k.pi.array() * f.array() * f.array()).sum() -
         (k.pi.array() * f.array() * pf.array()).sum();
}

double variance_under(const FiniteKernelMatrix& k, const Eigen::VectorXd& f) {
  const double m = k.pi.dot(f);
  return (k.pi.array() * (f.array() - m).square()).sum();
}

double right_spectral_gap(const FiniteKernelMatrix& k) {
  if (detailed_balance_residual(k) > 1e-9)
    throw std::invalid_argument("spectral gap requires a reversible kernel");
  const Eigen::VectorXd s = k.pi.cwiseSqrt();
  const Eigen::VectorXd si = s.cwiseInverse();
  Eigen::MatrixXd a = s.asDiagonal() * k.P * si.asDiagonal();
  a = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const Eigen::VectorXd ev = es.eigenvalues();  // ascending
  if (ev.size() < 2) return 1.0;
  return 1.0 - ev(ev.size() - 2);
}

namespace {

double ims_unchecked(const double* x, std::size_t n) {
  const double mean = std::accumulate(x, x + n, 0.0) / static_cast<double>(n);
  auto acov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - mean) * (x[i + lag] - mean);
    return s / static_cast<double>(n);
  };
  const double g0 = acov(0);
  if (!(g0 > 0.0)) throw std::invalid_argument("IAC undefined for a constant series");
  double sum = 0.0;
  double prev = kInf;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double big = acov(2 * k) + acov(2 * k + 1);
    if (big <= 0.0) break;
    big = std::min(big, prev);
    sum += big;
    prev = big;
  }
  return std::max(0.0, (2.0 * sum - g0) / g0);
}

}  // namespace

double geyer_ims_iac(const std::vector<double>& series) {
  if (series.size() < 1000) throw std::invalid_argument("IAC needs at least 1000 samples");
  return ims_unchecked(series.data(), series.size());
}

IacEstimate iac_estimate(const std::vector<double>& series, int batches) {
  if (batches < 8) throw std::invalid_argument("IAC interval needs at least 8 batches");
  IacEstimate e;
  e.iac = geyer_ims_iac(series);
  e.batches = batches;
  const std::size_t n = series.size();
  e.mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double v : series) var += (v - e.mean) * (v - e.mean);
  var /= static_cast<double>(n);
  e.mcse = std::sqrt(e.iac * var / static_cast<double>(n));
  const std::size_t len = n / static_cast<std::size_t>(batches);
  std::vector<double> est;
  for (int b = 0; b < batches; ++b) {
    const double* p = series.data() + b * len;
    bool constant = std::all_of(p, p + len, [&](double v) { return v == p[0]; });
    // A batch stuck at one value has no usable autocovariance; count it as
    // the length of the batch, the largest value the estimator can express.
    est.push_back(constant ? static_cast<double>(len) : ims_unchecked(p, len));
  }
  double m = std::accumulate(est.begin(), est.end(), 0.0) / batches;
  double sd = 0.0;
  for (double v : est) sd += (v - m) * (v - m);
  sd = std::sqrt(sd / (batches - 1));
  boost::math::students_t t(batches - 1);
  const double half = boost::math::quantile(boost::math::complement(t, 0.025)) * sd /
                      std::sqrt(static_cast<double>(batches));
  e.ci_lo = e.iac - half;
  e.ci_hi = e.iac + half;
  return e;
}

}  // namespace mhaar
