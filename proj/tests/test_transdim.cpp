#include <Eigen/Dense>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mhaar/changepoint.hpp"
#include "mhaar/diagnostics.hpp"
#include "mhaar/fixtures.hpp"
#include "mhaar/transdim.hpp"

using namespace mhaar;
using Fx = FiniteTransdimFixture;

namespace {

using BetaFn = std::function<double(int, int)>;

FiniteKernelMatrix matrix_of(const Fx& f, const std::function<TdState(const TdState&, Rng&)>& s) {
  return enumerate_kernel<TdState>(f.states(), f.log_target(), s);
}

// Plain reversible jump: one matching draw, Green's acceptance ratio.
Step<TdState> plain_rj(const TdState& x, const Fx& f, const Proposal<int>& q, Rng& rng) {
  const int m2 = q.sample(x.theta, rng);
  const Vec w = f.sample_match(x.theta, m2, rng);
  const double l = green_log_ratio(x.theta, m2, x.z, w, f, f, q);
  Step<TdState> s{x, {}};
  if (rng.accept(l)) s.state = {m2, f.map(x.theta, m2, x.z, w).z};
  return s;
}

struct RecordingProposal final : Proposal<int> {
  explicit RecordingProposal(const Proposal<int>& q) : q(q) {}
  int sample(const int& m, Rng& rng) const override { return last = q.sample(m, rng); }
  double log_density(const int& a, const int& b) const override { return q.log_density(a, b); }
  const Proposal<int>& q;
  mutable int last = 0;
};

double poisson_loglik(const std::vector<double>& y, const std::vector<double>& edges,
                      const std::vector<double>& h) {
  double l = 0.0;
  for (std::size_t j = 0; j < h.size(); ++j) {
    int n = 0;
    for (double v : y)
      if (v >= edges[j] && (v < edges[j + 1] || (j + 1 == h.size() && v <= edges[j + 1]))) ++n;
    l += n * std::log(h[j]) - h[j] * (edges[j + 1] - edges[j]);
  }
  return l;
}

}  // namespace

TEST_CASE("finite fixture maps are mutually inverse") {
  Fx f(3);
  for (auto& s : f.states())
    for (int m2 : {s.theta - 1, s.theta + 1}) {
      if (m2 < 1 || m2 > 3) continue;
      for (auto& [p, w] : enumerate_outcomes<Vec>([&](Rng& r) { return f.sample_match(s.theta, m2, r); })) {
        (void)p;
        CHECK(round_trip_error(f, s.theta, m2, s.z, w) == 0.0);
      }
    }
}

TEST_CASE("multiple jump kernels are reversible on a finite model space") {
  Fx f(5);
  NeighbourModelProposal q(1, 3);
  const BetaFn betas[] = {half_beta, up_down_beta};
  for (const auto& beta : betas)
    for (int n = 1; n <= 3; ++n) {
      auto k = matrix_of(f, [&](const TdState& x, Rng& r) {
        return rmj_step(x, f, f, q, n, beta, r).state;
      });
      CHECK(max_row_sum_error(k) < 1e-12);
      CHECK(detailed_balance_residual(k) < 1e-10);
      for (int T : {0, 1}) {
        if (T == 1 && n == 3) continue;
        TransdimBridge b(f, f, T);
        auto ka = matrix_of(f, [&](const TdState& x, Rng& r) {
          return ais_rj_step(x, b, q, n, beta, r).state;
        });
        CHECK(max_row_sum_error(ka) < 1e-12);
        CHECK(detailed_balance_residual(ka) < 1e-10);
        if (T == 0) CHECK((ka.P - k.P).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
}

TEST_CASE("one matching draw with even branch weights is plain reversible jump") {
  Fx f(8);
  NeighbourModelProposal q(1, 3);
  auto a = matrix_of(f, [&](const TdState& x, Rng& r) {
    return rmj_step(x, f, f, q, 1, half_beta, r).state;
  });
  auto b = matrix_of(f, [&](const TdState& x, Rng& r) { return plain_rj(x, f, q, r).state; });
  CHECK((a.P - b.P).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(detailed_balance_residual(b) < 1e-12);
}

TEST_CASE("bridge endpoints and intermediate densities are consistent under the map") {
  for (double s : {1.0, 2.5}) {
    NestedGaussianFixture g(s);
    NeighbourModelProposal q(1, 2);
    TransdimBridge b(g, g, 2);
    StreamRng r(4, 0);
    for (int i = 0; i < 200; ++i) {
      const Vec z{r.normal()};
      const Vec w{r.normal()};
      CHECK(std::abs(green_log_ratio(1, 2, z, w, g, g, q)) < 1e-12);
      const Ext v{z, w};
      const Mapped y = g.map(1, 2, z, w);
      for (int t = 0; t <= 3; ++t) {
        const double lf = b.log_f(t, 1, 2, v);
        CHECK(lf == doctest::Approx(b.log_f(3 - t, 2, 1, y.ext()) + y.log_jacobian).epsilon(1e-12));
      }
      // Endpoints equal up to normalisation, so any bridged path has ratio one.
      std::vector<Ext> path{v, b.kernel(1, 1, 2, v, r)};
      path.push_back(b.kernel(2, 1, 2, path.back(), r));
      CHECK(std::abs(rj_log_ratio(1, 2, path, b, q)) < 1e-12);
      CHECK(round_trip_error(g, 1, 2, z, w) < 1e-14);
    }
  }
}

TEST_CASE("annealed jumps recover model masses in a nested Gaussian") {
  NestedGaussianFixture g(2.0, 3.0);
  NeighbourModelProposal q(1, 2);
  TransdimBridge b(g, g, 2);
  StreamRng r(21, 0);
  TdState x{1, {0.0}};
  std::vector<double> ind;
  for (int i = 0; i < 40000; ++i) {
    x = ais_rj_step(x, b, q, 2, half_beta, r).state;
    x.z = g.within_model_move(x.theta, x.z, r);
    ind.push_back(x.theta == 2 ? 1.0 : 0.0);
  }
  const auto e = iac_estimate(ind, 20);
  CHECK(std::abs(e.mean - 0.75) < 4.0 * e.mcse);
}

TEST_CASE("up-down branch weights never run the conditioned branch on an upward move") {
  Fx f(2);
  NeighbourModelProposal q0(1, 3);
  RecordingProposal q(q0);
  StreamRng r(17, 0);
  TdState x{1, {0.0}};
  long up = 0, down = 0, bad = 0;
  for (int i = 0; i < 100000; ++i) {
    const int m = x.theta;
    auto s = rmj_step(x, f, f, q, 3, up_down_beta, r);
    const bool is_up = q.last > m;
    (is_up ? up : down)++;
    if ((s.report.branch == Branch::q2) == is_up) ++bad;
    x = s.state;
    x.z = f.within_model_move(x.theta, x.z, r);
  }
  CHECK(bad == 0);
  CHECK(up > 10000);
  CHECK(down > 10000);
}

TEST_CASE("change-point split and merge are inverse with the stated Jacobian") {
  ChangepointModel cp({0.1, 0.35, 0.8}, ChangepointHyper{});
  StreamRng r(3, 0);
  for (int m = 1; m <= 4; ++m)
    for (int rep = 0; rep < 20; ++rep) {
      Vec z;
      for (int j = 1; j < m; ++j) z.push_back(r.uniform());
      std::sort(z.begin(), z.end());
      for (int j = 0; j < m + 2; ++j) z.push_back(0.5 + 3.0 * r.uniform());
      REQUIRE(cp.in_domain(m, z));
      const Vec w = cp.sample_match(m, m + 1, r);
      CHECK(round_trip_error(cp, m, m + 1, z, w) < 1e-12);
      const Mapped y = cp.map(m, m + 1, z, w);
      CHECK(cp.in_domain(m + 1, y.z));

      // Continuous coordinates (z, s*, u) -> z'.
      const int d = static_cast<int>(z.size()) + 2;
      auto full = [&](const Eigen::VectorXd& v) {
        Vec zz(v.data(), v.data() + d - 2);
        const Mapped o = cp.map(m, m + 1, zz, {v(d - 2), v(d - 1)});
        return Eigen::Map<const Eigen::VectorXd>(o.z.data(), d).eval();
      };
      Eigen::VectorXd v(d);
      for (int i = 0; i < d - 2; ++i) v(i) = z[i];
      v(d - 2) = w[0];
      v(d - 1) = w[1];
      Eigen::MatrixXd J(d, d);
      const double h = 1e-6;
      for (int i = 0; i < d; ++i) {
        Eigen::VectorXd a = v, b = v;
        a(i) += h;
        b(i) -= h;
        J.col(i) = (full(a) - full(b)) / (2 * h);
      }
      CHECK(std::log(std::abs(J.determinant())) == doctest::Approx(y.log_jacobian).epsilon(1e-6));

      // Merge direction from the split image.
      CHECK(round_trip_error(cp, m + 1, m, y.z, y.w) < 1e-12);
    }
}

TEST_CASE("change-point split ratio matches the textbook expression") {
  const std::vector<double> ev{0.1, 0.35, 0.8};
  ChangepointHyper hy;
  hy.lambda = 2.5;
  ChangepointModel cp(ev, hy);
  NeighbourModelProposal q(1, hy.m_max);
  const double L = hy.L;
  StreamRng r(9, 0);
  for (int m : {1, 2}) {
    for (int rep = 0; rep < 10; ++rep) {
      Vec z = m == 1 ? Vec{1.7, 1.3, 0.8} : Vec{0.45, 2.0, 3.5, 1.3, 0.8};
      const double alpha = z[2 * m - 1], beta = z[2 * m];
      const Vec w{L * r.uniform(), r.uniform()};
      const Mapped y = cp.map(m, m + 1, z, w);
      // Locate the split.
      std::vector<double> e0{0.0};
      for (int j = 0; j < m - 1; ++j) e0.push_back(z[j]);
      e0.push_back(L);
      int j = 1;
      while (e0[j] < w[0]) ++j;
      const double a = w[0] - e0[j - 1], b = e0[j] - w[0];
      const double h = z[m - 1 + j - 1];
      const double hm = y.z[m + j - 1], hp = y.z[m + j];
      CHECK(hp / hm == doctest::Approx((1 - w[1]) / w[1]).epsilon(1e-12));
      CHECK(a * std::log(hm) + b * std::log(hp) == doctest::Approx((a + b) * std::log(h)).epsilon(1e-12));

      std::vector<double> h0(z.begin() + (m - 1), z.begin() + (2 * m - 1));
      std::vector<double> e1 = e0;
      e1.insert(e1.begin() + j, w[0]);
      std::vector<double> h1 = h0;
      h1[j - 1] = hm;
      h1.insert(h1.begin() + j, hp);
      double want = poisson_loglik(ev, e1, h1) - poisson_loglik(ev, e0, h0);
      want += std::log(hy.lambda / (m + 1));
      want += std::log((2.0 * m + 1) * (2.0 * m) / (L * L) * a * b / (a + b));
      want += alpha * std::log(beta) - std::lgamma(alpha) + (alpha - 1) * std::log(hm * hp / h) -
              beta * (hm + hp - h);
      const double q_up = std::exp(q.log_density(m, m + 1));
      const double q_down = std::exp(q.log_density(m + 1, m));
      want += std::log((q_down / m) / (q_up / L));
      want += std::log((hm + hp) * (hm + hp) / h);
      CHECK(green_log_ratio(m, m + 1, z, w, cp, cp, q) == doctest::Approx(want).epsilon(1e-10));
      CHECK(green_log_ratio(m + 1, m, y.z, y.w, cp, cp, q) == doctest::Approx(-want).epsilon(1e-10));
    }
  }
}

TEST_CASE("change-point likelihood in closed form") {
  ChangepointHyper hy;
  hy.L = 2.0;
  ChangepointModel cp({0.1, 0.5, 1.9}, hy);
  CHECK(cp.log_likelihood(1, {1.5, 1.0, 1.0}) == doctest::Approx(3 * std::log(1.5) - 3.0));
  ChangepointModel empty({}, hy);
  CHECK(empty.log_likelihood(1, {1.5, 1.0, 1.0}) == doctest::Approx(-3.0));
  CHECK(empty.log_likelihood(2, {0.4, 1.5, 0.5, 1.0, 1.0}) == doctest::Approx(-0.6 - 0.8));

  hy.likelihood = ChangepointHyper::Likelihood::displayed;
  ChangepointModel shown({0.1, 0.5, 0.9}, hy);
  CHECK(shown.log_joint(2, {1.0, 1.5, 0.5, 1.0, 1.0}) == kNegInf);
  CHECK(shown.log_likelihood(1, {1.5, 1.0, 1.0}) == doctest::Approx(1.5 * std::log(3.0) - 3.0));
}

TEST_CASE("change-point posterior over a single break peaks near the true break") {
  StreamRng r(12, 0);
  const auto ev = changepoint_synthetic(400, 1.0, {0.4}, {1.0, 4.0}, r);
  ChangepointModel cp(ev, ChangepointHyper{});
  const double n = static_cast<double>(ev.size());
  double best = kNegInf, arg = 0.0;
  for (int i = 1; i < 200; ++i) {
    const double s = i / 200.0;
    const double l = cp.log_joint(2, {s, n * 0.2 / 0.4, n * 0.8 / 0.6, 1.0, 1.0});
    if (l > best) best = l, arg = s;
  }
  CHECK(std::abs(arg - 0.4) < 0.03);
}

TEST_CASE("change-point within-model move and annealed jumps keep the domain") {
  StreamRng r(5, 0);
  const auto ev = changepoint_synthetic(60, 1.0, {0.5}, {1.0, 3.0}, r);
  ChangepointModel cp(ev, ChangepointHyper{});
  NeighbourModelProposal q(1, cp.max_model());
  TransdimBridge b(cp, cp, 2);
  TdState x{1, cp.initial_state(1)};
  REQUIRE(std::isfinite(cp.log_joint(1, x.z)));
  int visited_max = 1;
  for (int i = 0; i < 3000; ++i) {
    x = ais_rj_step(x, b, q, 2, up_down_beta, r).state;
    x.z = cp.within_model_move(x.theta, x.z, r);
    REQUIRE(std::isfinite(cp.log_joint(x.theta, x.z)));
    visited_max = std::max(visited_max, x.theta);
  }
  CHECK(visited_max >= 2);
}
