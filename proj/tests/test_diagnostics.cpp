#include <cmath>

#include "doctest.h"
#include "mhaar/diagnostics.hpp"
#include "mhaar/finite_pair.hpp"

using namespace mhaar;

TEST_CASE("dirichlet form two ways and trivial kernels") {
  FiniteKernelMatrix id{Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Constant(3, 1.0 / 3)};
  Eigen::VectorXd f(3);
  f << 1.0, -2.0, 0.5;
  CHECK(dirichlet_form(id, f) == 0.0);
  CHECK(right_spectral_gap(id) == doctest::Approx(0.0).scale(1.0));
  FiniteKernelMatrix rw{Eigen::MatrixXd::Constant(3, 3, 0.25), Eigen::VectorXd::Constant(3, 1.0 / 3)};
  rw.P.diagonal().setConstant(0.5);
  CHECK(detailed_balance_residual(rw) == 0.0);
  const FinitePair p = FinitePair::random(4, 3, 8);
  auto k = enumerate_kernel<int>(p.state_list(), p.log_pi_list(),
                                 [&](int x, Rng& r) { return mhaar_step(x, p, 2, r).state; });
  StreamRng rng(5, 5);
  for (int i = 0; i < 5; ++i) {
    Eigen::VectorXd g(4);
    for (int j = 0; j < 4; ++j) g(j) = rng.normal();
    CHECK(std::abs(dirichlet_form(k, g) - dirichlet_form_via_autocorrelation(k, g)) < 1e-10);
  }
}

TEST_CASE("spectral gap refuses irreversible input") {
  const FinitePair p = FinitePair::random(3, 3, 29);
  auto k = enumerate_kernel<int>(p.state_list(), p.log_pi_list(),
                                 [&](int x, Rng& r) { return naive_average_step(x, p, 2, r).state; });
  CHECK_THROWS(right_spectral_gap(k));
}

TEST_CASE("monotonicity in N on two fixtures") {
  for (auto [n, seed] : {std::pair{3, 101ull}, std::pair{4, 202ull}}) {
    const FinitePair p = FinitePair::random(n, 3, seed);
    auto mh = enumerate_kernel<int>(p.state_list(), p.log_pi_list(),
                                    [&](int x, Rng& r) { return mh_step(x, p, p, r).state; });
    std::vector<FiniteKernelMatrix> ks;
    for (int m = 1; m <= 3; ++m)
      ks.push_back(enumerate_kernel<int>(p.state_list(), p.log_pi_list(), [&](int x, Rng& r) {
        return mhaar_step(x, p, m, r).state;
      }));
    const double slack = 1e-12;
    CHECK(right_spectral_gap(ks[0]) <= right_spectral_gap(ks[1]) + slack);
    CHECK(right_spectral_gap(ks[1]) <= right_spectral_gap(ks[2]) + slack);
    CHECK(right_spectral_gap(ks[2]) <= right_spectral_gap(mh) + slack);
    StreamRng rng(seed, 1);
    for (int i = 0; i < 5; ++i) {
      Eigen::VectorXd f(n);
      for (int j = 0; j < n; ++j) f(j) = rng.normal();
      CHECK(dirichlet_form(ks[0], f) <= dirichlet_form(ks[1], f) + slack);
      CHECK(dirichlet_form(ks[1], f) <= dirichlet_form(ks[2], f) + slack);
      CHECK(dirichlet_form(ks[2], f) <= dirichlet_form(mh, f) + slack);
    }
  }
}

TEST_CASE("IAC estimator") {
  StreamRng rng(314, 0);
  const int n = 200000;
  std::vector<double> iid(n), ar(n), alt(n);
  double z = 0.0;
  for (int i = 0; i < n; ++i) {
    iid[i] = rng.normal();
    z = 0.5 * z + std::sqrt(0.75) * rng.normal();
    ar[i] = z;
    alt[i] = (i % 2 ? 1.0 : -1.0) + 0.1 * rng.normal();
  }
  auto e = iac_estimate(iid);
  CHECK(e.ci_lo <= 1.0);
  CHECK(e.ci_hi >= 1.0);
  CHECK(std::abs(e.iac - 1.0) < 0.1);
  auto a = iac_estimate(ar);
  CHECK(a.ci_lo <= 3.0);
  CHECK(a.ci_hi >= 3.0);
  CHECK(std::abs(a.iac - 3.0) < 0.3);
  CHECK(iac_estimate(alt).iac < 1.0);
  CHECK_THROWS(iac_estimate(std::vector<double>(5000, 2.0)));
  CHECK_THROWS(iac_estimate(std::vector<double>(10, 0.0)));
}
