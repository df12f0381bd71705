#include <cmath>
#include <map>

#include "doctest.h"
#include "mhaar/diagnostics.hpp"
#include "mhaar/finite_pair.hpp"
#include "mhaar/kernels.hpp"
#include "mhaar/toy.hpp"

using namespace mhaar;

namespace {

struct TwoStateTarget : Target<int> {
  double log_density(const int& x) const override { return std::log(x == 0 ? 1.0 : 2.0); }
};
struct FlipProposal : Proposal<int> {
  int sample(const int& x, Rng&) const override { return 1 - x; }
  double log_density(const int& x, const int& y) const override {
    return x != y ? 0.0 : kNegInf;
  }
};

FiniteKernelMatrix matrix_of(const FinitePair& f, auto step) {
  return enumerate_kernel<int>(f.state_list(), f.log_pi_list(), step);
}

}  // namespace

TEST_CASE("philox known-answer vectors") {
  auto r = philox4x32_10({0, 0, 0, 0}, {0, 0});
  CHECK(r == Philox4x32Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  r = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                    {0xffffffffu, 0xffffffffu});
  CHECK(r == Philox4x32Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  r = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                    {0xa4093822u, 0x299f31d0u});
  CHECK(r == Philox4x32Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams reproduce and separate") {
  StreamRng a(7, 3), b(7, 3), c(7, 4);
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    CHECK(x > 0.0);
    CHECK(x < 1.0);
  }
  CHECK(a.uniform() != c.uniform());
  auto k1 = a.split(2);
  auto k2 = b.split(2);
  CHECK(k1[0]->uniform() == k2[0]->uniform());
  CHECK(k1[1]->uniform() != k2[0]->uniform());
}

TEST_CASE("log_mean_exp") {
  const double z[3] = {0, 0, 0};
  CHECK(log_mean_exp(z) == doctest::Approx(0.0));
  const double two[2] = {std::log(2.0), std::log(4.0)};
  CHECK(log_mean_exp(two) == doctest::Approx(std::log(3.0)).epsilon(1e-15));
  const double half[2] = {kNegInf, 0.0};
  CHECK(log_mean_exp(half) == doctest::Approx(-std::log(2.0)));
  const double none[2] = {kNegInf, kNegInf};
  CHECK(log_mean_exp(none) == kNegInf);
  const double bad[2] = {0.0, std::nan("")};
  CHECK_THROWS_AS(log_mean_exp(bad), InvariantError);
  const double big[2] = {1000.0, 1000.0};
  CHECK(log_mean_exp(big) == doctest::Approx(1000.0));
}

TEST_CASE("categorical sampling") {
  StreamRng rng(11, 0);
  const double single[3] = {kNegInf, 0.5, kNegInf};
  for (int i = 0; i < 100; ++i) CHECK(categorical_sample(single, rng) == 1);
  const double none[2] = {kNegInf, kNegInf};
  CHECK_THROWS(categorical_sample(none, rng));
  const double lw[3] = {std::log(1.0), std::log(2.0), std::log(3.0)};
  const int n = 100000;
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < n; ++i) ++counts[categorical_sample(lw, rng)];
  const double p[3] = {1.0 / 6, 1.0 / 3, 0.5};
  for (int j = 0; j < 3; ++j)
    CHECK(std::abs(counts[j] / double(n) - p[j]) < 3 * std::sqrt(p[j] * (1 - p[j]) / n));
  const double eq[4] = {0, 0, 0, 0};
  int c4[4] = {0, 0, 0, 0};
  for (int i = 0; i < n; ++i) ++c4[categorical_sample(eq, rng)];
  for (int j = 0; j < 4; ++j)
    CHECK(std::abs(c4[j] / double(n) - 0.25) < 3 * std::sqrt(0.25 * 0.75 / n));
}

TEST_CASE("path enumerator") {
  // Two fair coins and a three-way choice: 12 paths summing to one.
  auto outs = enumerate_outcomes<int>([](Rng& r) {
    const int a = r.bernoulli(0.5) ? 1 : 0;
    const int b = r.bernoulli(0.25) ? 1 : 0;
    const double w[3] = {1, 0, 3};
    return a * 100 + b * 10 + static_cast<int>(r.choose(w));
  });
  CHECK(outs.size() == 8);
  double total = 0.0;
  std::map<int, double> m;
  for (auto& [p, v] : outs) total += p, m[v] += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(m[112] == doctest::Approx(0.5 * 0.25 * 0.75));
  PathEnumerator e;
  e.begin();
  CHECK_THROWS_AS(e.uniform("continuous thing"), NotEnumerable);
}

TEST_CASE("mh step on two states") {
  TwoStateTarget t;
  FlipProposal q;
  auto k = enumerate_kernel<int>({0, 1}, {0.0, std::log(2.0)},
                                 [&](int x, Rng& r) { return mh_step(x, t, q, r).state; });
  CHECK(k.P(0, 1) == doctest::Approx(1.0));
  CHECK(k.P(1, 0) == doctest::Approx(0.5));
  const Eigen::VectorXd s = stationary_distribution(k.P);
  CHECK(s(0) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(s(1) == doctest::Approx(2.0 / 3).epsilon(1e-12));
}

TEST_CASE("toy pmr flip acceptance") {
  ToyPair toy({2.0, 0.0});
  auto k = enumerate_kernel<int>({-1, 1}, {0.0, 0.0},
                                 [&](int x, Rng& r) { return pmr_step(x, toy, r).state; });
  CHECK(k.P(0, 1) == doctest::Approx(2.0 / 3).epsilon(1e-14));
}

TEST_CASE("finite pair identities") {
  const FinitePair f = FinitePair::random(3, 3, 5);
  StreamRng rng(1, 1);
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y) {
      if (x == y) continue;
      for (int u = 0; u < 3; ++u)
        CHECK(f.log_ratio(x, y, u) + f.log_ratio(y, x, f.involution(u)) ==
              doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
      const double e = enumerate_expectation([&](Rng& r) {
        return std::exp(f.log_ratio(x, y, f.sample_u_forward(x, y, r)));
      });
      CHECK(std::abs(e - f.exact_ratio(x, y)) < 1e-12);
    }
}

TEST_CASE("kernels are reversible on finite pairs") {
  for (std::uint64_t seed : {3u, 9u}) {
    const FinitePair f = FinitePair::random(3, 3, seed);
    const FiniteKernelMatrix pmr =
        matrix_of(f, [&](int x, Rng& r) { return pmr_step(x, f, r).state; });
    CHECK(detailed_balance_residual(pmr) < 1e-12);
    CHECK(max_row_sum_error(pmr) < 1e-12);
    for (int n = 1; n <= 3; ++n) {
      auto k = matrix_of(f, [&](int x, Rng& r) { return mhaar_step(x, f, n, r).state; });
      CHECK(detailed_balance_residual(k) < 1e-12);
      if (n == 1) CHECK((k.P - pmr.P).cwiseAbs().maxCoeff() < 1e-12);
      auto kb = matrix_of(f, [&](int x, Rng& r) {
        return mhaar_step_beta(x, f, n, [](int, int) { return 0.3; }, r).state;
      });
      CHECK(detailed_balance_residual(kb) < 1e-12);
      auto ka = matrix_of(f, [&](int x, Rng& r) {
        return mhaar_step_beta(x, f, n, [](int a, int b) { return a < b ? 0.8 : 0.35; }, r)
            .state;
      });
      CHECK(detailed_balance_residual(ka) < 1e-12);
    }
  }
}

TEST_CASE("beta one half matches plain averaging") {
  const FinitePair f = FinitePair::random(3, 2, 21);
  auto a = matrix_of(f, [&](int x, Rng& r) { return mhaar_step(x, f, 2, r).state; });
  auto b = matrix_of(f, [&](int x, Rng& r) {
    return mhaar_step_beta(x, f, 2, [](int, int) { return 0.5; }, r).state;
  });
  CHECK((a.P - b.P).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("dependent auxiliary chain") {
  const FinitePair f = FinitePair::random(3, 3, 13);
  FiniteAuxMetropolis km(f);
  FiniteAuxRefresh kr(f);
  IdentityInner ki;
  auto pmr = matrix_of(f, [&](int x, Rng& r) { return pmr_step(x, f, r).state; });
  for (int n = 1; n <= 3; ++n) {
    auto k = matrix_of(f, [&](int x, Rng& r) { return dependent_mhaar_step(x, f, km, n, r).state; });
    CHECK(detailed_balance_residual(k) < 1e-12);
    auto ident = matrix_of(f, [&](int x, Rng& r) { return dependent_mhaar_step(x, f, ki, n, r).state; });
    CHECK((ident.P - pmr.P).cwiseAbs().maxCoeff() < 1e-12);
    auto refresh = matrix_of(f, [&](int x, Rng& r) { return dependent_mhaar_step(x, f, kr, n, r).state; });
    auto iid = matrix_of(f, [&](int x, Rng& r) { return mhaar_step(x, f, n, r).state; });
    CHECK((refresh.P - iid.P).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("dependent chain needs the random slot") {
  // Pinning the conditioned draw to the first of three slots breaks
  // reversibility; with two slots the average is symmetric anyway.
  const FinitePair f = FinitePair::random(3, 3, 13);
  FiniteAuxMetropolis km(f);
  auto broken = matrix_of(f, [&](int x, Rng& r) {
    const int y = f.sample_q(x, r);
    const bool first = r.bernoulli(0.5);
    std::vector<int> us;
    std::vector<double> lr;
    if (first) {
      us.push_back(f.sample_u_forward(x, y, r));
      for (int i = 1; i < 3; ++i) us.push_back(km.sample(x, y, us.back(), r));
      for (int u : us) lr.push_back(f.log_ratio(x, y, u));
      return r.accept(log_mean_exp(lr)) ? y : x;
    }
    us.push_back(f.sample_u_backward(x, y, r));
    for (int i = 1; i < 3; ++i) us.push_back(km.sample(y, x, us.back(), r));
    for (int u : us) lr.push_back(f.log_ratio(y, x, u));
    return r.accept(-log_mean_exp(lr)) ? y : x;
  });
  CHECK(detailed_balance_residual(broken) > 1e-6);
}

TEST_CASE("non-reversible lifted kernel keeps pi x uniform") {
  const FinitePair f = FinitePair::random(3, 3, 17);
  std::vector<Lifted<int>> states;
  std::vector<double> lp;
  for (int a = 1; a <= 2; ++a)
    for (int x = 0; x < 3; ++x) {
      states.push_back({x, a});
      lp.push_back(f.log_density(x));
    }
  for (int n = 1; n <= 2; ++n) {
    auto k = enumerate_kernel<Lifted<int>>(states, lp, [&](const Lifted<int>& s, Rng& r) {
      return nonrev_mhaar_step(s, f, n, r).state;
    });
    const Eigen::VectorXd st = stationary_distribution(k.P);
    CHECK((st - k.pi).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(max_row_sum_error(k) < 1e-12);
  }
  // accept keeps the direction, reject flips it
  StreamRng rng(3, 3);
  Lifted<int> s{0, 1};
  for (int i = 0; i < 2000; ++i) {
    auto st = nonrev_mhaar_step(s, f, 2, rng);
    if (st.report.accepted) CHECK(st.state.a == s.a);
    else CHECK(st.state.a == 3 - s.a);
    s = st.state;
  }
}

TEST_CASE("naive averaging is not reversible") {
  const FinitePair f = FinitePair::random(3, 3, 29);
  auto k = matrix_of(f, [&](int x, Rng& r) { return naive_average_step(x, f, 2, r).state; });
  CHECK(detailed_balance_residual(k) > 1e-3);
}

TEST_CASE("enumeration order does not matter") {
  const FinitePair f = FinitePair::random(3, 3, 31);
  auto step = [&](int x, Rng& r) { return mhaar_step(x, f, 2, r).state; };
  auto a = enumerate_kernel<int>(f.state_list(), f.log_pi_list(), step, false);
  auto b = enumerate_kernel<int>(f.state_list(), f.log_pi_list(), step, true);
  CHECK((a.P - b.P).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("NaN ratio is a hard failure") {
  struct NanPair : ProposalPair<int, int> {
    int sample_q(const int& x, Rng&) const override { return 1 - x; }
    int sample_u_forward(const int&, const int&, Rng&) const override { return 0; }
    int involution(const int& u) const override { return u; }
    double log_ratio(const int&, const int&, const int&) const override { return std::nan(""); }
  } p;
  StreamRng rng(1, 2);
  CHECK_THROWS_AS(pmr_step(0, p, rng), InvariantError);
  CHECK_THROWS_AS(mhaar_step(0, p, 2, rng), InvariantError);
}

TEST_CASE("thread count does not change a chain") {
  const FinitePair f = FinitePair::random(4, 3, 41);
  auto run = [&](int threads) {
    set_thread_count(threads);
    StreamRng rng(99, 0);
    int x = 0;
    std::vector<int> path;
    for (int i = 0; i < 500; ++i) path.push_back(x = mhaar_step(x, f, 8, rng).state);
    set_thread_count(1);
    return path;
  };
  CHECK(run(1) == run(4));
}

TEST_CASE("batched categorical draws agree with single draws") {
  const std::vector<double> w{0.0, 0.3, 0.0, 1.2, 0.5, 0.0};
  StreamRng a(41, 2), b(41, 2);
  std::vector<std::size_t> out(5000);
  a.choose_many(w, out);
  for (std::size_t o : out) CHECK(o == b.choose(w));
  std::vector<std::size_t> e(2);
  auto outs = enumerate_outcomes<std::vector<std::size_t>>([&](Rng& r) {
    r.choose_many(std::vector<double>{1.0, 3.0}, e);
    return e;
  });
  CHECK(outs.size() == 4);
  for (auto& [p, v] : outs) CHECK(p == doctest::Approx((v[0] ? 0.75 : 0.25) * (v[1] ? 0.75 : 0.25)));
}
