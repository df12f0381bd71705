#include "mhaar/oracle.hpp"

#include <cmath>

#include "mhaar/diagnostics.hpp"
#include "mhaar/finite_pair.hpp"
#include "mhaar/fixtures.hpp"
#include "mhaar/smc_latent.hpp"

namespace mhaar {

namespace {

constexpr double kReversibleTol = 1e-8;
constexpr double kControlTol = 1e-3;
constexpr double kExactTol = 1e-10;
constexpr double kSeTol = 3.0;
constexpr double kOrderSlack = 1e-12;

using LS = LatentState<int, int>;

template <class X, class F>
OracleCheck balance(const std::string& name, const std::vector<X>& states,
                    const std::vector<double>& lp, F&& step) {
  const auto k = enumerate_kernel<X>(states, lp, step);
  return {"reversibility", name, std::max(detailed_balance_residual(k), max_row_sum_error(k)),
          kReversibleTol, false};
}

double log_gap(double e, double log_r) {
  if (e <= 0.0) return kInf;
  return std::abs(std::log(e) - log_r);
}

}  // namespace

std::vector<OracleCheck> reversibility_checks() {
  std::vector<OracleCheck> out;
  const FinitePair f = FinitePair::random(3, 3, 9);
  const auto fs = f.state_list();
  const auto fl = f.log_pi_list();
  out.push_back(balance<int>("pmr", fs, fl, [&](int x, Rng& r) { return pmr_step(x, f, r).state; }));
  for (int n = 1; n <= 3; ++n)
    out.push_back(balance<int>("mhaar N=" + std::to_string(n), fs, fl,
                               [&](int x, Rng& r) { return mhaar_step(x, f, n, r).state; }));
  out.push_back(balance<int>("beta-weighted N=2", fs, fl, [&](int x, Rng& r) {
    return mhaar_step_beta(x, f, 2, [](int a, int b) { return a < b ? 0.8 : 0.35; }, r).state;
  }));
  FiniteAuxMetropolis km(f);
  out.push_back(balance<int>("dependent-auxiliary N=3", fs, fl, [&](int x, Rng& r) {
    return dependent_mhaar_step(x, f, km, 3, r).state;
  }));

  IsingGridFixture ig(2, 1);
  const auto ilp = ig.log_posterior();
  for (int T : {0, 1}) {
    GeometricBridge<Spins> br(*ig.model, T);
    AisExchangePair<Spins> pair(*ig.model, br, *ig.q);
    out.push_back(balance<double>("exchange T=" + std::to_string(T) + " N=2", ig.grid, ilp,
                                  [&](double th, Rng& r) { return exchange_mhaar_step(th, pair, 2, r).state; }));
    out.push_back(balance<double>("exchange reduced T=" + std::to_string(T) + " N=2", ig.grid, ilp,
                                  [&](double th, Rng& r) {
                                    return exchange_mhaar_reduced_step(th, *ig.model, br, *ig.q, 2, r).state;
                                  }));
  }

  for (int T : {0, 1}) {
    FiniteLatentFixture lf(T, FiniteLatentFixture::Refresh::metropolis, 21);
    out.push_back(balance<LS>("latent T=" + std::to_string(T) + " N=2", lf.states(), lf.log_target(),
                              [&](const LS& x, Rng& r) { return mhaar_latent_step(x, lf, lf, 2, r).state; }));
    SameSpaceBridge<int, int> sb(lf);
    out.push_back(balance<LS>("latent beta-weighted T=" + std::to_string(T) + " N=2", lf.states(),
                              lf.log_target(), [&](const LS& x, Rng& r) {
                                return mhaar_latent_step_bridged(
                                           x, sb, lf, 2, [](int a, int b) { return a < b ? 0.3 : 0.65; }, r)
                                    .state;
                              }));
  }

  FiniteTransdimFixture tf(8);
  NeighbourModelProposal mq(1, 3);
  out.push_back(balance<TdState>("rmj N=2", tf.states(), tf.log_target(), [&](const TdState& x, Rng& r) {
    return rmj_step(x, tf, tf, mq, 2, up_down_beta, r).state;
  }));
  TransdimBridge tb(tf, tf, 1);
  out.push_back(balance<TdState>("ais-rj T=1 N=2", tf.states(), tf.log_target(), [&](const TdState& x, Rng& r) {
    return ais_rj_step(x, tb, mq, 2, half_beta, r).state;
  }));

  TwoStateHmmFixture h({1, 0});
  VecGridProposal hq(h.grid());
  out.push_back(balance<SsmState>("csmc-rb M=2 T=2", h.states(), h.log_target(), [&](const SsmState& x, Rng& r) {
    return mhaar_csmc_rb_step(x, h, hq, 2, midpoint, midpoint, r).state;
  }));
  out.push_back(balance<SsmState>("csmc-sub M=2 T=2 N=2", h.states(), h.log_target(), [&](const SsmState& x, Rng& r) {
    return mhaar_csmc_sub_step(x, h, hq, 2, 2, midpoint, midpoint, r).state;
  }));
  TwoStateHmmFixture h1({1});
  SsmLatentBridge hb(h1, 2, midpoint, 1);
  out.push_back(balance<SsmState>("latent csmc-bridge M=2 N=2", h1.states(), h1.log_target(),
                                  [&](const SsmState& x, Rng& r) { return mhaar_latent_step(x, hb, hq, 2, r).state; }));

  FiniteLatentFixture sf(1, FiniteLatentFixture::Refresh::metropolis, 5);
  out.push_back(balance<LS>("smc-substitute T=1 N=2", sf.states(), sf.log_target(), [&](const LS& x, Rng& r) {
    return mhaar_smc_latent_step(x, sf, sf, 2, r).state;
  }));

  const FinitePair g = FinitePair::random(3, 3, 29);
  const auto k = enumerate_kernel<int>(g.state_list(), g.log_pi_list(), [&](int x, Rng& r) {
    return naive_average_step(x, g, 2, r).state;
  });
  out.push_back({"reversibility", "naive averaging N=2 (control)", detailed_balance_residual(k), kControlTol, true});
  return out;
}

std::vector<OracleCheck> unbiasedness_checks() {
  std::vector<OracleCheck> out;
  auto add = [&](const std::string& name, double worst) {
    out.push_back({"unbiasedness", name, worst, kExactTol, false});
  };

  double w = 0.0;
  for (std::uint64_t seed : {3u, 9u}) {
    const FinitePair f = FinitePair::random(3, 3, seed);
    for (int x = 0; x < 3; ++x)
      for (int y = 0; y < 3; ++y) {
        if (x == y) continue;
        const double e = enumerate_expectation([&](Rng& r) {
          return std::exp(f.log_ratio(x, y, f.sample_u_forward(x, y, r)));
        });
        w = std::max(w, log_gap(e, std::log(f.exact_ratio(x, y))));
      }
  }
  add("pmr ratio", w);

  w = 0.0;
  for (auto [rows, cols] : {std::pair{2, 1}, std::pair{2, 2}}) {
    IsingGridFixture ig(rows, cols);
    for (int T : {0, 1, 2}) {
      GeometricBridge<Spins> br(*ig.model, T);
      AisExchangePair<Spins> pair(*ig.model, br, *ig.q);
      for (double th : ig.grid)
        for (double th2 : ig.grid) {
          if (th == th2) continue;
          const double e = enumerate_expectation([&](Rng& r) {
            return std::exp(pair.log_ratio(th, th2, pair.sample_u_forward(th, th2, r)));
          });
          w = std::max(w, log_gap(e, ig.exact_log_ratio(th, th2)));
        }
    }
  }
  add("ais exchange ratio", w);

  w = 0.0;
  double wc = 0.0;
  for (int T : {0, 1, 2})
    for (auto rk : {FiniteLatentFixture::Refresh::identity, FiniteLatentFixture::Refresh::metropolis,
                    FiniteLatentFixture::Refresh::exact}) {
      FiniteLatentFixture lf(T, rk, 13, 3, 3);
      for (int th = 0; th < 3; ++th)
        for (int th2 = 0; th2 < 3; ++th2) {
          if (th == th2) continue;
          std::vector<double> lp(lf.n_z());
          for (int z = 0; z < lf.n_z(); ++z) lp[z] = lf.log_joint(th, z);
          const double lr = lf.log_marginal(th2) - lf.log_marginal(th);
          const double e = enumerate_expectation([&](Rng& r) {
            const int z = static_cast<int>(r.categorical_log(lp));
            const auto u = detail::anneal_from(th, th2, lf.refresh(th, z, r), lf, r);
            return std::exp(ais_latent_log_ratio(th, th2, u, lf, lf));
          });
          w = std::max(w, log_gap(e, lr));
          if (T == 0) continue;
          for (int n : {1, 2}) {
            const double c = enumerate_expectation([&](Rng& r) {
              const int z = static_cast<int>(r.categorical_log(lp));
              return std::exp(annealed_smc(th, th2, z, n, lf, r).log_c());
            });
            wc = std::max(wc, log_gap(c, lr));
          }
        }
    }
  add("latent ais ratio", w);
  add("smc annealing constant", wc);

  double wrb = 0.0, wrec = 0.0, wsub = 0.0, wpf = 0.0;
  for (const std::vector<int>& y : {std::vector<int>{1, 0}, std::vector<int>{0, 1, 1}}) {
    TwoStateHmmFixture h(y);
    VecGridProposal q(h.grid());
    for (double p : h.grid()) {
      const double e = enumerate_expectation([&](Rng& r) {
        return std::exp(particle_filter(h, {p}, 2, r).log_c());
      });
      wpf = std::max(wpf, log_gap(e, h.log_likelihood({p})));
    }
    for (auto [th, th2] : {std::pair<Vec, Vec>{{0.3}, {0.8}}, {{0.8}, {0.3}}}) {
      const double lr = q.log_density(th2, th) - q.log_density(th, th2) + h.log_prior(th2) +
                        h.log_likelihood(th2) - h.log_prior(th) - h.log_likelihood(th);
      for (const Vec& tht : {midpoint(th, th2), th}) {
        double e1 = 0.0, e2 = 0.0, e3 = 0.0;
        for (const auto& z : h.paths()) {
          const double pz = std::exp(h.log_p(th, z) - h.log_likelihood(th));
          e1 += pz * enumerate_expectation([&](Rng& r) {
            return std::exp(rb_ratio_log(csmc(h, tht, 2, z, r), h, q, th, th2, tht, z));
          });
          e2 += pz * enumerate_expectation([&](Rng& r) {
            const auto ps = csmc(h, tht, 2, z, r);
            const Path z2 = backward_sample(ps, h, tht, r);
            return std::exp(-rb_ratio_log(ps, h, q, th2, th, tht, z2));
          });
          e3 += pz * enumerate_expectation([&](Rng& r) {
            const auto ps = csmc(h, tht, 2, z, r);
            double s = 0.0;
            for (int i = 0; i < 2; ++i)
              s += std::exp(path_log_ratio(h, q, th, th2, tht, z, backward_sample(ps, h, tht, r)));
            return s / 2;
          });
        }
        wrb = std::max(wrb, log_gap(e1, lr));
        wrec = std::max(wrec, log_gap(e2, lr));
        wsub = std::max(wsub, log_gap(e3, lr));
      }
    }
  }
  add("all-paths csmc ratio", wrb);
  add("all-paths csmc reciprocal", wrec);
  add("backward-path csmc ratio N=2", wsub);
  add("particle filter likelihood", wpf);
  return out;
}

std::vector<OracleCheck> unbiasedness_mc_checks(std::uint64_t seed, long replicates) {
  std::vector<OracleCheck> out;
  // draw(rng) returns estimate / target
  auto run = [&](const std::string& name, std::uint64_t stream, auto&& draw) {
    StreamRng r(seed, stream);
    double s = 0.0, s2 = 0.0;
    for (long i = 0; i < replicates; ++i) {
      const double v = draw(r);
      s += v;
      s2 += v * v;
    }
    const double mean = s / replicates;
    const double se = std::sqrt(std::max(0.0, s2 / replicates - mean * mean) / replicates);
    out.push_back({"unbiasedness-mc", name, se > 0 ? std::abs(mean - 1.0) / se : kInf, kSeTol, false});
  };

  {
    Lattice lat(3, 3);
    Spins y(9, 1);
    y[4] = -1;
    IsingModel m(lat, y, IsingModel::Sampler::exact, 0, [](double t) { return t >= 0 ? 0.0 : kNegInf; });
    ReflectedNormalWalk q(0.2);
    GeometricBridge<Spins> br(m, 3);
    AisExchangePair<Spins> pair(m, br, q);
    const double th = 0.3, th2 = 0.5;
    const double lr = q.log_density(th2, th) - q.log_density(th, th2) + (th2 - th) * bond_sum(lat, y) -
                      m.exact()->log_partition(th2) + m.exact()->log_partition(th);
    run("ais exchange ratio, 3x3 Ising with Wolff bridge", 1, [&](Rng& r) {
      return std::exp(pair.log_ratio(th, th2, pair.sample_u_forward(th, th2, r)) - lr);
    });
  }
  {
    GaussianLatentFixture g(0.7, 2);
    const double th = 0.2, th2 = 0.9;
    const double lr = g.log_marginal(th2) - g.log_marginal(th);
    run("latent ais ratio, Gaussian latent", 2, [&](Rng& r) {
      const double z = g.refresh(th, 0.0, r);
      const auto u = detail::anneal_from(th, th2, g.refresh(th, z, r), g, r);
      return std::exp(ais_latent_log_ratio(th, th2, u, g, g) - lr);
    });
    GaussianLatentFixture g3(0.7, 3);
    run("smc annealing constant N=4, Gaussian latent", 3, [&](Rng& r) {
      const double z = g3.refresh(th, 0.0, r);
      return std::exp(annealed_smc(th, th2, z, 4, g3, r).log_c() - lr);
    });
  }
  {
    StreamRng dr(seed, 10);
    Vec y(5);
    double z = dr.normal();
    for (int t = 0; t < 5; ++t) {
      if (t > 0) z = 0.8 * z + 0.7 * dr.normal();
      y[t] = z + 0.5 * dr.normal();
    }
    LinearGaussianSsm lg(y);
    NormalWalk q({0.15, 0.08});
    const Vec th{0.7, 0.5}, th2{0.8, 0.45};
    const Vec tht = midpoint(th, th2);
    const double lr = q.log_density(th2, th) - q.log_density(th, th2) + lg.log_prior(th2) +
                      lg.log_likelihood(th2) - lg.log_prior(th) - lg.log_likelihood(th);
    run("all-paths csmc ratio, linear Gaussian SSM", 4, [&](Rng& r) {
      const Path zz = lg.sample_smoothing(th, r);
      return std::exp(rb_ratio_log(csmc(lg, tht, 4, zz, r), lg, q, th, th2, tht, zz) - lr);
    });
    run("all-paths csmc reciprocal, linear Gaussian SSM", 5, [&](Rng& r) {
      const Path zz = lg.sample_smoothing(th, r);
      const auto ps = csmc(lg, tht, 4, zz, r);
      const Path z2 = backward_sample(ps, lg, tht, r);
      return std::exp(-rb_ratio_log(ps, lg, q, th2, th, tht, z2) - lr);
    });
    run("backward-path csmc ratio N=3, linear Gaussian SSM", 6, [&](Rng& r) {
      const Path zz = lg.sample_smoothing(th, r);
      const auto ps = csmc(lg, tht, 4, zz, r);
      double s = 0.0;
      for (int i = 0; i < 3; ++i)
        s += std::exp(path_log_ratio(lg, q, th, th2, tht, zz, backward_sample(ps, lg, tht, r)) - lr);
      return s / 3;
    });
    run("particle filter likelihood M=4, linear Gaussian SSM", 7, [&](Rng& r) {
      return std::exp(particle_filter(lg, th, 4, r).log_c() - lg.log_likelihood(th));
    });
  }
  return out;
}

std::vector<OracleCheck> monotonicity_checks(std::uint64_t seed) {
  std::vector<OracleCheck> out;
  auto order = [&](const std::string& name, const std::vector<FiniteKernelMatrix>& ks) {
    // ks = {N=1, N=2, N=3, marginal}
    double gap_v = 0.0, form_v = 0.0;
    for (std::size_t i = 0; i + 1 < ks.size(); ++i)
      gap_v = std::max(gap_v, right_spectral_gap(ks[i]) - right_spectral_gap(ks[i + 1]));
    StreamRng r(seed, 20 + out.size());
    const int n = static_cast<int>(ks[0].size());
    for (int j = 0; j < 5; ++j) {
      Eigen::VectorXd f(n);
      for (int i = 0; i < n; ++i) f(i) = r.normal();
      for (std::size_t i = 0; i + 1 < ks.size(); ++i)
        form_v = std::max(form_v, dirichlet_form(ks[i], f) - dirichlet_form(ks[i + 1], f));
    }
    out.push_back({"monotonicity", name + ": spectral gap", gap_v, kOrderSlack, false});
    out.push_back({"monotonicity", name + ": Dirichlet forms", form_v, kOrderSlack, false});
  };
  for (auto [n, s] : {std::pair{3, 101ull}, std::pair{4, 202ull}}) {
    const FinitePair p = FinitePair::random(n, 3, s);
    std::vector<FiniteKernelMatrix> ks;
    for (int m = 1; m <= 3; ++m)
      ks.push_back(enumerate_kernel<int>(p.state_list(), p.log_pi_list(),
                                         [&](int x, Rng& r) { return mhaar_step(x, p, m, r).state; }));
    ks.push_back(enumerate_kernel<int>(p.state_list(), p.log_pi_list(),
                                       [&](int x, Rng& r) { return mh_step(x, p, p, r).state; }));
    order("finite pair, " + std::to_string(n) + " states", ks);
  }
  {
    IsingGridFixture ig(2, 1);
    const auto lp = ig.log_posterior();
    GeometricBridge<Spins> br(*ig.model, 1);
    AisExchangePair<Spins> pair(*ig.model, br, *ig.q);
    std::vector<FiniteKernelMatrix> ks;
    for (int m = 1; m <= 3; ++m)
      ks.push_back(enumerate_kernel<double>(ig.grid, lp, [&](double th, Rng& r) {
        return exchange_mhaar_step(th, pair, m, r).state;
      }));
    ks.push_back(enumerate_kernel<double>(ig.grid, lp, [&](double th, Rng& r) {
      const double th2 = ig.q->sample(th, r);
      return r.accept(ig.exact_log_ratio(th, th2)) ? th2 : th;
    }));
    order("2x1 Ising exchange, T=1", ks);
  }
  return out;
}

}  // namespace mhaar
