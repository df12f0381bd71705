// End-to-end acceptance run: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "mhaar/experiments.hpp"
#include "mhaar/oracle.hpp"
#include "mhaar/parallel.hpp"
#include "mhaar/toy.hpp"

using namespace mhaar;

namespace {

// tolerances
constexpr double kGammaTol = 0.02;
constexpr double kExactTol = 1e-12;
constexpr double kFlipSigmas = 4.0;
constexpr double kMeanSigmas = 3.0;
constexpr long kMcReplicates = 10000000;

enum class Verdict { pass, fail, inconclusive };

struct Result {
  Verdict verdict = Verdict::pass;
  std::string detail;
  void fail(const std::string& why) {
    verdict = Verdict::fail;
    note(why);
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

ExperimentOutput run(const std::string& yaml, std::uint64_t seed, bool dump = false) {
  return run_experiment(YAML::Load(yaml), RunOptions{seed, dump});
}

int col(const CsvTable& t, const std::string& name) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) throw std::runtime_error("no column " + name);
  return static_cast<int>(it - t.header.begin());
}

double num(const std::string& s) { return s == "nan" ? NAN : std::stod(s); }

// First row whose columns match every (name, value) pair.
std::map<std::string, double> row(const CsvTable& t, const std::map<std::string, std::string>& key) {
  for (const auto& r : t.rows) {
    bool ok = true;
    for (const auto& [k, v] : key) ok = ok && r[col(t, k)] == v;
    if (!ok) continue;
    std::map<std::string, double> m;
    for (std::size_t i = 0; i < t.header.size(); ++i) {
      try {
        m[t.header[i]] = num(r[i]);
      } catch (...) {
        m[t.header[i]] = NAN;
      }
    }
    return m;
  }
  throw std::runtime_error("no matching row");
}

// ---- criterion 1 -----------------------------------------------------------

// Flip probability by summing over every ratio-estimate vector in both
// branches: branch 1 draws all N estimates from {a w.p. 1/(1+a), 1/a},
// branch 2 draws the first from the reversed law.
double toy_flip_enumerated(double a, double theta, int n) {
  const double pa = 1.0 / (1.0 + a);
  double total = 0.0;
  for (int branch = 0; branch < 2; ++branch)
    for (int mask = 0; mask < (1 << n); ++mask) {
      double p = 1.0, sum = 0.0;
      for (int i = 0; i < n; ++i) {
        const bool hi = mask >> i & 1;
        const double ph = branch == 1 && i == 0 ? 1.0 - pa : pa;
        p *= hi ? ph : 1.0 - ph;
        sum += hi ? a : 1.0 / a;
      }
      const double r = sum / n;
      total += 0.5 * p * std::min(1.0, branch == 0 ? r : 1.0 / r);
    }
  return (1.0 - theta) * total;
}

Result criterion1() {
  Result res;
  const auto out = run(R"(
experiment: toy-gamma
master_seed: 101
model: {a: [2, 5, 10]}
kernel: {N_max: 1000, N: [1, 2, 3, 10, 100]}
run: {iterations: 100000}
)",
                       101);
  const std::map<std::string, double> target{{"2", 0.65}, {"5", 0.35}, {"10", 0.20}};
  for (const auto& [a, g] : target) {
    const double got = row(out.tables.at("gamma.csv"), {{"a", a}, {"N", "1000"}})["gamma"];
    res.note("gamma(1000; a=" + a + ")=" + fmt("%.4f", got));
    if (!(std::abs(got - g) <= kGammaTol)) res.fail("gamma off target for a=" + a);
  }
  double worst = 0.0;
  for (double a : {2.0, 5.0, 10.0, 0.4})
    for (double th : {0.0, 0.3})
      for (int n = 1; n <= 3; ++n)
        worst = std::max(worst, std::abs(pflip_exact({a, th}, n) - toy_flip_enumerated(a, th, n)));
  res.note(fmt("max |closed form - enumeration|=%.2e", worst));
  if (!(worst <= kExactTol)) res.fail("closed form disagrees with enumeration");
  double worst_z = 0.0;
  for (const auto& r : out.tables.at("flip_mc.csv").rows) {
    const double a = num(r[0]);
    const int n = std::stoi(r[1]);
    const double ref = n <= 3 ? toy_flip_enumerated(a, 0.0, n) : num(r[2]);
    const double z = std::abs(num(r[3]) - ref) / num(r[4]);
    worst_z = std::max(worst_z, z);
  }
  res.note(fmt("max MC z=%.2f over 1e5 steps", worst_z));
  if (!(worst_z <= kFlipSigmas)) res.fail("Monte Carlo flip frequency outside 4 sigma");
  return res;
}

// ---- criteria 2-4 ----------------------------------------------------------

Result from_checks(const std::vector<OracleCheck>& checks, bool need_control) {
  Result res;
  double worst = 0.0;
  bool control = false;
  for (const auto& c : checks) {
    if (c.negative_control) {
      control = true;
      res.note(c.name + fmt(" control=%.3g", c.value));
    } else {
      worst = std::max(worst, c.value / c.threshold);
    }
    if (!c.pass()) res.fail(c.suite + "/" + c.name + fmt(" value=%.3g threshold=%.3g", c.value, c.threshold));
  }
  res.note(std::to_string(checks.size()) + fmt(" checks, worst value/threshold=%.3g", worst));
  if (need_control && !control) res.fail("negative control missing");
  return res;
}

Result criterion3() {
  auto checks = unbiasedness_checks();
  const auto mc = unbiasedness_mc_checks(303, kMcReplicates);
  checks.insert(checks.end(), mc.begin(), mc.end());
  return from_checks(checks, false);
}

// ---- criterion 5 -----------------------------------------------------------

// Number of free-boundary 4x4 configurations at each bond sum, by walking all
// 2^16 spin vectors.
std::map<int, double> ising_density_of_states(int rows, int cols) {
  std::map<int, double> n;
  const int sites = rows * cols;
  for (std::uint32_t m = 0; m < (1u << sites); ++m) {
    auto s = [&](int i, int j) { return (m >> (i * cols + j) & 1) ? 1 : -1; };
    int b = 0;
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) {
        if (j + 1 < cols) b += s(i, j) * s(i, j + 1);
        if (i + 1 < rows) b += s(i, j) * s(i + 1, j);
      }
    n[b] += 1.0;
  }
  return n;
}

// Posterior mean of theta under a uniform prior on (0, upper), composite Simpson.
double ising_posterior_mean(const std::map<int, double>& dos, int s_obs, double upper) {
  auto log_post = [&](double th) {
    double mx = -INFINITY;
    for (const auto& [k, c] : dos) mx = std::max(mx, std::log(c) + th * k);
    double z = 0.0;
    for (const auto& [k, c] : dos) z += std::exp(std::log(c) + th * k - mx);
    return th * s_obs - (mx + std::log(z));
  };
  const int n = 40000;
  const double h = upper / n;
  std::vector<double> lp(n + 1);
  for (int i = 0; i <= n; ++i) lp[i] = log_post(i * h);
  const double mx = *std::max_element(lp.begin(), lp.end());
  double z = 0.0, m = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double p = w * std::exp(lp[i] - mx);
    z += p;
    m += p * i * h;
  }
  return m / z;
}

Result criterion5() {
  Result res;
  const auto out = run(R"(
experiment: ising-exchange
master_seed: 505
model: {rows: 4, cols: 4, theta_true: 0.35, prior_upper: 10, sampler: exact}
kernel: {variant: full, N: [1, 20], T: 5, proposal_sd: 0.6}
run: {iterations: 200000, burn_in_fraction: 0.1, theta0: 0.35}
)",
                       505);
  const auto& data = out.tables.at("data.csv");
  std::vector<int> y(16);
  for (const auto& r : data.rows) y[std::stoi(r[0]) * 4 + std::stoi(r[1])] = std::stoi(r[2]);
  int s_obs = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if (j + 1 < 4) s_obs += y[i * 4 + j] * y[i * 4 + j + 1];
      if (i + 1 < 4) s_obs += y[i * 4 + j] * y[(i + 1) * 4 + j];
    }
  const double ref = ising_posterior_mean(ising_density_of_states(4, 4), s_obs, 10.0);
  res.note(fmt("quadrature mean=%.5f (bond sum %g)", ref, s_obs));
  const auto& sum = out.tables.at("summary.csv");
  auto r1 = row(sum, {{"N", "1"}}), r20 = row(sum, {{"N", "20"}});
  for (auto* r : {&r1, &r20}) {
    const double z = std::abs((*r)["mean"] - ref) / (*r)["mcse"];
    res.note(fmt("N=%g mean=%.5f mcse=%.5f z=%.2f", (*r)["N"], (*r)["mean"], (*r)["mcse"], z));
    if (!(z <= kMeanSigmas)) res.fail(fmt("N=%g posterior mean outside 3 SE", (*r)["N"]));
  }
  res.note(fmt("IAC N=1 %.2f [%.2f,%.2f]", r1["iac"], r1["iac_lo"], r1["iac_hi"]) +
           fmt(" N=20 %.2f [%.2f,%.2f]", r20["iac"], r20["iac_lo"], r20["iac_hi"]));
  if (res.verdict == Verdict::pass && !(r20["iac_hi"] < r1["iac_lo"])) {
    res.verdict = Verdict::inconclusive;
    res.note("IAC intervals overlap or are reversed");
  }
  return res;
}

// ---- criterion 6 -----------------------------------------------------------

Result criterion6() {
  Result res;
  // random-walk sds of the P=500 setting times sqrt(500 / 50), the ratio of posterior widths
  const std::string model = "model: {P: 50, var_v: 10, var_w: 0.1}\n";
  const std::string step = "proposal_sd: [0.4743, 0.2530], ";
  const std::string run_block = "run: {iterations: 20000, burn_in_fraction: 0.2}\n";
  const auto lat = run("experiment: ssm-latent\nmaster_seed: 606\n" + model +
                           "kernel: {" + step + "N: [1], T: 1, M: 100, theta_rule: midpoint, gibbs_sweeps: 1}\n" + run_block,
                       606);
  const auto sub = run("experiment: ssm-csmc\nmaster_seed: 606\n" + model +
                           "kernel: {" + step + "algorithm: sub, N: [1, 10], M: 150, theta_rule: midpoint, gibbs_sweeps: 1}\n" +
                           run_block,
                       606);
  for (const std::string p : {"var_v", "var_w"}) {
    const auto a = row(lat.tables.at("summary.csv"), {{"N", "1"}, {"param", p}});
    const auto b1 = row(sub.tables.at("summary.csv"), {{"N", "1"}, {"param", p}});
    const auto b10 = row(sub.tables.at("summary.csv"), {{"N", "10"}, {"param", p}});
    const std::vector<std::pair<std::string, const std::map<std::string, double>*>> runs{
        {"latent", &a}, {"sub1", &b1}, {"sub10", &b10}};
    for (std::size_t i = 0; i < runs.size(); ++i)
      for (std::size_t j = i + 1; j < runs.size(); ++j) {
        const auto& x = *runs[i].second;
        const auto& w = *runs[j].second;
        const double se = std::hypot(x.at("mcse"), w.at("mcse"));
        const double z = std::abs(x.at("mean") - w.at("mean")) / se;
        if (!(z <= kMeanSigmas)) res.fail(p + " " + runs[i].first + " vs " + runs[j].first + fmt(" z=%.2f", z));
      }
    res.note(p + fmt(" means latent %.4g sub1 %.4g sub10 %.4g", a.at("mean"), b1.at("mean"), b10.at("mean")) +
             fmt(" IAC N=1 %.1f N=10 %.1f", b1.at("iac"), b10.at("iac")));
    if (!(b10.at("iac") <= b1.at("iac"))) res.fail(p + " IAC not lower at N=10");
  }
  return res;
}

// ---- criterion 7 -----------------------------------------------------------

Result criterion7() {
  Result res;
  const auto out = run(R"(
experiment: changepoint-rmj
master_seed: 707
model: {events: 80, L: 100, breaks: [40], rates: [1.4, 0.4], m_max: 10}
kernel: {N: [1, 50], T: 0, beta_rule: up-down}
run: {iterations: 100000, burn_in_fraction: 0.1, m0: 1}
)",
                       707);
  const auto& probs = out.tables.at("model_probs.csv");
  double worst = 0.0;
  for (int m = 1; m <= 10; ++m) {
    auto a = row(probs, {{"N", "1"}, {"m", std::to_string(m)}});
    auto b = row(probs, {{"N", "50"}, {"m", std::to_string(m)}});
    const double sa = std::isnan(a["mcse"]) ? 0.0 : a["mcse"];
    const double sb = std::isnan(b["mcse"]) ? 0.0 : b["mcse"];
    const double diff = std::abs(a["prob"] - b["prob"]);
    const double se = std::hypot(sa, sb);
    if (diff == 0.0) continue;
    const double z = se > 0 ? diff / se : INFINITY;
    worst = std::max(worst, z);
    if (!(z <= kMeanSigmas)) res.fail(fmt("P(m=%g) differs: %.4f vs %.4f", m, a["prob"], b["prob"]));
  }
  const auto& sum = out.tables.at("summary.csv");
  const double i1 = row(sum, {{"N", "1"}})["iac"], i50 = row(sum, {{"N", "50"}})["iac"];
  res.note(fmt("max z over m=%.2f; IAC(m) N=1 %.2f N=50 %.2f", worst, i1, i50));
  if (!(i50 < i1)) res.fail("IAC(m) not lower at N=50");
  return res;
}

// ---- criterion 8 -----------------------------------------------------------

Result criterion8() {
  Result res;
  const std::vector<std::string> configs{
      "experiment: toy-gamma\nmaster_seed: 8\nmodel: {a: [2, 5]}\nkernel: {N_max: 40, N: [1, 7]}\nrun: "
      "{iterations: 3000}\n",
      "experiment: ising-exchange\nmaster_seed: 8\nmodel: {rows: 3, cols: 3, sampler: exact}\nkernel: {N: [1, 4], "
      "T: 2, proposal_sd: 0.5}\nrun: {iterations: 1500}\n",
      "experiment: ising-exchange\nmaster_seed: 8\nmodel: {rows: 3, cols: 3, sampler: wolff, wolff_iterations: "
      "5}\nkernel: {variant: reduced, N: [3], T: 1}\nrun: {iterations: 300, n_chains: 2}\n",
      "experiment: ising-pmt\nmaster_seed: 8\nmodel: {rows: 3, cols: 3, sampler: exact}\nkernel: {N: [1, 4]}\nrun: "
      "{iterations: 1500}\n",
      "experiment: ssm-latent\nmaster_seed: 8\nmodel: {P: 10}\nkernel: {N: [1, 3], T: 1, M: 16, refresh_sweeps: "
      "1}\nrun: {iterations: 200}\n",
      "experiment: ssm-csmc\nmaster_seed: 8\nmodel: {P: 10}\nkernel: {algorithm: sub, N: [1, 5], M: 16}\nrun: "
      "{iterations: 200}\n",
      "experiment: ssm-csmc\nmaster_seed: 8\nmodel: {P: 10}\nkernel: {algorithm: rb, N: [1], M: 16, theta_rule: "
      "current}\nrun: {iterations: 200}\n",
      "experiment: ssm-csmc\nmaster_seed: 8\nmodel: {P: 10}\nkernel: {algorithm: mwpg, N: [1], M: 16}\nrun: "
      "{iterations: 200}\n",
      "experiment: changepoint-rmj\nmaster_seed: 8\nmodel: {events: 40}\nkernel: {N: [1, 6], T: 0, beta_rule: "
      "half}\nrun: {iterations: 1500}\n",
      "experiment: changepoint-rmj\nmaster_seed: 8\nmodel: {events: 40}\nkernel: {N: [4], T: 2}\nrun: "
      "{iterations: 500}\n",
      "experiment: oracle-suite\nmaster_seed: 8\nrun: {mc_replicates: 3000}\n",
  };
  int compared = 0;
  for (const auto& c : configs) {
    std::map<std::string, std::string> first;
    for (int threads : {1, 8, 1}) {
      set_thread_count(threads);
      const auto out = run(c, 8, true);
      std::map<std::string, std::string> files;
      for (const auto& [n, t] : out.tables) files[n] = t.str();
      for (const auto& [n, t] : out.json_files) files[n] = t;
      if (first.empty()) {
        first = files;
        continue;
      }
      if (files != first) res.fail("outputs differ at " + std::to_string(threads) + " threads for: " + c.substr(12, 20));
      ++compared;
    }
  }
  set_thread_count(1);
  res.note(std::to_string(configs.size()) + " configs, " + std::to_string(compared) + " reruns compared byte for byte");
  return res;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Result()>>> criteria{
      {"toy model exactness", criterion1},
      {"reversibility suite", [] { return from_checks(reversibility_checks(), true); }},
      {"unbiasedness suite", criterion3},
      {"averaged-kernel monotonicity", [] { return from_checks(monotonicity_checks(404), false); }},
      {"4x4 Ising exchange", criterion5},
      {"state-space model cross-method", criterion6},
      {"change-point model probabilities", criterion7},
      {"thread-count determinism", criterion8},
  };
  // runtime budgets in seconds
  const std::vector<double> budget{10, 300, 1e9, 1e9, 900, 1200, 600, 1e9};
  bool ok = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Result r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > budget[i]) r.fail(fmt("took %.0f s, budget %.0f s", secs, budget[i]));
    const char* v = r.verdict == Verdict::pass ? "PASS" : r.verdict == Verdict::fail ? "FAIL" : "INCONCLUSIVE";
    std::printf("criterion %zu %-34s %-12s %6.1fs  %s\n", i + 1, criteria[i].first.c_str(), v, secs,
                r.detail.c_str());
    std::fflush(stdout);
    ok = ok && r.verdict != Verdict::fail;
  }
  return ok ? 0 : 1;
}
