#include "mhaar/experiments.hpp"

#include <boost/uuid/detail/sha1.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "mhaar/changepoint.hpp"
#include "mhaar/diagnostics.hpp"
#include "mhaar/exchange.hpp"
#include "mhaar/oracle.hpp"
#include "mhaar/parallel.hpp"
#include "mhaar/ssm.hpp"
#include "mhaar/toy.hpp"

namespace mhaar {

namespace {

using nlohmann::json;

// ---- config access ---------------------------------------------------------

YAML::Node at(const YAML::Node& cfg, const std::string& path) {
  // Node::operator= writes through to the referenced value; reset rebinds
  YAML::Node n;
  n.reset(cfg);
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '.')) {
    const YAML::Node& cn = n;
    if (!cn.IsMap() || !cn[part]) return YAML::Node(YAML::NodeType::Undefined);
    n.reset(cn[part]);
  }
  return n;
}

bool has(const YAML::Node& cfg, const std::string& path) { return at(cfg, path).IsDefined(); }

template <class T>
T get(const YAML::Node& cfg, const std::string& path, T def) {
  const YAML::Node n = at(cfg, path);
  if (!n.IsDefined() || n.IsNull()) return def;
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("field '" + path + "' has the wrong type");
  }
}

template <class T>
T need(const YAML::Node& cfg, const std::string& path) {
  if (!has(cfg, path)) throw ConfigError("missing field '" + path + "'");
  return get<T>(cfg, path, T{});
}

// A scalar or a sequence, as a list.
template <class T>
std::vector<T> list(const YAML::Node& cfg, const std::string& path, std::vector<T> def = {}) {
  const YAML::Node n = at(cfg, path);
  if (!n.IsDefined() || n.IsNull()) return def;
  try {
    if (n.IsSequence()) return n.as<std::vector<T>>();
    return {n.as<T>()};
  } catch (const YAML::Exception&) {
    throw ConfigError("field '" + path + "' has the wrong type");
  }
}

std::uint64_t chain_stream(std::size_t config_index, int chain) {
  return 100 + 1000 * static_cast<std::uint64_t>(config_index) + static_cast<std::uint64_t>(chain);
}
constexpr std::uint64_t kDataStream = 1;

// ---- summaries -------------------------------------------------------------

struct Summary {
  double mean = NAN, mcse = NAN, iac = NAN, lo = NAN, hi = NAN;
};

Summary summarise(const std::vector<double>& series, double burn) {
  const std::size_t skip = static_cast<std::size_t>(burn * static_cast<double>(series.size()));
  const std::vector<double> kept(series.begin() + static_cast<long>(skip), series.end());
  Summary s;
  if (kept.empty()) return s;
  double m = 0.0;
  for (double v : kept) m += v;
  s.mean = m / static_cast<double>(kept.size());
  const bool constant = std::all_of(kept.begin(), kept.end(), [&](double v) { return v == kept[0]; });
  if (kept.size() >= 1000 && !constant) {
    const auto e = iac_estimate(kept, 20);
    s.mcse = e.mcse;
    s.iac = e.iac;
    s.lo = e.ci_lo;
    s.hi = e.ci_hi;
  }
  return s;
}

std::vector<std::string> summary_cells(const Summary& s) {
  return {csv_num(s.mean), csv_num(s.mcse), csv_num(s.iac), csv_num(s.lo), csv_num(s.hi)};
}

const std::vector<std::string> kSummaryCols{"mean", "mcse", "iac", "iac_lo", "iac_hi"};

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

const char* branch_name(Branch b) {
  switch (b) {
    case Branch::q1: return "q1";
    case Branch::q2: return "q2";
    default: return "plain";
  }
}

// ---- toy -------------------------------------------------------------------

ExperimentOutput run_toy(const YAML::Node& cfg, const RunOptions& opts) {
  ExperimentOutput out;
  const auto as = list<double>(cfg, "model.a");
  const double theta = get<double>(cfg, "model.theta", 0.0);
  const int n_max = get<int>(cfg, "kernel.N_max", 1000);
  CsvTable g{{"a", "N", "pflip", "relaxation_time", "gamma"}, {}};
  for (double a : as)
    for (int n = 1; n <= n_max; ++n) {
      const ToyModel m{a, theta};
      g.add({csv_num(a), std::to_string(n), csv_num(pflip_exact(m, n)),
             csv_num(toy_relaxation_time(m, n)), csv_num(gamma_reduction(a, n))});
    }
  out.tables["gamma.csv"] = g;
  const long steps = get<long>(cfg, "run.iterations", 0);
  if (steps > 0) {
    CsvTable f{{"a", "N", "pflip_exact", "pflip_mc", "se"}, {}};
    const auto ns = list<int>(cfg, "kernel.N", {1, 2, 10});
    std::size_t idx = 0;
    for (double a : as)
      for (int n : ns) {
        StreamRng r(opts.seed, chain_stream(idx++, 0));
        const ToyModel m{a, theta};
        const auto e = pflip_monte_carlo(m, n, steps, r);
        f.add({csv_num(a), std::to_string(n), csv_num(pflip_exact(m, n)), csv_num(e.p), csv_num(e.se)});
      }
    out.tables["flip_mc.csv"] = f;
  }
  return out;
}

// ---- Ising -----------------------------------------------------------------

struct IsingSetup {
  Lattice lat;
  Spins data;
  std::unique_ptr<IsingModel> model;
};

IsingSetup ising_setup(const YAML::Node& cfg, std::uint64_t seed) {
  IsingSetup s;
  const int rows = need<int>(cfg, "model.rows"), cols = need<int>(cfg, "model.cols");
  s.lat = Lattice(rows, cols);
  const std::string sampler = get<std::string>(cfg, "model.sampler", rows * cols <= 20 ? "exact" : "wolff");
  const int wolff_it = get<int>(cfg, "model.wolff_iterations", 100);
  const double upper = get<double>(cfg, "model.prior_upper", 10.0);
  auto prior = [upper](double t) { return t > 0 && t < upper ? -std::log(upper) : kNegInf; };
  const auto kind = sampler == "exact" ? IsingModel::Sampler::exact : IsingModel::Sampler::wolff;
  const std::string file = get<std::string>(cfg, "model.data_file", "");
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw ConfigError("model.data_file: cannot open '" + file + "'");
    int v;
    while (in >> v) s.data.push_back(static_cast<std::int8_t>(v > 0 ? 1 : -1));
    if (static_cast<int>(s.data.size()) != rows * cols)
      throw ConfigError("model.data_file: expected " + std::to_string(rows * cols) + " spins");
  } else {
    // data drawn from the likelihood at theta_true with its own stream
    const double th = get<double>(cfg, "model.theta_true", 0.35);
    IsingModel gen(s.lat, Spins(rows * cols, 1), kind, wolff_it, prior);
    StreamRng r(seed, kDataStream);
    if (gen.exact()) {
      s.data = gen.exact()->sample(th, r);
    } else {
      s.data = uniform_spins(s.lat, r);
      for (int i = 0; i < 10 * wolff_it; ++i) s.data = wolff_update(s.lat, s.data, th, r);
    }
  }
  s.model = std::make_unique<IsingModel>(s.lat, s.data, kind, wolff_it, prior);
  return s;
}

ExperimentOutput run_ising(const YAML::Node& cfg, const RunOptions& opts, bool pmt) {
  ExperimentOutput out;
  auto s = ising_setup(cfg, opts.seed);
  {
    CsvTable d{{"row", "col", "spin"}, {}};
    for (int i = 0; i < s.lat.rows; ++i)
      for (int j = 0; j < s.lat.cols; ++j)
        d.add({std::to_string(i), std::to_string(j), std::to_string(int(s.data[i * s.lat.cols + j]))});
    out.tables["data.csv"] = d;
  }
  const auto ns = list<int>(cfg, "kernel.N");
  const int T = pmt ? 0 : need<int>(cfg, "kernel.T");
  const std::string variant = get<std::string>(cfg, "kernel.variant", "full");
  const ReflectedNormalWalk q(get<double>(cfg, "kernel.proposal_sd", 0.1));
  const long iters = need<long>(cfg, "run.iterations");
  const double burn = get<double>(cfg, "run.burn_in_fraction", 0.25);
  const int thin = get<int>(cfg, "run.thin", 1);
  const int chains = get<int>(cfg, "run.n_chains", 1);
  const double th0 = get<double>(cfg, "run.theta0", get<double>(cfg, "model.theta_true", 0.35));
  const GeometricBridge<Spins> br(*s.model, T);
  const AisExchangePair<Spins> pair(*s.model, br, q);

  double theta_hat = 0.0;
  if (pmt) {
    if (has(cfg, "kernel.theta_hat")) {
      theta_hat = need<double>(cfg, "kernel.theta_hat");
    } else if (s.model->exact()) {
      // coarse grid maximum likelihood
      double best = kNegInf;
      const int sy = bond_sum(s.lat, s.data);
      for (int i = 1; i <= 40; ++i) {
        const double t = 0.05 * i;
        const double l = t * sy - s.model->exact()->log_partition(t);
        if (l > best) best = l, theta_hat = t;
      }
    } else {
      throw ConfigError("kernel.theta_hat is required without an exact sampler");
    }
  }

  CsvTable chain{{"N", "chain", "iteration", "theta", "accepted"}, {}};
  CsvTable summary{cat({"N", "T", "chain", "iterations", "acceptance"}, kSummaryCols), {}};
  for (std::size_t c = 0; c < ns.size(); ++c) {
    const int n = ns[c];
    for (int ch = 0; ch < chains; ++ch) {
      StreamRng r(opts.seed, chain_stream(c, ch));
      std::vector<double> series;
      series.reserve(iters);
      long acc = 0;
      double th = th0;
      PmtState ps;
      auto log_h = [&](const Spins& z) { return theta_hat * bond_sum(s.lat, z); };
      if (pmt) ps = pmt_init(th0, *s.model, log_h, n, r);
      for (long i = 0; i < iters; ++i) {
        bool a;
        if (pmt) {
          auto st = pmt_step(ps, *s.model, log_h, q, n, r);
          ps = st.state;
          th = ps.theta;
          a = st.report.accepted;
        } else if (variant == "reduced") {
          auto st = exchange_mhaar_reduced_step(th, *s.model, br, q, n, r);
          th = st.state;
          a = st.report.accepted;
        } else {
          auto st = exchange_mhaar_step(th, pair, n, r);
          th = st.state;
          a = st.report.accepted;
        }
        acc += a;
        series.push_back(th);
        if (i % thin == 0)
          chain.add({std::to_string(n), std::to_string(ch), std::to_string(i), csv_num(th), a ? "1" : "0"});
      }
      summary.add(cat({std::to_string(n), std::to_string(T), std::to_string(ch), std::to_string(iters),
                       csv_num(static_cast<double>(acc) / iters)},
                      summary_cells(summarise(series, burn))));
    }
  }
  out.tables["chain.csv"] = chain;
  out.tables["summary.csv"] = summary;
  if (pmt) out.tables["theta_hat.csv"] = CsvTable{{"theta_hat"}, {{csv_num(theta_hat)}}};
  return out;
}

// ---- state-space model -----------------------------------------------------

std::pair<ThetaRule, ThetaRule> theta_rules(const std::string& name) {
  if (name == "midpoint") return {midpoint, midpoint};
  if (name == "current")
    return {[](const Vec& a, const Vec&) { return a; }, [](const Vec&, const Vec& b) { return b; }};
  throw ConfigError("kernel.theta_rule: unknown rule '" + name + "'");
}

json particles_json(const ParticleSystem& ps) {
  return json{{"values", ps.x}, {"log_weights", ps.logw}, {"ancestors", ps.a}};
}

ExperimentOutput run_ssm(const YAML::Node& cfg, const RunOptions& opts, bool csmc_family) {
  ExperimentOutput out;
  SsmSeries data;
  const std::string file = get<std::string>(cfg, "model.data_file", "");
  if (!file.empty()) {
    data.y = read_real_column(file);
  } else {
    StreamRng r(opts.seed, kDataStream);
    data = nonlinear_ssm_simulate(get<double>(cfg, "model.var_v", 10.0), get<double>(cfg, "model.var_w", 0.1),
                                  need<int>(cfg, "model.P"), r);
  }
  const NonlinearSsm model(data.y, get<double>(cfg, "model.prior_shape", 0.01),
                           get<double>(cfg, "model.prior_scale", 0.01));
  {
    CsvTable d{{"t", "z", "y"}, {}};
    for (std::size_t t = 0; t < data.y.size(); ++t)
      d.add({std::to_string(t + 1), data.z.empty() ? "" : csv_num(data.z[t]), csv_num(data.y[t])});
    out.tables["data.csv"] = d;
  }
  const auto ns = list<int>(cfg, "kernel.N");
  const int M = need<int>(cfg, "kernel.M");
  const auto sd = list<double>(cfg, "kernel.proposal_sd", {0.15, 0.08});
  const NormalWalk q(sd);
  const auto [rule1, rule2] = theta_rules(get<std::string>(cfg, "kernel.theta_rule", "midpoint"));
  const int gibbs = get<int>(cfg, "kernel.gibbs_sweeps", 1);
  const int refresh = get<int>(cfg, "kernel.refresh_sweeps", 0);
  const std::string algo = csmc_family ? need<std::string>(cfg, "kernel.algorithm") : "latent";
  const long iters = need<long>(cfg, "run.iterations");
  const double burn = get<double>(cfg, "run.burn_in_fraction", 0.25);
  const int thin = get<int>(cfg, "run.thin", 1);
  const int chains = get<int>(cfg, "run.n_chains", 1);
  const auto v0 = list<double>(cfg, "run.theta0", {get<double>(cfg, "model.var_v", 10.0),
                                                    get<double>(cfg, "model.var_w", 0.1)});
  const Vec th0{std::sqrt(v0.at(0)), std::sqrt(v0.at(1))};
  const SsmLatentBridge bridge(model, M, rule1, refresh);

  CsvTable chain{{"N", "chain", "iteration", "var_v", "var_w", "branch", "accepted"}, {}};
  CsvTable summary{cat({"N", "chain", "param", "iterations", "acceptance"}, kSummaryCols), {}};
  for (std::size_t c = 0; c < ns.size(); ++c) {
    const int n = ns[c];
    for (int ch = 0; ch < chains; ++ch) {
      StreamRng r(opts.seed, chain_stream(c, ch));
      SsmState x{th0, backward_sample(particle_filter(model, th0, M, r), model, th0, r)};
      if (opts.dump_particles && c == 0 && ch == 0)
        out.json_files["particles.json"] = particles_json(csmc(model, th0, M, x.z, r)).dump(1);
      std::vector<double> sv, sw;
      long acc = 0;
      for (long i = 0; i < iters; ++i) {
        Step<SsmState> st;
        if (algo == "latent") st = mhaar_latent_step(x, bridge, q, n, r);
        else if (algo == "sub") st = mhaar_csmc_sub_step(x, model, q, M, n, rule1, rule2, r);
        else if (algo == "rb") st = mhaar_csmc_rb_step(x, model, q, M, rule1, rule2, r);
        else if (algo == "mwpg") st = mwpg_step(x, model, q, M, r);
        else throw ConfigError("kernel.algorithm: unknown algorithm '" + algo + "'");
        x = st.state;
        for (int g = 0; g < gibbs; ++g) x.z = backward_sample(csmc(model, x.theta, M, x.z, r), model, x.theta, r);
        acc += st.report.accepted;
        const double a = x.theta[0] * x.theta[0], b = x.theta[1] * x.theta[1];
        sv.push_back(a);
        sw.push_back(b);
        if (i % thin == 0)
          chain.add({std::to_string(n), std::to_string(ch), std::to_string(i), csv_num(a), csv_num(b),
                     branch_name(st.report.branch), st.report.accepted ? "1" : "0"});
      }
      const std::string ar = csv_num(static_cast<double>(acc) / iters);
      summary.add(cat({std::to_string(n), std::to_string(ch), "var_v", std::to_string(iters), ar},
                      summary_cells(summarise(sv, burn))));
      summary.add(cat({std::to_string(n), std::to_string(ch), "var_w", std::to_string(iters), ar},
                      summary_cells(summarise(sw, burn))));
    }
  }
  out.tables["chain.csv"] = chain;
  out.tables["summary.csv"] = summary;
  return out;
}

// ---- change-point ----------------------------------------------------------

std::function<double(int, int)> beta_rule(const std::string& name) {
  if (name == "half") return half_beta;
  if (name == "up-down") return up_down_beta;
  char* end = nullptr;
  const double v = std::strtod(name.c_str(), &end);
  if (end != name.c_str() && *end == '\0') return [v](int, int) { return v; };
  throw ConfigError("kernel.beta_rule: unknown rule '" + name + "'");
}

ChangepointModel changepoint_setup(const YAML::Node& cfg, std::uint64_t seed) {
  ChangepointHyper h;
  h.L = get<double>(cfg, "model.L", 100.0);
  h.lambda = get<double>(cfg, "model.lambda", h.lambda);
  h.m_max = get<int>(cfg, "model.m_max", h.m_max);
  h.c = get<double>(cfg, "model.c", h.c);
  h.d = get<double>(cfg, "model.d", h.d);
  h.e = get<double>(cfg, "model.e", h.e);
  h.f = get<double>(cfg, "model.f", h.f);
  const std::string lik = get<std::string>(cfg, "model.likelihood", "poisson");
  if (lik == "displayed") h.likelihood = ChangepointHyper::Likelihood::displayed;
  else if (lik != "poisson") throw ConfigError("model.likelihood: unknown value '" + lik + "'");
  ChangepointMoves mv;
  mv.log_height_sd = get<double>(cfg, "kernel.moves.log_height_sd", mv.log_height_sd);
  mv.position_window = get<double>(cfg, "kernel.moves.position_window", mv.position_window);
  mv.log_hyper_sd = get<double>(cfg, "kernel.moves.log_hyper_sd", mv.log_hyper_sd);
  mv.bridge_position_sd = get<double>(cfg, "kernel.bridge.position_sd", mv.bridge_position_sd);
  mv.bridge_height_sd = get<double>(cfg, "kernel.bridge.height_sd", mv.bridge_height_sd);
  mv.bridge_hyper_sd = get<double>(cfg, "kernel.bridge.hyper_sd", mv.bridge_hyper_sd);
  mv.bridge_u_sd = get<double>(cfg, "kernel.bridge.u_sd", mv.bridge_u_sd);
  std::vector<double> events;
  const std::string file = get<std::string>(cfg, "model.data_file", "");
  if (!file.empty()) {
    events = read_real_column(file);
  } else {
    StreamRng r(seed, kDataStream);
    const auto breaks = list<double>(cfg, "model.breaks", {0.4 * h.L});
    const auto rates = list<double>(cfg, "model.rates", {1.0, 0.25});
    if (rates.size() != breaks.size() + 1) throw ConfigError("model.rates: need one more rate than breaks");
    events = changepoint_synthetic(need<int>(cfg, "model.events"), h.L, breaks, rates, r);
  }
  return ChangepointModel(events, h, mv);
}

ExperimentOutput run_changepoint(const YAML::Node& cfg, const RunOptions& opts) {
  ExperimentOutput out;
  const ChangepointModel model = changepoint_setup(cfg, opts.seed);
  {
    CsvTable d{{"event"}, {}};
    for (double e : model.events()) d.add({csv_num(e)});
    out.tables["data.csv"] = d;
  }
  const auto ns = list<int>(cfg, "kernel.N");
  const int T = get<int>(cfg, "kernel.T", 0);
  const auto beta = beta_rule(get<std::string>(cfg, "kernel.beta_rule", "up-down"));
  const NeighbourModelProposal q(model.min_model(), model.max_model());
  const TransdimBridge bridge(model, model, T);
  const long iters = need<long>(cfg, "run.iterations");
  const double burn = get<double>(cfg, "run.burn_in_fraction", 0.25);
  const int thin = get<int>(cfg, "run.thin", 1);
  const int chains = get<int>(cfg, "run.n_chains", 1);
  const int m0 = get<int>(cfg, "run.m0", 1);
  const int mmax = model.max_model();

  CsvTable chain{{"N", "chain", "iteration", "m", "accepted"}, {}};
  CsvTable probs{{"N", "chain", "m", "prob", "mcse"}, {}};
  CsvTable summary{cat({"N", "chain", "iterations", "acceptance"}, kSummaryCols), {}};
  for (std::size_t c = 0; c < ns.size(); ++c) {
    const int n = ns[c];
    for (int ch = 0; ch < chains; ++ch) {
      StreamRng r(opts.seed, chain_stream(c, ch));
      TdState x{m0, model.initial_state(m0)};
      std::vector<double> ms;
      long acc = 0;
      for (long i = 0; i < iters; ++i) {
        auto st = T == 0 ? rmj_step(x, model, model, q, n, beta, r) : ais_rj_step(x, bridge, q, n, beta, r);
        x = st.state;
        x.z = model.within_model_move(x.theta, x.z, r);
        acc += st.report.accepted;
        ms.push_back(x.theta);
        if (i % thin == 0)
          chain.add({std::to_string(n), std::to_string(ch), std::to_string(i), std::to_string(x.theta),
                     st.report.accepted ? "1" : "0"});
      }
      for (int m = 1; m <= mmax; ++m) {
        std::vector<double> ind(ms.size());
        for (std::size_t i = 0; i < ms.size(); ++i) ind[i] = ms[i] == m ? 1.0 : 0.0;
        const auto s = summarise(ind, burn);
        probs.add({std::to_string(n), std::to_string(ch), std::to_string(m), csv_num(s.mean), csv_num(s.mcse)});
      }
      summary.add(cat({std::to_string(n), std::to_string(ch), std::to_string(iters),
                       csv_num(static_cast<double>(acc) / iters)},
                      summary_cells(summarise(ms, burn))));
    }
  }
  out.tables["chain.csv"] = chain;
  out.tables["model_probs.csv"] = probs;
  out.tables["summary.csv"] = summary;
  return out;
}

// ---- oracle suite ----------------------------------------------------------

ExperimentOutput run_oracle(const YAML::Node& cfg, const RunOptions& opts) {
  ExperimentOutput out;
  CsvTable t{{"suite", "check", "value", "threshold", "negative_control", "pass"}, {}};
  auto add = [&](const std::vector<OracleCheck>& v) {
    for (const auto& c : v)
      t.add({c.suite, c.name, csv_num(c.value), csv_num(c.threshold), c.negative_control ? "1" : "0",
             c.pass() ? "1" : "0"});
  };
  add(reversibility_checks());
  add(unbiasedness_checks());
  add(monotonicity_checks(opts.seed));
  const long reps = get<long>(cfg, "run.mc_replicates", 1000000);
  if (reps > 0) add(unbiasedness_mc_checks(opts.seed, reps));
  out.tables["oracle.csv"] = t;
  return out;
}

// ---- validation helpers ----------------------------------------------------

void require(const YAML::Node& cfg, const std::vector<std::string>& keys, std::vector<std::string>& d) {
  for (const auto& k : keys)
    if (!has(cfg, k)) d.push_back("missing field '" + k + "'");
}

template <class T>
void at_least(const YAML::Node& cfg, const std::string& key, T lo, std::vector<std::string>& d) {
  try {
    for (T v : list<T>(cfg, key))
      if (v < lo) {
        std::ostringstream s;
        s << "field '" << key << "' must be at least " << lo;
        d.push_back(s.str());
        return;
      }
  } catch (const ConfigError& e) {
    d.push_back(e.what());
  }
}

// Normalisation of the branch mixture on a probe grid of model pairs:
// sum_m' q(m, m') [beta(m, m') + (1 - beta(m, m'))] = 1 needs beta in [0, 1],
// and a pair routed to one branch in both directions can never move.
void check_beta(const YAML::Node& cfg, std::vector<std::string>& d) {
  std::function<double(int, int)> beta;
  try {
    beta = beta_rule(get<std::string>(cfg, "kernel.beta_rule", "up-down"));
  } catch (const ConfigError& e) {
    d.push_back(e.what());
    return;
  }
  const int mmax = get<int>(cfg, "model.m_max", 10);
  if (mmax < 1) return;
  NeighbourModelProposal q(1, mmax);
  for (int m = 1; m <= mmax; ++m) {
    double mass = 0.0;
    for (int m2 = 1; m2 <= mmax; ++m2) {
      const double lq = q.log_density(m, m2);
      if (lq == kNegInf) continue;
      const double b = beta(m, m2);
      if (!(b >= 0.0 && b <= 1.0)) {
        d.push_back("kernel.beta_rule: beta(" + std::to_string(m) + "," + std::to_string(m2) +
                    ") is outside [0, 1], so the branch mixture does not normalise");
        return;
      }
      mass += std::exp(lq) * (b + (1.0 - b));
      if (b == 1.0 && beta(m2, m) == 1.0)
        d.push_back("kernel.beta_rule: beta is 1 in both directions between " + std::to_string(m) + " and " +
                    std::to_string(m2) + ", so that move is never accepted");
    }
    if (std::abs(mass - 1.0) > 1e-12)
      d.push_back("kernel.beta_rule: branch mixture from model " + std::to_string(m) + " has mass " +
                  csv_num(mass));
  }
}

}  // namespace

std::string csv_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string CsvTable::str() const {
  std::string s;
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) s += ',';
      s += r[i];
    }
    s += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return s;
}

const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids{"toy-gamma",  "ising-exchange",  "ising-pmt",   "ssm-latent",
                                            "ssm-csmc",   "changepoint-rmj", "oracle-suite"};
  return ids;
}

std::vector<std::string> validate_config(const YAML::Node& cfg) {
  std::vector<std::string> d;
  if (!cfg.IsDefined() || cfg.IsNull() || !cfg.IsMap()) {
    d.push_back("missing field 'experiment'");
    d.push_back("missing field 'master_seed'");
    return d;
  }
  require(cfg, {"experiment", "master_seed"}, d);
  if (!has(cfg, "experiment")) return d;
  const std::string id = get<std::string>(cfg, "experiment", "");
  const auto& ids = experiment_ids();
  if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
    d.push_back("field 'experiment': unknown id '" + id + "'");
    return d;
  }
  if (has(cfg, "run.burn_in_fraction")) {
    const double b = get<double>(cfg, "run.burn_in_fraction", 0.0);
    if (!(b >= 0.0 && b < 1.0)) d.push_back("field 'run.burn_in_fraction' must be in [0, 1)");
  }
  at_least<int>(cfg, "run.n_chains", 1, d);
  at_least<int>(cfg, "run.thin", 1, d);
  if (id == "toy-gamma") {
    require(cfg, {"model.a"}, d);
    at_least<double>(cfg, "model.a", 1.0, d);
    at_least<int>(cfg, "kernel.N_max", 1, d);
    at_least<int>(cfg, "kernel.N", 1, d);
  } else if (id == "ising-exchange" || id == "ising-pmt") {
    require(cfg, {"model.rows", "model.cols", "kernel.N", "run.iterations"}, d);
    if (id == "ising-exchange") require(cfg, {"kernel.T"}, d);
    at_least<int>(cfg, "model.rows", 1, d);
    at_least<int>(cfg, "model.cols", 1, d);
    at_least<int>(cfg, "kernel.N", 1, d);
    at_least<int>(cfg, "kernel.T", 0, d);
    at_least<long>(cfg, "run.iterations", 1, d);
    at_least<double>(cfg, "kernel.proposal_sd", 0.0, d);
    if (get<std::string>(cfg, "model.sampler", "") == "exact" &&
        get<int>(cfg, "model.rows", 0) * get<int>(cfg, "model.cols", 0) > 20)
      d.push_back("model.sampler: exact sampling needs at most 20 sites");
    if (get<int>(cfg, "kernel.T", 0) == 0 && has(cfg, "kernel.bridge"))
      d.push_back("kernel.bridge: bridge kernel parameters given with T = 0");
    if (id == "ising-pmt" && has(cfg, "kernel.T") && get<int>(cfg, "kernel.T", 0) != 0)
      d.push_back("kernel.T: the pseudo-marginal baseline has no annealing");
  } else if (id == "ssm-latent" || id == "ssm-csmc") {
    if (!has(cfg, "model.data_file")) require(cfg, {"model.P"}, d);
    require(cfg, {"kernel.N", "kernel.M", "run.iterations"}, d);
    if (id == "ssm-csmc") require(cfg, {"kernel.algorithm"}, d);
    at_least<int>(cfg, "model.P", 1, d);
    at_least<int>(cfg, "kernel.N", 1, d);
    at_least<int>(cfg, "kernel.M", 2, d);
    at_least<long>(cfg, "run.iterations", 1, d);
    at_least<int>(cfg, "kernel.gibbs_sweeps", 0, d);
    at_least<int>(cfg, "kernel.refresh_sweeps", 0, d);
    if (id == "ssm-latent" && has(cfg, "kernel.T") && get<int>(cfg, "kernel.T", 1) != 1)
      d.push_back("kernel.T: the cSMC bridge has exactly one intermediate density");
    if (has(cfg, "kernel.proposal_sd") && list<double>(cfg, "kernel.proposal_sd").size() != 2)
      d.push_back("kernel.proposal_sd: need two standard deviations");
    const std::string rule = get<std::string>(cfg, "kernel.theta_rule", "midpoint");
    if (rule != "midpoint" && rule != "current") d.push_back("kernel.theta_rule: unknown rule '" + rule + "'");
    if (id == "ssm-csmc") {
      const std::string a = get<std::string>(cfg, "kernel.algorithm", "");
      if (a != "sub" && a != "rb" && a != "mwpg") d.push_back("kernel.algorithm: unknown algorithm '" + a + "'");
    }
  } else if (id == "changepoint-rmj") {
    if (!has(cfg, "model.data_file")) require(cfg, {"model.events"}, d);
    require(cfg, {"kernel.N", "run.iterations"}, d);
    at_least<int>(cfg, "model.events", 1, d);
    at_least<int>(cfg, "model.m_max", 1, d);
    at_least<int>(cfg, "kernel.N", 1, d);
    at_least<int>(cfg, "kernel.T", 0, d);
    at_least<long>(cfg, "run.iterations", 1, d);
    if (get<int>(cfg, "kernel.T", 0) == 0 && has(cfg, "kernel.bridge"))
      d.push_back("kernel.bridge: bridge kernel parameters given with T = 0");
    check_beta(cfg, d);
  } else if (id == "oracle-suite") {
    at_least<long>(cfg, "run.mc_replicates", 0, d);
  }
  return d;
}

ExperimentOutput run_experiment(const YAML::Node& cfg, const RunOptions& opts) {
  const auto diags = validate_config(cfg);
  if (!diags.empty()) throw ConfigError(diags.front());
  const std::string id = get<std::string>(cfg, "experiment", "");
  if (id == "toy-gamma") return run_toy(cfg, opts);
  if (id == "ising-exchange") return run_ising(cfg, opts, false);
  if (id == "ising-pmt") return run_ising(cfg, opts, true);
  if (id == "ssm-latent") return run_ssm(cfg, opts, false);
  if (id == "ssm-csmc") return run_ssm(cfg, opts, true);
  if (id == "changepoint-rmj") return run_changepoint(cfg, opts);
  return run_oracle(cfg, opts);
}

std::string git_blob_sha1(const std::string& text) {
  boost::uuids::detail::sha1 h;
  const std::string head = "blob " + std::to_string(text.size()) + '\0';
  h.process_bytes(head.data(), head.size());
  h.process_bytes(text.data(), text.size());
  unsigned int d[5];
  h.get_digest(d);
  char buf[41];
  for (int i = 0; i < 5; ++i) std::snprintf(buf + 8 * i, 9, "%08x", d[i]);
  return buf;
}

namespace {

json yaml_to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Sequence: {
      json a = json::array();
      for (const auto& e : n) a.push_back(yaml_to_json(e));
      return a;
    }
    case YAML::NodeType::Map: {
      json o = json::object();
      for (const auto& kv : n) o[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return o;
    }
    case YAML::NodeType::Scalar: {
      const std::string s = n.Scalar();
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      if (!s.empty() && end && *end == '\0') return v;
      return s;
    }
    default:
      return nullptr;
  }
}

}  // namespace

void write_outputs(const std::string& dir, const std::string& config_text, const YAML::Node& cfg,
                   const ExperimentOutput& out, std::uint64_t seed, int threads, double wall_seconds) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  json files = json::array();
  for (const auto& [name, t] : out.tables) {
    std::ofstream(fs::path(dir) / name, std::ios::binary) << t.str();
    files.push_back(name);
  }
  for (const auto& [name, text] : out.json_files) {
    std::ofstream(fs::path(dir) / name, std::ios::binary) << text;
    files.push_back(name);
  }
  json m{{"experiment", get<std::string>(cfg, "experiment", "")},
         {"config", yaml_to_json(cfg)},
         {"config_sha1", git_blob_sha1(config_text)},
         {"seed", seed},
         {"threads", threads},
         {"library", "mhaar"},
         {"library_version", "0.1.0"},
         {"wall_clock_seconds", wall_seconds},
         {"outputs", files}};
  std::ofstream(fs::path(dir) / "manifest.json") << m.dump(2) << '\n';
}

}  // namespace mhaar
