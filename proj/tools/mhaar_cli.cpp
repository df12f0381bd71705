#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "mhaar/experiments.hpp"
#include "mhaar/parallel.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw mhaar::ConfigError("cannot read config '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

YAML::Node parse(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw mhaar::ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
}

int execute(const std::string& text, YAML::Node cfg, std::optional<std::uint64_t> seed, std::string out_dir,
            bool dump) {
  const auto diags = mhaar::validate_config(cfg);
  if (!diags.empty()) {
    for (const auto& d : diags) std::cerr << "config error: " << d << '\n';
    return 2;
  }
  mhaar::RunOptions opts;
  opts.seed = seed ? *seed : cfg["master_seed"].as<std::uint64_t>();
  opts.dump_particles = dump;
  if (out_dir.empty()) out_dir = cfg["output"] ? cfg["output"].as<std::string>() : "out";
  const auto t0 = std::chrono::steady_clock::now();
  const auto out = mhaar::run_experiment(cfg, opts);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  mhaar::write_outputs(out_dir, text, cfg, out, opts.seed, mhaar::thread_count(), wall);
  std::cout << "wrote " << out.tables.size() + out.json_files.size() << " files to " << out_dir << " in " << wall
            << " s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MHAAR samplers, experiments and finite-fixture oracles"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out_dir;
  app.add_option("--seed", seed, "override master_seed");
  app.add_option("--threads", threads, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "output directory (overrides the config's output)");

  std::string config;
  bool dump = false;
  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config, "YAML config")->required();
  run->add_flag("--dump-particles", dump, "write the first particle system as particles.json");
  auto* validate = app.add_subcommand("validate", "check a config and print diagnostics");
  validate->add_option("config", config, "YAML config")->required();
  long replicates = 1000000;
  auto* oracle = app.add_subcommand("oracle", "run the finite-fixture verification suite");
  oracle->add_option("--replicates", replicates, "Monte Carlo replicates per continuous fixture");

  for (auto* s : {run, validate, oracle}) s->fallthrough();
  CLI11_PARSE(app, argc, argv);
  mhaar::set_thread_count(threads);
  try {
    if (*validate) {
      const auto diags = mhaar::validate_config(parse(slurp(config)));
      for (const auto& d : diags) std::cout << d << '\n';
      if (diags.empty()) std::cout << "ok\n";
      return diags.empty() ? 0 : 2;
    }
    if (*run) {
      const std::string text = slurp(config);
      return execute(text, parse(text), seed, out_dir, dump);
    }
    std::ostringstream text;
    text << "experiment: oracle-suite\nmaster_seed: " << (seed ? *seed : 1) << "\nrun:\n  mc_replicates: "
         << replicates << '\n';
    const int rc = execute(text.str(), parse(text.str()), seed, out_dir.empty() ? "out/oracle" : out_dir, false);
    if (rc != 0) return rc;
    std::ifstream in((out_dir.empty() ? std::string("out/oracle") : out_dir) + "/oracle.csv");
    std::string line;
    bool all = true;
    std::getline(in, line);
    while (std::getline(in, line)) {
      std::cout << line << '\n';
      all = all && line.back() == '1';
    }
    std::cout << (all ? "all checks pass\n" : "some checks FAIL\n");
    return all ? 0 : 1;
  } catch (const mhaar::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
