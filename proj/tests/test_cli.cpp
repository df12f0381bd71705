#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "doctest.h"
#include "mhaar/experiments.hpp"

using namespace mhaar;

namespace {

bool mentions(const std::vector<std::string>& d, const std::string& s) {
  for (const auto& x : d)
    if (x.find(s) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("git blob hash") {
  // `printf 'hello\n' | git hash-object --stdin`
  CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST_CASE("csv numbers") {
  CHECK(csv_num(0.5) == "0.5");
  CHECK(csv_num(1.0 / 3) == "0.3333333333");
  CHECK(csv_num(NAN) == "nan");
  CHECK(csv_num(-INFINITY) == "-inf");
  CsvTable t{{"a", "b"}, {}};
  t.add({"1", "2"});
  CHECK(t.str() == "a,b\n1,2\n");
}

TEST_CASE("empty config reports the required fields") {
  const auto d = validate_config(YAML::Load(""));
  CHECK(mentions(d, "'experiment'"));
  CHECK(mentions(d, "'master_seed'"));
  const auto d2 = validate_config(YAML::Load("experiment: ssm-csmc\nmaster_seed: 1\n"));
  for (const char* f : {"model.P", "kernel.N", "kernel.M", "kernel.algorithm", "run.iterations"})
    CHECK(mentions(d2, f));
  CHECK(mentions(validate_config(YAML::Load("experiment: nope\nmaster_seed: 1\n")), "unknown id"));
}

TEST_CASE("range and cross-field diagnostics") {
  const std::string base = "experiment: ising-exchange\nmaster_seed: 1\nmodel: {rows: 3, cols: 3}\nrun: {iterations: 10}\n";
  CHECK(validate_config(YAML::Load(base + "kernel: {N: [1, 2], T: 0}\n")).empty());
  CHECK(mentions(validate_config(YAML::Load(base + "kernel: {N: [1, 0], T: 0}\n")), "kernel.N"));
  CHECK(mentions(validate_config(YAML::Load(base + "kernel: {N: 1, T: -1}\n")), "kernel.T"));
  CHECK(mentions(validate_config(YAML::Load(base + "kernel: {N: 1, T: 0, bridge: {sd: 1}}\n")), "T = 0"));
  CHECK(mentions(validate_config(YAML::Load(base + "kernel: {N: one, T: 0}\n")), "wrong type"));
  CHECK(validate_config(YAML::Load(base + "kernel: {N: 1, T: 2, bridge: {sd: 1}}\n")).empty());
  CHECK(mentions(validate_config(YAML::Load(
                     "experiment: ssm-latent\nmaster_seed: 1\nmodel: {P: 5}\nkernel: {N: 1, M: 1}\nrun: "
                     "{iterations: 5, burn_in_fraction: 1}\n")),
                 "kernel.M"));
  CHECK(mentions(validate_config(YAML::Load(
                     "experiment: ssm-latent\nmaster_seed: 1\nmodel: {P: 5}\nkernel: {N: 1, M: 4}\nrun: "
                     "{iterations: 5, burn_in_fraction: 1}\n")),
                 "burn_in_fraction"));
}

TEST_CASE("beta rule normalisation on the probe grid") {
  const std::string base =
      "experiment: changepoint-rmj\nmaster_seed: 1\nmodel: {events: 10, m_max: 5}\nrun: {iterations: 10}\n";
  CHECK(validate_config(YAML::Load(base + "kernel: {N: 2, beta_rule: up-down}\n")).empty());
  CHECK(validate_config(YAML::Load(base + "kernel: {N: 2, beta_rule: half}\n")).empty());
  CHECK(mentions(validate_config(YAML::Load(base + "kernel: {N: 2, beta_rule: 1.5}\n")), "does not normalise"));
  CHECK(mentions(validate_config(YAML::Load(base + "kernel: {N: 2, beta_rule: 1}\n")), "never accepted"));
}

TEST_CASE("run rejects an invalid config naming the field") {
  try {
    run_experiment(YAML::Load("experiment: toy-gamma\nmaster_seed: 1\n"), {});
    FAIL("no error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("model.a") != std::string::npos);
  }
}

TEST_CASE("same config and seed give identical outputs") {
  const auto cfg = YAML::Load(
      "experiment: changepoint-rmj\nmaster_seed: 4\nmodel: {events: 30}\nkernel: {N: [1, 3]}\nrun: {iterations: 300}\n");
  const auto a = run_experiment(cfg, {4, false});
  const auto b = run_experiment(cfg, {4, false});
  const auto c = run_experiment(cfg, {5, false});
  CHECK(a.tables.at("chain.csv").str() == b.tables.at("chain.csv").str());
  CHECK(a.tables.at("data.csv").str() != c.tables.at("data.csv").str());
}

TEST_CASE("outputs and manifest") {
  const std::string text = "experiment: toy-gamma\nmaster_seed: 2\nmodel: {a: [2]}\nkernel: {N_max: 5}\n";
  const auto cfg = YAML::Load(text);
  const auto out = run_experiment(cfg, {2, false});
  const auto dir = std::filesystem::temp_directory_path() / "mhaar_test_cli";
  std::filesystem::remove_all(dir);
  write_outputs(dir.string(), text, cfg, out, 2, 3, 0.25);
  std::ifstream g(dir / "gamma.csv");
  std::string header;
  std::getline(g, header);
  CHECK(header == "a,N,pflip,relaxation_time,gamma");
  const auto m = nlohmann::json::parse(std::ifstream(dir / "manifest.json"));
  CHECK(m["seed"] == 2);
  CHECK(m["threads"] == 3);
  CHECK(m["config_sha1"] == git_blob_sha1(text));
  CHECK(m["config"]["model"]["a"][0] == 2.0);
  CHECK(m.contains("library_version"));
  CHECK(m["wall_clock_seconds"] == 0.25);
  std::filesystem::remove_all(dir);
}
