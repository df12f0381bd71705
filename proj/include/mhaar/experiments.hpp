#pragma once

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mhaar {

// Raised for a config that cannot be run; the message names the field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
  std::string str() const;
};

// Fixed-precision decimal used in every CSV cell.
std::string csv_num(double v);

struct ExperimentOutput {
  std::map<std::string, CsvTable> tables;       // file name -> table
  std::map<std::string, std::string> json_files;  // debug dumps
};

struct RunOptions {
  std::uint64_t seed = 0;
  bool dump_particles = false;
};

const std::vector<std::string>& experiment_ids();

// Schema and cross-field diagnostics; empty when the config is runnable.
std::vector<std::string> validate_config(const YAML::Node& cfg);

// Runs the experiment named by cfg["experiment"]. Outputs depend only on
// (cfg, opts.seed), never on the thread count.
ExperimentOutput run_experiment(const YAML::Node& cfg, const RunOptions& opts);

// Writes the tables, the JSON dumps and manifest.json into dir.
void write_outputs(const std::string& dir, const std::string& config_text, const YAML::Node& cfg,
                   const ExperimentOutput& out, std::uint64_t seed, int threads,
                   double wall_seconds);

// Hex SHA-1 of "blob <size>\0<text>", the git object id of the text.
std::string git_blob_sha1(const std::string& text);

}  // namespace mhaar
