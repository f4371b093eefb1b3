#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "park/dataset.hpp"
#include "park/metrics.hpp"

namespace park {

enum class RunMode { park, park_uni, dnc_v1, dnc_v2, falkon_global, krr_exact };

RunMode parse_run_mode(const std::string& name);
std::string to_string(RunMode mode);

enum class DataSource { synth, csv, cache };

DataSource parse_data_source(const std::string& name);
std::string to_string(DataSource source);

/// Everything one run needs. Every field is reachable through a dotted key,
/// see config_keys().
struct RunConfig {
  KernelSpec kernel;
  bool median_bandwidth = false;  ///< replace kernel.bandwidth by the median heuristic

  Index q = 32;
  CentroidMode partition_mode = CentroidMode::greedy;
  std::uint64_t partition_seed = 0;

  double lambda = 1e-6;
  Index m = 1000;
  int t = 20;
  double tol = 0.0;
  Index block_rows = 4096;
  std::uint64_t solver_seed = 0;
  bool scale = true;
  bool parallel = false;

  double center_multiplier = 3.0;  ///< dnc-v2 only

  RunMode mode = RunMode::park;
  int trials = 1;
  Metric metric = Metric::rmse;
  double test_fraction = 0.0;
  std::uint64_t split_seed = 0;
  double delta = 0.05;
  bool diagnostics = true;          ///< bound checks when f* is known
  Index diagnostics_max_n = 4000;   ///< skip them above this training size

  DataSource source = DataSource::synth;
  std::string data_path;
  CsvSchema csv;
  SynthOptions synth;

  std::string report_path;
  std::string csv_path;
  std::string model_path;

  void validate() const;
};

enum class KeyKind { integer, real, boolean, text };

struct ConfigKey {
  std::string name;
  KeyKind kind;
  std::string help;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

/// All keys in a fixed order.
const std::vector<ConfigKey>& config_keys();
const ConfigKey& find_key(const std::string& name);

/// Assign one key from its text form. Unknown keys and bad values raise InputError.
void set_key(RunConfig& config, const std::string& key, const std::string& value);
std::string get_key(const RunConfig& config, const std::string& key);

/// Apply a "key = value" file; '#' starts a comment.
void apply_config_text(RunConfig& config, const std::string& text);
void apply_config_file(RunConfig& config, const std::string& path);

/// Flat object key -> typed value; doubles printed in shortest round-trip form.
nlohmann::json to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);

}  // namespace park
