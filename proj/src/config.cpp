#include "park/config.hpp"

#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

namespace park {

RunMode parse_run_mode(const std::string& name) {
  if (name == "park") return RunMode::park;
  if (name == "park-uni") return RunMode::park_uni;
  if (name == "dnc-v1") return RunMode::dnc_v1;
  if (name == "dnc-v2") return RunMode::dnc_v2;
  if (name == "falkon-global") return RunMode::falkon_global;
  if (name == "krr-exact") return RunMode::krr_exact;
  throw InputError("unknown run mode '" + name + "'");
}

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::park: return "park";
    case RunMode::park_uni: return "park-uni";
    case RunMode::dnc_v1: return "dnc-v1";
    case RunMode::dnc_v2: return "dnc-v2";
    case RunMode::falkon_global: return "falkon-global";
    case RunMode::krr_exact: return "krr-exact";
  }
  return "?";
}

DataSource parse_data_source(const std::string& name) {
  if (name == "synth") return DataSource::synth;
  if (name == "csv") return DataSource::csv;
  if (name == "cache") return DataSource::cache;
  throw InputError("unknown data source '" + name + "'");
}

std::string to_string(DataSource source) {
  switch (source) {
    case DataSource::synth: return "synth";
    case DataSource::csv: return "csv";
    case DataSource::cache: return "cache";
  }
  return "?";
}

void RunConfig::validate() const {
  kernel.validate();
  if (q < 1) throw InputError("partition.q must be >= 1");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InputError("solver.lambda must be positive");
  if (m < 1) throw InputError("solver.m must be >= 1");
  if (t < 0) throw InputError("solver.t must be >= 0");
  if (!(tol >= 0.0)) throw InputError("solver.tol must be >= 0");
  if (block_rows < 1) throw InputError("solver.block_rows must be >= 1");
  if (!(center_multiplier >= 1.0)) throw InputError("dnc.center_multiplier must be >= 1");
  if (trials < 1) throw InputError("run.trials must be >= 1");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw InputError("run.test_fraction must lie in [0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("run.delta must lie in (0, 1)");
  if (diagnostics_max_n < 0) throw InputError("run.diagnostics_max_n must be >= 0");
  if (source != DataSource::synth && data_path.empty()) throw InputError("data.path is required for csv and cache sources");
  if (source == DataSource::synth) {
    if (synth.n < 1 || synth.d < 1 || synth.clusters < 1) throw InputError("synth.n, synth.d and synth.clusters must be >= 1");
    if (!(synth.sigma >= 0.0)) throw InputError("synth.sigma must be >= 0");
  }
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
    throw InputError(key + ": expected an integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw InputError(key + ": expected a finite number, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw InputError(key + ": expected true or false, got '" + v + "'");
}

std::string real_text(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string bool_text(bool v) { return v ? "true" : "false"; }

template <typename T>
ConfigKey integer_key(std::string name, std::string help, T RunConfig::*field) {
  return {name, KeyKind::integer, std::move(help),
          [field](const RunConfig& c) { return std::to_string(c.*field); },
          [field, name](RunConfig& c, const std::string& v) { c.*field = parse_int<T>(name, v); }};
}

ConfigKey real_key(std::string name, std::string help, double RunConfig::*field) {
  return {name, KeyKind::real, std::move(help),
          [field](const RunConfig& c) { return real_text(c.*field); },
          [field, name](RunConfig& c, const std::string& v) { c.*field = parse_real(name, v); }};
}

ConfigKey bool_key(std::string name, std::string help, bool RunConfig::*field) {
  return {name, KeyKind::boolean, std::move(help),
          [field](const RunConfig& c) { return bool_text(c.*field); },
          [field, name](RunConfig& c, const std::string& v) { c.*field = parse_bool(name, v); }};
}

ConfigKey text_key(std::string name, std::string help, std::string RunConfig::*field) {
  return {name, KeyKind::text, std::move(help),
          [field](const RunConfig& c) { return c.*field; },
          [field](RunConfig& c, const std::string& v) { c.*field = v; }};
}

std::vector<ConfigKey> make_keys() {
  using C = RunConfig;
  std::vector<ConfigKey> k;
  k.push_back({"kernel.family", KeyKind::text, "gaussian | laplacian | linear",
               [](const C& c) { return std::string(to_string(c.kernel.family)); },
               [](C& c, const std::string& v) { c.kernel.family = parse_kernel_family(v); }});
  k.push_back({"kernel.bandwidth", KeyKind::real, "kernel bandwidth sigma",
               [](const C& c) { return real_text(c.kernel.bandwidth); },
               [](C& c, const std::string& v) { c.kernel.bandwidth = parse_real("kernel.bandwidth", v); }});
  k.push_back(bool_key("kernel.median", "set the bandwidth by the median heuristic", &C::median_bandwidth));

  k.push_back(integer_key("partition.q", "number of cells Q", &C::q));
  k.push_back({"partition.mode", KeyKind::text, "greedy | uniform (ignored by park-uni, which is uniform)",
               [](const C& c) { return to_string(c.partition_mode); },
               [](C& c, const std::string& v) { c.partition_mode = parse_centroid_mode(v); }});
  k.push_back(integer_key("partition.seed", "seed of uniform centroid sampling", &C::partition_seed));

  k.push_back(real_key("solver.lambda", "global regularization lambda", &C::lambda));
  k.push_back(integer_key("solver.m", "global Nystrom budget m", &C::m));
  k.push_back(integer_key("solver.t", "CG iterations per cell", &C::t));
  k.push_back(real_key("solver.tol", "relative residual stop, 0 runs all t iterations", &C::tol));
  k.push_back(integer_key("solver.block_rows", "rows of K_nm materialized at once", &C::block_rows));
  k.push_back(integer_key("solver.seed", "seed of Nystrom center sampling", &C::solver_seed));
  k.push_back(bool_key("solver.scale", "lambda_q = lambda / rho_q and m_q = ceil(m rho_q)", &C::scale));
  k.push_back(bool_key("solver.parallel", "train cells concurrently", &C::parallel));

  k.push_back(real_key("dnc.center_multiplier", "center multiplier of dnc-v2", &C::center_multiplier));

  k.push_back({"run.mode", KeyKind::text, "park | park-uni | dnc-v1 | dnc-v2 | falkon-global | krr-exact",
               [](const C& c) { return to_string(c.mode); },
               [](C& c, const std::string& v) { c.mode = parse_run_mode(v); }});
  k.push_back(integer_key("run.trials", "repeated trials with seeds offset by the trial index", &C::trials));
  k.push_back({"run.metric", KeyKind::text, "rmse | mse | c-err | 1-auc",
               [](const C& c) { return to_string(c.metric); },
               [](C& c, const std::string& v) { c.metric = parse_metric(v); }});
  k.push_back(real_key("run.test_fraction", "held-out fraction; 0 evaluates on the training set", &C::test_fraction));
  k.push_back(integer_key("run.split_seed", "seed of the train/test split", &C::split_seed));
  k.push_back(real_key("run.delta", "confidence level of the bound checks", &C::delta));
  k.push_back(bool_key("run.diagnostics", "evaluate the bound checks when f* is known", &C::diagnostics));
  k.push_back(integer_key("run.diagnostics_max_n", "largest training set for the O(n^3) bound checks",
                          &C::diagnostics_max_n));

  k.push_back({"data.source", KeyKind::text, "synth | csv | cache",
               [](const C& c) { return to_string(c.source); },
               [](C& c, const std::string& v) { c.source = parse_data_source(v); }});
  k.push_back(text_key("data.path", "csv file or dataset cache", &C::data_path));
  k.push_back({"data.label_column", KeyKind::integer, "label column, negative counts from the end",
               [](const C& c) { return std::to_string(c.csv.label_column); },
               [](C& c, const std::string& v) { c.csv.label_column = parse_int<int>("data.label_column", v); }});
  k.push_back({"data.delimiter", KeyKind::text, "single delimiter character; 'tab' for tabs",
               [](const C& c) { return c.csv.delimiter == '\t' ? std::string("tab") : std::string(1, c.csv.delimiter); },
               [](C& c, const std::string& v) {
                 if (v == "tab") c.csv.delimiter = '\t';
                 else if (v.size() == 1) c.csv.delimiter = v[0];
                 else throw InputError("data.delimiter: expected one character");
               }});
  k.push_back({"data.header", KeyKind::boolean, "first line is a header",
               [](const C& c) { return bool_text(c.csv.header); },
               [](C& c, const std::string& v) { c.csv.header = parse_bool("data.header", v); }});
  k.push_back({"data.task", KeyKind::text, "regression | binary",
               [](const C& c) { return to_string(c.csv.task); },
               [](C& c, const std::string& v) { c.csv.task = parse_task(v); }});

  auto synth_int = [&](std::string name, std::string help, Index SynthOptions::*f) {
    k.push_back({name, KeyKind::integer, std::move(help),
                 [f](const C& c) { return std::to_string(c.synth.*f); },
                 [f, name](C& c, const std::string& v) { c.synth.*f = parse_int<Index>(name, v); }});
  };
  auto synth_real = [&](std::string name, std::string help, double SynthOptions::*f) {
    k.push_back({name, KeyKind::real, std::move(help),
                 [f](const C& c) { return real_text(c.synth.*f); },
                 [f, name](C& c, const std::string& v) { c.synth.*f = parse_real(name, v); }});
  };
  synth_int("synth.n", "number of points", &SynthOptions::n);
  synth_int("synth.d", "input dimension", &SynthOptions::d);
  synth_int("synth.clusters", "number of gaussian blobs", &SynthOptions::clusters);
  synth_real("synth.sigma", "noise standard deviation", &SynthOptions::sigma);
  k.push_back({"synth.seed", KeyKind::integer, "generator seed",
               [](const C& c) { return std::to_string(c.synth.seed); },
               [](C& c, const std::string& v) { c.synth.seed = parse_int<std::uint64_t>("synth.seed", v); }});
  synth_real("synth.separation", "blob center spread in units of blob_std", &SynthOptions::separation);
  synth_real("synth.blob_std", "blob standard deviation", &SynthOptions::blob_std);
  k.push_back({"synth.layout", KeyKind::text, "random | axes | rays",
               [](const C& c) { return to_string(c.synth.layout); },
               [](C& c, const std::string& v) { c.synth.layout = parse_layout(v); }});
  synth_real("synth.sparsity", "fraction of points in the support of f*", &SynthOptions::sparsity);

  k.push_back(text_key("output.report", "JSON report path", &C::report_path));
  k.push_back(text_key("output.csv", "CSV table path", &C::csv_path));
  k.push_back(text_key("output.model", "model artifact path", &C::model_path));
  return k;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = make_keys();
  return keys;
}

const ConfigKey& find_key(const std::string& name) {
  for (const ConfigKey& k : config_keys())
    if (k.name == name) return k;
  throw InputError("unknown config key '" + name + "'");
}

void set_key(RunConfig& config, const std::string& key, const std::string& value) {
  find_key(key).set(config, value);
}

std::string get_key(const RunConfig& config, const std::string& key) {
  return find_key(key).get(config);
}

void apply_config_text(RunConfig& config, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InputError("config line " + std::to_string(line_no) + ": expected key = value");
    try {
      set_key(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const InputError& e) {
      throw InputError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path + "'");
  apply_config_text(config, std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()));
}

nlohmann::json to_json(const RunConfig& config) {
  nlohmann::json j = nlohmann::json::object();
  for (const ConfigKey& k : config_keys()) {
    const std::string v = k.get(config);
    switch (k.kind) {
      case KeyKind::integer:
        if (!v.empty() && v[0] == '-') j[k.name] = std::stoll(v);
        else j[k.name] = std::stoull(v);
        break;
      case KeyKind::real: j[k.name] = parse_real(k.name, v); break;
      case KeyKind::boolean: j[k.name] = v == "true"; break;
      case KeyKind::text: j[k.name] = v; break;
    }
  }
  return j;
}

RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("config JSON must be an object");
  RunConfig config;
  for (const auto& [key, value] : j.items()) {
    if (value.is_string()) set_key(config, key, value.get<std::string>());
    else if (value.is_boolean()) set_key(config, key, value.get<bool>() ? "true" : "false");
    else if (value.is_number_float()) set_key(config, key, real_text(value.get<double>()));
    else if (value.is_number_unsigned()) set_key(config, key, std::to_string(value.get<std::uint64_t>()));
    else if (value.is_number_integer()) set_key(config, key, std::to_string(value.get<std::int64_t>()));
    else throw InputError("config JSON: unsupported value for '" + key + "'");
  }
  return config;
}

}  // namespace park
