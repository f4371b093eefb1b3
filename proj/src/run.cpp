#include "park/run.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "park/diagnostics.hpp"

namespace park {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw InputError("failed writing '" + path + "'");
}

nlohmann::json summary_json(const std::vector<double>& values) {
  const Summary s = summarize(values);
  return {{"mean", s.mean}, {"std", s.std}};
}

std::vector<double> column(const nlohmann::json& trials, const char* key) {
  std::vector<double> out;
  for (const auto& t : trials)
    if (t.contains(key)) out.push_back(t[key].get<double>());
  return out;
}

ParkModel exact_as_park(const PointMatrix& X, const Eigen::VectorXd& Y, const KernelSpec& spec,
                        double lambda) {
  ParkModel model;
  model.spec = spec;
  model.lambda = lambda;
  model.m = X.rows();
  model.t = 0;
  model.partition = Partition::from_assignment({0}, std::vector<Index>(X.rows(), 0));
  model.centroids = X.topRows(1);
  LocalModel local;
  local.centers.center_indices.resize(X.rows());
  std::iota(local.centers.center_indices.begin(), local.centers.center_indices.end(), Index{0});
  local.centers.points = X;
  local.coefficients = exact_krr(X, Y, spec, lambda);
  local.lambda = lambda;
  local.n = X.rows();
  model.cells.push_back(std::move(local));
  model.hyper.push_back({lambda, X.rows()});
  return model;
}

}  // namespace

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / double(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / double(values.size() - 1));
  }
  return s;
}

TrialSeeds trial_seeds(const RunConfig& config, int trial) {
  const auto k = static_cast<std::uint64_t>(trial);
  return {config.partition_seed + k, config.solver_seed + k, config.split_seed + k};
}

Dataset load_data(const RunConfig& config) {
  switch (config.source) {
    case DataSource::synth: {
      SynthOptions opts = config.synth;
      opts.spec = config.kernel;
      return synth_fixed_design(opts);
    }
    case DataSource::csv: return load_csv(config.data_path, config.csv);
    case DataSource::cache: return load_dataset(config.data_path);
  }
  throw InputError("unknown data source");
}

KernelSpec resolve_kernel(const RunConfig& config, const Dataset& data) {
  KernelSpec spec = config.kernel;
  if (config.median_bandwidth && spec.family != KernelFamily::linear)
    spec.bandwidth = median_bandwidth(data.X, 1000, config.split_seed);
  spec.validate();
  return spec;
}

FitResult fit(const RunConfig& config, const KernelSpec& spec, const PointMatrix& X,
              const Eigen::VectorXd& Y, const TrialSeeds& seeds) {
  SolverOptions solver;
  solver.t = config.t;
  solver.tol = config.tol;
  solver.block_rows = config.block_rows;

  FitResult result;
  switch (config.mode) {
    case RunMode::park:
    case RunMode::park_uni: {
      ParkConfig pc;
      pc.q = config.q;
      pc.mode = config.mode == RunMode::park_uni ? CentroidMode::uniform : config.partition_mode;
      pc.partition_seed = seeds.partition;
      pc.lambda = config.lambda;
      pc.m = config.m;
      pc.solver = solver;
      pc.solver_seed = seeds.solver;
      pc.scale = config.scale;
      pc.parallel = config.parallel;
      ParkModel model = park_train(X, Y, spec, pc);
      result.init_seconds = model.timing.init_seconds;
      result.train_seconds = model.timing.train_seconds;
      result.model = std::move(model);
      break;
    }
    case RunMode::dnc_v1:
    case RunMode::dnc_v2: {
      DncConfig dc;
      dc.q = config.q;
      dc.split_seed = seeds.partition;
      dc.lambda = config.lambda;
      dc.m = config.m;
      dc.center_multiplier = config.mode == RunMode::dnc_v2 ? config.center_multiplier : 1.0;
      dc.solver = solver;
      dc.solver_seed = seeds.solver;
      dc.parallel = config.parallel;
      DncModel model = dnc_train(X, Y, spec, dc);
      result.init_seconds = model.timing.init_seconds;
      result.train_seconds = model.timing.train_seconds;
      result.model = std::move(model);
      break;
    }
    case RunMode::falkon_global: {
      ParkModel model = falkon_global_train(X, Y, spec, config.lambda, config.m, solver, seeds.solver);
      result.train_seconds = model.timing.total();
      result.model = std::move(model);
      break;
    }
    case RunMode::krr_exact: {
      const auto start = Clock::now();
      result.model = exact_as_park(X, Y, spec, config.lambda);
      result.train_seconds = seconds_since(start);
      break;
    }
  }
  return result;
}

Eigen::VectorXd predict(const AnyModel& model, const PointMatrix& X) {
  return std::visit(
      [&](const auto& m) -> Eigen::VectorXd {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, ParkModel>) return park_predict(m, X);
        else return dnc_predict(m, X);
      },
      model);
}

std::string serialize(const AnyModel& model) {
  return std::visit([](const auto& m) { return serialize(m); }, model);
}

AnyModel deserialize_any(const std::string& bytes) {
  if (peek_model_kind(bytes) == ModelKind::partitioned) return deserialize_park(bytes);
  return deserialize_dnc(bytes);
}

nlohmann::json run(const RunConfig& config) {
  nlohmann::json report;
  report["tool"] = "park";
  report["status"] = "ok";
  report["config"] = to_json(config);
  try {
    config.validate();
    const Dataset data = load_data(config);
    data.validate();
    const KernelSpec spec = resolve_kernel(config, data);
    report["resolved"] = {{"kernel.family", std::string(to_string(spec.family))},
                          {"kernel.bandwidth", spec.bandwidth},
                          {"data.name", data.name},
                          {"data.n", data.n()},
                          {"data.d", data.d()},
                          {"data.task", to_string(data.task)},
                          {"data.has_truth", data.truth.has_value()}};

    nlohmann::json trials = nlohmann::json::array();
    for (int k = 0; k < config.trials; ++k) {
      const TrialSeeds seeds = trial_seeds(config, k);
      const Split split = train_test_split(data.n(), config.test_fraction, seeds.split);
      const Dataset train = split.test.empty() ? data : subset(data, split.train);
      const Dataset test = split.test.empty() ? data : subset(data, split.test);

      FitResult fitted = fit(config, spec, train.X, train.Y, seeds);
      const auto t0 = Clock::now();
      const Eigen::VectorXd pred = predict(fitted.model, test.X);
      const double predict_seconds = seconds_since(t0);

      nlohmann::json rec;
      rec["trial"] = k;
      rec["seeds"] = {{"partition", seeds.partition}, {"solver", seeds.solver}, {"split", seeds.split}};
      rec["n_train"] = train.n();
      rec["n_test"] = test.n();
      rec["error"] = metrics::evaluate(config.metric, pred, test.Y);
      rec["init"] = fitted.init_seconds;
      rec["train"] = fitted.train_seconds;
      rec["total"] = fitted.init_seconds + fitted.train_seconds;
      rec["predict"] = predict_seconds;
      if (const auto* pm = std::get_if<ParkModel>(&fitted.model)) rec["cells"] = pm->num_cells();

      if (train.truth) {
        const Eigen::VectorXd fit_train = predict(fitted.model, train.X);
        rec["excess_risk"] = diagnostics::excess_risk(fit_train, train.truth->values);
        const auto* pm = std::get_if<ParkModel>(&fitted.model);
        std::string skipped;
        if (!pm) skipped = "model is not partitioned";
        else if (pm->num_cells() < 2) skipped = "fewer than two cells";
        else if (!(spec == data.truth_kernel)) skipped = "kernel differs from the kernel of f*";
        else if (train.n() > config.diagnostics_max_n) skipped = "training set exceeds run.diagnostics_max_n";
        if (config.diagnostics && skipped.empty())
          rec["diagnostics"] = diagnostics::to_json(
              diagnostics::check_bounds(*pm, train.X, *train.truth, config.lambda, config.delta));
        else if (config.diagnostics)
          rec["diagnostics_skipped"] = skipped;
      }
      if (k == 0 && !config.model_path.empty()) save_model_file(config.model_path, serialize(fitted.model));
      trials.push_back(std::move(rec));
    }
    report["trials"] = trials;
    nlohmann::json summary;
    for (const char* key : {"error", "init", "train", "total", "predict", "excess_risk"}) {
      const auto values = column(trials, key);
      if (!values.empty()) summary[key] = summary_json(values);
    }
    report["summary"] = summary;
  } catch (const Error& e) {
    report["status"] = "error";
    report["error"] = {{"type", dynamic_cast<const NumericalError*>(&e) ? "numerical" : "input"},
                       {"message", e.what()}};
    if (!config.report_path.empty()) write_text(config.report_path, report.dump(2) + "\n");
    throw;
  }
  if (!config.report_path.empty()) write_text(config.report_path, report.dump(2) + "\n");
  if (!config.csv_path.empty()) write_text(config.csv_path, table_csv({report}));
  return report;
}

nlohmann::json bench(const RunConfig& config, const std::vector<RunMode>& modes) {
  if (modes.empty()) throw InputError("bench: no modes given");
  std::vector<nlohmann::json> reports;
  for (RunMode mode : modes) {
    RunConfig c = config;
    c.mode = mode;
    c.report_path.clear();
    c.csv_path.clear();
    c.model_path.clear();
    reports.push_back(run(c));
  }
  nlohmann::json out;
  out["tool"] = "park";
  out["status"] = "ok";
  out["runs"] = reports;
  if (!config.report_path.empty()) write_text(config.report_path, out.dump(2) + "\n");
  if (!config.csv_path.empty()) write_text(config.csv_path, table_csv(reports));
  return out;
}

std::string table_csv(const std::vector<nlohmann::json>& reports) {
  std::ostringstream out;
  out.precision(17);
  out << "method,metric,error,error_std,init,init_std,train,train_std,total,total_std\n";
  for (const auto& r : reports) {
    const auto& s = r.at("summary");
    out << r.at("config").at("run.mode").get<std::string>() << ','
        << r.at("config").at("run.metric").get<std::string>();
    for (const char* key : {"error", "init", "train", "total"})
      out << ',' << s.at(key).at("mean").get<double>() << ',' << s.at(key).at("std").get<double>();
    out << '\n';
  }
  return out.str();
}

}  // namespace park
