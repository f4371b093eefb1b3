#pragma once

#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "park/config.hpp"

namespace park {

using AnyModel = std::variant<ParkModel, DncModel>;

struct TrialSeeds {
  std::uint64_t partition = 0;
  std::uint64_t solver = 0;
  std::uint64_t split = 0;
};

/// Trial k offsets every base seed by k.
TrialSeeds trial_seeds(const RunConfig& config, int trial);

struct FitResult {
  AnyModel model;
  double init_seconds = 0.0;
  double train_seconds = 0.0;
};

Dataset load_data(const RunConfig& config);

/// Kernel with the median heuristic applied when requested.
KernelSpec resolve_kernel(const RunConfig& config, const Dataset& data);

/// Train the estimator selected by config.mode. krr-exact yields a one-cell
/// ParkModel whose centers are all training points.
FitResult fit(const RunConfig& config, const KernelSpec& spec, const PointMatrix& X,
              const Eigen::VectorXd& Y, const TrialSeeds& seeds);

Eigen::VectorXd predict(const AnyModel& model, const PointMatrix& X);
std::string serialize(const AnyModel& model);
AnyModel deserialize_any(const std::string& bytes);

/// Runs config.trials trials and returns the report. Output files named in
/// the config are written. On a park::Error the report gets status "error"
/// and an error record, is written if a path is set, and the error is rethrown.
nlohmann::json run(const RunConfig& config);

/// One run per mode on the same data; report holds the per-mode reports.
nlohmann::json bench(const RunConfig& config, const std::vector<RunMode>& modes);

/// Table layout: method, error, init, train, total with standard deviations.
std::string table_csv(const std::vector<nlohmann::json>& reports);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  ///< sample standard deviation, 0 for one value
};

Summary summarize(const std::vector<double>& values);

}  // namespace park
