#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "park/diagnostics.hpp"

namespace park {

enum class Task { regression, binary };

Task parse_task(const std::string& name);
std::string to_string(Task task);

/// Training data plus, for synthetic sets, the function that generated it.
struct Dataset {
  std::string name;
  PointMatrix X;
  Eigen::VectorXd Y;
  Task task = Task::regression;
  std::optional<GroundTruth> truth;
  KernelSpec truth_kernel;  ///< kernel f* lives in; meaningful only with truth

  Index n() const { return X.rows(); }
  Index d() const { return X.cols(); }
  void validate() const;
};

/// Rows `idx` of a dataset; ground-truth values are restricted as well.
Dataset subset(const Dataset& data, const IndexList& idx);

enum class BlobLayout {
  random,  ///< centers spread uniformly in a cube of side separation * blob_std
  axes,    ///< centers at +-separation * blob_std * e_k, isotropic blobs
  rays,    ///< points on the rays t e_k, t ~ separation * blob_std + blob_std N(0,1)
};

BlobLayout parse_layout(const std::string& name);
std::string to_string(BlobLayout layout);

struct SynthOptions {
  Index n = 1000;
  Index d = 2;
  Index clusters = 4;
  double sigma = 0.1;        ///< noise standard deviation
  std::uint64_t seed = 0;
  double separation = 6.0;   ///< in units of blob_std
  double blob_std = 1.0;
  BlobLayout layout = BlobLayout::random;
  double sparsity = 0.05;    ///< fraction of points carrying a nonzero weight in f*
  KernelSpec spec;
};

/// Fixed-design regression data y_i = f*(x_i) + eps_i with f* = sum_j w_j K(x_j, .)
/// over a sparse random support, scaled to |f*|_H = 1, and eps ~ N(0, sigma^2).
Dataset synth_fixed_design(const SynthOptions& opts);

/// Replace the noise of a synthetic dataset with a fresh draw.
void redraw_noise(Dataset& data, double sigma, std::uint64_t seed);

struct CsvSchema {
  int label_column = -1;  ///< negative counts from the end
  char delimiter = ',';
  bool header = false;
  Task task = Task::regression;
};

/// Binary labels are mapped to -1 / +1 (smaller value to -1).
Dataset load_csv(const std::string& path, const CsvSchema& schema);
Dataset parse_csv(const std::string& text, const CsvSchema& schema, const std::string& name = "csv");

/// Dataset cache: magic "PKDS1", little-endian, row-major 64-bit floats.
std::string encode_dataset(const Dataset& data);
Dataset decode_dataset(const std::string& bytes);
void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path);

/// Median pairwise Euclidean distance over at most `max_points` sampled rows.
double median_bandwidth(const PointMatrix& X, Index max_points = 1000, std::uint64_t seed = 0);

struct Split {
  IndexList train;
  IndexList test;
};

/// Seeded random split; both index lists ascending. fraction = 0 keeps every
/// row in train.
Split train_test_split(Index n, double test_fraction, std::uint64_t seed);

}  // namespace park
