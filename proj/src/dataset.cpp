#include "park/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "park/binary_io.hpp"

namespace park {

Task parse_task(const std::string& name) {
  if (name == "regression") return Task::regression;
  if (name == "binary" || name == "classification") return Task::binary;
  throw InputError("unknown task '" + name + "'");
}

std::string to_string(Task task) { return task == Task::regression ? "regression" : "binary"; }

BlobLayout parse_layout(const std::string& name) {
  if (name == "random") return BlobLayout::random;
  if (name == "axes") return BlobLayout::axes;
  if (name == "rays") return BlobLayout::rays;
  throw InputError("unknown blob layout '" + name + "'");
}

std::string to_string(BlobLayout layout) {
  switch (layout) {
    case BlobLayout::random: return "random";
    case BlobLayout::axes: return "axes";
    case BlobLayout::rays: return "rays";
  }
  return "?";
}

void Dataset::validate() const {
  if (X.rows() < 1 || X.cols() < 1) throw InputError("dataset is empty");
  if (Y.size() != X.rows()) throw InputError("dataset: Y length differs from row count");
  if (!X.allFinite() || !Y.allFinite()) throw InputError("dataset has non-finite entries");
  if (truth && truth->values.size() != X.rows())
    throw InputError("dataset: ground truth values do not match row count");
}

Dataset subset(const Dataset& data, const IndexList& idx) {
  Dataset out;
  out.name = data.name;
  out.task = data.task;
  out.truth_kernel = data.truth_kernel;
  out.X = gather_rows(data.X, idx);
  out.Y = gather(data.Y, idx);
  if (data.truth) {
    out.truth = data.truth;
    out.truth->values = gather(data.truth->values, idx);
  }
  return out;
}

Dataset synth_fixed_design(const SynthOptions& o) {
  if (o.n < 1 || o.d < 1 || o.clusters < 1) throw InputError("synth: n, d and clusters must be >= 1");
  if (!(o.sigma >= 0.0)) throw InputError("synth: sigma must be nonnegative");
  if (!(o.blob_std > 0.0) || !(o.separation >= 0.0)) throw InputError("synth: bad blob geometry");
  if (!(o.sparsity > 0.0 && o.sparsity <= 1.0)) throw InputError("synth: sparsity must lie in (0, 1]");
  if (o.layout != BlobLayout::random && o.clusters > 2 * o.d)
    throw InputError("synth: axis layouts support at most 2 d clusters");
  o.spec.validate();

  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> normal;
  const double radius = o.separation * o.blob_std;

  PointMatrix centers = PointMatrix::Zero(o.clusters, o.d);
  if (o.layout == BlobLayout::random) {
    std::uniform_real_distribution<double> unit(-0.5, 0.5);
    if (o.clusters > 1)
      for (Index c = 0; c < o.clusters; ++c)
        for (Index k = 0; k < o.d; ++k) centers(c, k) = radius * unit(rng);
  } else {
    for (Index c = 0; c < o.clusters; ++c) centers(c, c % o.d) = c < o.d ? radius : -radius;
  }

  Dataset data;
  data.name = "synthetic";
  data.X.resize(o.n, o.d);
  for (Index i = 0; i < o.n; ++i) {
    const Index c = i % o.clusters;
    if (o.layout == BlobLayout::rays) {
      data.X.row(i).setZero();
      data.X(i, c % o.d) = centers(c, c % o.d) + o.blob_std * normal(rng);
    } else {
      for (Index k = 0; k < o.d; ++k) data.X(i, k) = centers(c, k) + o.blob_std * normal(rng);
    }
  }

  const Index k = std::max<Index>(1, static_cast<Index>(std::llround(o.sparsity * double(o.n))));
  GroundTruth truth;
  truth.support_indices = uniform_centroids(o.n, std::min(k, o.n), rng());
  truth.support = gather_rows(data.X, truth.support_indices);
  truth.weights.resize(truth.support.rows());
  for (Index s = 0; s < truth.weights.size(); ++s) truth.weights(s) = normal(rng);
  const double norm_sq = truth.norm_sq(o.spec);
  if (!(norm_sq > 0.0)) throw NumericalError("synth: target function has zero RKHS norm");
  truth.weights /= std::sqrt(norm_sq);
  truth.sigma = o.sigma;
  truth.values = truth.evaluate(o.spec, data.X);

  data.Y.resize(o.n);
  for (Index i = 0; i < o.n; ++i) data.Y(i) = truth.values(i) + o.sigma * normal(rng);
  data.truth = std::move(truth);
  data.truth_kernel = o.spec;
  return data;
}

void redraw_noise(Dataset& data, double sigma, std::uint64_t seed) {
  if (!data.truth) throw InputError("redraw_noise: dataset has no ground truth");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (Index i = 0; i < data.n(); ++i) data.Y(i) = data.truth->values(i) + sigma * normal(rng);
  data.truth->sigma = sigma;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(std::string_view field, std::size_t line_no) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
    field.remove_suffix(1);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size())
    throw InputError("csv line " + std::to_string(line_no) + ": non-numeric cell '" +
                     std::string(field) + "'");
  return v;
}

}  // namespace

Dataset parse_csv(const std::string& text, const CsvSchema& schema, const std::string& name) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  bool skipped_header = !schema.header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    const auto fields = split_fields(line, schema.delimiter);
    if (width == 0) {
      width = fields.size();
      if (width < 2) throw InputError("csv line " + std::to_string(line_no) + ": need a label and at least one feature");
    } else if (fields.size() != width) {
      throw InputError("csv line " + std::to_string(line_no) + ": ragged row (" +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(width) + ")");
    }
    std::vector<double> row;
    row.reserve(width);
    for (auto f : fields) row.push_back(parse_number(f, line_no));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("csv: no data rows");
  const long label = schema.label_column < 0 ? long(width) + schema.label_column : schema.label_column;
  if (label < 0 || label >= long(width)) throw InputError("csv: label column out of range");

  Dataset data;
  data.name = name;
  data.task = schema.task;
  const Index n = static_cast<Index>(rows.size());
  data.X.resize(n, static_cast<Index>(width) - 1);
  data.Y.resize(n);
  for (Index i = 0; i < n; ++i) {
    Index k = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (long(c) == label) data.Y(i) = rows[i][c];
      else data.X(i, k++) = rows[i][c];
    }
  }
  if (schema.task == Task::binary) {
    const std::set<double> labels(data.Y.data(), data.Y.data() + n);
    if (labels.size() > 2) throw InputError("csv: binary task with more than two label values");
    const double low = *labels.begin();
    for (Index i = 0; i < n; ++i) {
      if (labels.size() == 2) data.Y(i) = data.Y(i) == low ? -1.0 : 1.0;
      else data.Y(i) = data.Y(i) > 0.0 ? 1.0 : -1.0;
    }
  }
  data.validate();
  return data;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_csv(text, schema, path);
}

namespace {
constexpr std::string_view kDatasetMagic = "PKDS1";
constexpr std::uint32_t kDatasetVersion = 1;
}  // namespace

std::string encode_dataset(const Dataset& data) {
  binary::Writer w;
  w.magic(kDatasetMagic);
  w.u32(kDatasetVersion);
  w.str(data.name);
  w.u32(data.task == Task::regression ? 0 : 1);
  w.u64(static_cast<std::uint64_t>(data.n()));
  w.u64(static_cast<std::uint64_t>(data.d()));
  for (Index i = 0; i < data.n(); ++i)
    for (Index k = 0; k < data.d(); ++k) w.f64(data.X(i, k));
  for (Index i = 0; i < data.n(); ++i) w.f64(data.Y(i));
  w.u8(data.truth ? 1 : 0);
  if (data.truth) {
    const GroundTruth& t = *data.truth;
    w.u32(static_cast<std::uint32_t>(data.truth_kernel.family));
    w.f64(data.truth_kernel.bandwidth);
    w.u64(static_cast<std::uint64_t>(t.support.rows()));
    for (Index s = 0; s < t.support.rows(); ++s)
      for (Index k = 0; k < t.support.cols(); ++k) w.f64(t.support(s, k));
    for (Index s = 0; s < t.support.rows(); ++s) {
      const Index idx = s < static_cast<Index>(t.support_indices.size()) ? t.support_indices[s] : -1;
      w.u64(static_cast<std::uint64_t>(idx));
    }
    for (Index s = 0; s < t.weights.size(); ++s) w.f64(t.weights(s));
    w.f64(t.sigma);
    for (Index i = 0; i < t.values.size(); ++i) w.f64(t.values(i));
  }
  return w.take();
}

Dataset decode_dataset(const std::string& bytes) {
  binary::Reader r(bytes);
  r.expect_magic(kDatasetMagic);
  if (r.u32() != kDatasetVersion) throw InputError("dataset cache: unsupported version");
  Dataset data;
  data.name = r.str();
  const std::uint32_t task = r.u32();
  if (task > 1) throw InputError("dataset cache: unknown task");
  data.task = task == 0 ? Task::regression : Task::binary;
  const Index n = static_cast<Index>(r.u64());
  const Index d = static_cast<Index>(r.u64());
  if (n < 1 || d < 1 || static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(d + 1) * 8 > r.remaining())
    throw InputError("dataset cache: truncated or empty");
  data.X.resize(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < d; ++k) data.X(i, k) = r.f64();
  data.Y.resize(n);
  for (Index i = 0; i < n; ++i) data.Y(i) = r.f64();
  if (r.u8() != 0) {
    GroundTruth t;
    const std::uint32_t family = r.u32();
    if (family > 2) throw InputError("dataset cache: unknown kernel family");
    data.truth_kernel.family = static_cast<KernelFamily>(family);
    data.truth_kernel.bandwidth = r.f64();
    const Index k = static_cast<Index>(r.count(8 * static_cast<std::uint64_t>(d + 2)));
    t.support.resize(k, d);
    for (Index s = 0; s < k; ++s)
      for (Index j = 0; j < d; ++j) t.support(s, j) = r.f64();
    t.support_indices.resize(k);
    for (Index s = 0; s < k; ++s) t.support_indices[s] = static_cast<Index>(r.u64());
    t.weights.resize(k);
    for (Index s = 0; s < k; ++s) t.weights(s) = r.f64();
    t.sigma = r.f64();
    t.values.resize(n);
    for (Index i = 0; i < n; ++i) t.values(i) = r.f64();
    data.truth = std::move(t);
  }
  if (!r.done()) throw InputError("dataset cache: trailing bytes");
  return data;
}

void save_dataset(const std::string& path, const Dataset& data) {
  const std::string bytes = encode_dataset(data);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("failed writing '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return decode_dataset(std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()));
}

double median_bandwidth(const PointMatrix& X, Index max_points, std::uint64_t seed) {
  if (X.rows() < 2) return 1.0;
  const IndexList rows = X.rows() > max_points ? uniform_centroids(X.rows(), max_points, seed)
                                               : [&] {
                                                   IndexList all(X.rows());
                                                   std::iota(all.begin(), all.end(), Index{0});
                                                   return all;
                                                 }();
  std::vector<double> dist;
  dist.reserve(rows.size() * (rows.size() - 1) / 2);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = i + 1; j < rows.size(); ++j)
      dist.push_back((X.row(rows[i]) - X.row(rows[j])).norm());
  auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
  std::nth_element(dist.begin(), mid, dist.end());
  return *mid > 0.0 ? *mid : 1.0;
}

Split train_test_split(Index n, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw InputError("test fraction must lie in [0, 1)");
  const Index n_test = static_cast<Index>(std::floor(test_fraction * double(n)));
  Split s;
  if (n_test == 0) {
    s.train.resize(n);
    std::iota(s.train.begin(), s.train.end(), Index{0});
    return s;
  }
  s.test = uniform_centroids(n, n_test, seed);
  std::vector<char> is_test(n, 0);
  for (Index i : s.test) is_test[i] = 1;
  for (Index i = 0; i < n; ++i)
    if (!is_test[i]) s.train.push_back(i);
  return s;
}

}  // namespace park
