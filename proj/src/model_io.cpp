#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "park/binary_io.hpp"
#include "park/estimator.hpp"

namespace park {

namespace {

constexpr std::string_view kMagic = "PARK1";
constexpr std::uint32_t kVersion = 1;

void put_header(binary::Writer& w, ModelKind kind, const KernelSpec& spec, Index d, double lambda,
                Index m, int t) {
  w.magic(kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(kind));
  w.u32(static_cast<std::uint32_t>(spec.family));
  w.f64(spec.bandwidth);
  w.u64(static_cast<std::uint64_t>(d));
  w.f64(lambda);
  w.u64(static_cast<std::uint64_t>(m));
  w.u64(static_cast<std::uint64_t>(t));
}

struct Header {
  ModelKind kind;
  KernelSpec spec;
  Index d;
  double lambda;
  Index m;
  int t;
};

Header get_header(binary::Reader& r) {
  r.expect_magic(kMagic);
  if (r.u32() != kVersion) throw InputError("model artifact: unsupported version");
  Header h;
  const std::uint32_t kind = r.u32();
  if (kind > 1) throw InputError("model artifact: unknown model kind");
  h.kind = static_cast<ModelKind>(kind);
  const std::uint32_t family = r.u32();
  if (family > 2) throw InputError("model artifact: unknown kernel family");
  h.spec.family = static_cast<KernelFamily>(family);
  h.spec.bandwidth = r.f64();
  h.d = static_cast<Index>(r.u64());
  h.lambda = r.f64();
  h.m = static_cast<Index>(r.u64());
  h.t = static_cast<int>(r.u64());
  if (h.d < 1) throw InputError("model artifact: zero dimension");
  return h;
}

void put_indices(binary::Writer& w, const std::vector<Index>& idx) {
  w.u64(idx.size());
  for (Index i : idx) w.u64(static_cast<std::uint64_t>(i));
}

std::vector<Index> get_indices(binary::Reader& r) {
  std::vector<Index> idx(r.count(8));
  for (Index& i : idx) i = static_cast<Index>(r.u64());
  return idx;
}

void put_local(binary::Writer& w, const LocalModel& model, const CellHyper& hyper) {
  w.f64(hyper.lambda);
  w.u64(static_cast<std::uint64_t>(hyper.m));
  w.f64(model.lambda);
  w.u64(static_cast<std::uint64_t>(model.n));
  w.u64(static_cast<std::uint64_t>(model.iterations));
  w.u8(model.centers.clamped ? 1 : 0);
  put_indices(w, model.centers.center_indices);
  const PointMatrix& P = model.centers.points;
  for (Index i = 0; i < P.rows(); ++i)
    for (Index k = 0; k < P.cols(); ++k) w.f64(P(i, k));
  for (Index i = 0; i < model.coefficients.size(); ++i) w.f64(model.coefficients(i));
  w.f64(model.kernel_jitter);
  w.f64(model.probe_error);
  w.f64(model.trace.initial_residual);
  w.u64(model.trace.residual_norms.size());
  for (double v : model.trace.residual_norms) w.f64(v);
  w.u64(static_cast<std::uint64_t>(model.trace.iterations));
  w.u8(model.trace.converged ? 1 : 0);
}

LocalModel get_local(binary::Reader& r, Index d, CellHyper& hyper) {
  LocalModel model;
  hyper.lambda = r.f64();
  hyper.m = static_cast<Index>(r.u64());
  model.lambda = r.f64();
  model.n = static_cast<Index>(r.u64());
  model.iterations = static_cast<Index>(r.u64());
  model.centers.clamped = r.u8() != 0;
  model.centers.center_indices = get_indices(r);
  const Index m = static_cast<Index>(model.centers.center_indices.size());
  if (static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(d + 1) * 8 > r.remaining())
    throw InputError("model artifact: truncated local model");
  model.centers.points.resize(m, d);
  for (Index i = 0; i < m; ++i)
    for (Index k = 0; k < d; ++k) model.centers.points(i, k) = r.f64();
  model.coefficients.resize(m);
  for (Index i = 0; i < m; ++i) model.coefficients(i) = r.f64();
  model.kernel_jitter = r.f64();
  model.probe_error = r.f64();
  model.trace.initial_residual = r.f64();
  model.trace.residual_norms.resize(r.count(8));
  for (double& v : model.trace.residual_norms) v = r.f64();
  model.trace.iterations = static_cast<int>(r.u64());
  model.trace.converged = r.u8() != 0;
  return model;
}

}  // namespace

void write_model(std::ostream& out, const ParkModel& model) {
  const std::string bytes = serialize(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void write_model(std::ostream& out, const DncModel& model) {
  const std::string bytes = serialize(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string serialize(const ParkModel& model) {
  binary::Writer w;
  put_header(w, ModelKind::partitioned, model.spec, model.dim(), model.lambda, model.m, model.t);
  put_indices(w, model.partition.centroid_indices);
  put_indices(w, model.partition.assignment);
  for (Index q = 0; q < model.centroids.rows(); ++q)
    for (Index k = 0; k < model.centroids.cols(); ++k) w.f64(model.centroids(q, k));
  w.u64(model.cells.size());
  for (std::size_t q = 0; q < model.cells.size(); ++q) put_local(w, model.cells[q], model.hyper[q]);
  return w.take();
}

std::string serialize(const DncModel& model) {
  binary::Writer w;
  put_header(w, ModelKind::averaged, model.spec, model.dim(), model.lambda, model.m, model.t);
  w.u64(model.splits.size());
  for (const auto& s : model.splits) put_indices(w, s);
  w.u64(model.models.size());
  for (std::size_t q = 0; q < model.models.size(); ++q) put_local(w, model.models[q], model.hyper[q]);
  return w.take();
}

ModelKind peek_model_kind(const std::string& bytes) {
  binary::Reader r(bytes);
  return get_header(r).kind;
}

ParkModel deserialize_park(const std::string& bytes) {
  binary::Reader r(bytes);
  const Header h = get_header(r);
  if (h.kind != ModelKind::partitioned) throw InputError("model artifact: not a ParK model");
  ParkModel model;
  model.spec = h.spec;
  model.lambda = h.lambda;
  model.m = h.m;
  model.t = h.t;
  IndexList centroids = get_indices(r);
  std::vector<Index> assignment = get_indices(r);
  model.partition = Partition::from_assignment(std::move(centroids), std::move(assignment));
  model.partition.validate();
  const Index Q = model.partition.num_cells();
  model.centroids.resize(Q, h.d);
  for (Index q = 0; q < Q; ++q)
    for (Index k = 0; k < h.d; ++k) model.centroids(q, k) = r.f64();
  if (r.u64() != static_cast<std::uint64_t>(Q)) throw InputError("model artifact: cell count mismatch");
  model.cells.resize(Q);
  model.hyper.resize(Q);
  for (Index q = 0; q < Q; ++q) model.cells[q] = get_local(r, h.d, model.hyper[q]);
  if (!r.done()) throw InputError("model artifact: trailing bytes");
  return model;
}

DncModel deserialize_dnc(const std::string& bytes) {
  binary::Reader r(bytes);
  const Header h = get_header(r);
  if (h.kind != ModelKind::averaged) throw InputError("model artifact: not a D&C model");
  DncModel model;
  model.spec = h.spec;
  model.lambda = h.lambda;
  model.m = h.m;
  model.t = h.t;
  model.splits.resize(r.count(8));
  for (auto& s : model.splits) s = get_indices(r);
  const std::uint64_t count = r.u64();
  if (count != model.splits.size() || count == 0)
    throw InputError("model artifact: model count mismatch");
  model.models.resize(count);
  model.hyper.resize(count);
  for (std::size_t q = 0; q < count; ++q) model.models[q] = get_local(r, h.d, model.hyper[q]);
  if (!r.done()) throw InputError("model artifact: trailing bytes");
  return model;
}

void save_model_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("failed writing '" + path + "'");
}

std::string load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace park
