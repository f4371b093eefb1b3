#include "park/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "park/numerics.hpp"

namespace park {

double GroundTruth::norm_sq(const KernelSpec& spec) const {
  if (weights.size() == 0) return 0.0;
  const Eigen::MatrixXd K = kernel::gram(spec, support);
  return std::max(0.0, weights.dot(K * weights));
}

Eigen::VectorXd GroundTruth::evaluate(const KernelSpec& spec, const PointMatrix& X) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
  if (weights.size() == 0) return out;
  if (support.cols() != X.cols()) throw InputError("ground truth: dimension mismatch");
  for (Index i = 0; i < X.rows(); ++i) {
    double acc = 0.0;
    for (Index s = 0; s < support.rows(); ++s)
      acc += weights(s) * kernel::eval(spec, support.row(s), X.row(i));
    out(i) = acc;
  }
  return out;
}

namespace diagnostics {

namespace {

/// Retained eigenpairs of a cell Gram matrix.
struct CellBasis {
  Eigen::VectorXd values;   ///< eigenvalues above the null threshold
  Eigen::MatrixXd vectors;  ///< matching orthonormal eigenvectors
};

CellBasis cell_basis(const Eigen::MatrixXd& K) {
  const auto eig = numerics::sym_eig(K);
  const double cut = kNullThreshold * std::max(K.trace(), 0.0);
  std::vector<Index> keep;
  for (Index k = 0; k < eig.values.size(); ++k)
    if (eig.values(k) > cut && eig.values(k) > 0.0) keep.push_back(k);
  CellBasis b;
  b.values.resize(static_cast<Index>(keep.size()));
  b.vectors.resize(K.rows(), static_cast<Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    b.values(static_cast<Index>(j)) = eig.values(keep[j]);
    b.vectors.col(static_cast<Index>(j)) = eig.vectors.col(keep[j]);
  }
  return b;
}

double relative_gap(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

Verdict make_verdict(std::string name, double lhs, double rhs) {
  Verdict v;
  v.name = std::move(name);
  v.lhs = lhs;
  v.rhs = rhs;
  v.slack = rhs - lhs;
  v.pass = holds(lhs, rhs);
  return v;
}

}  // namespace

bool holds(double lhs, double rhs) { return lhs <= rhs + 1e-9 * std::abs(rhs) + 1e-12; }

double excess_risk(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truth) {
  if (predictions.size() != truth.size()) throw InputError("excess_risk: length mismatch");
  if (predictions.size() == 0) throw InputError("excess_risk: empty input");
  return (predictions - truth).squaredNorm() / double(predictions.size());
}

RiskDecomposition risk_decomposition(const ParkModel& model, const PointMatrix& X,
                                     const Eigen::VectorXd& truth_values) {
  const Partition& p = model.partition;
  if (X.rows() != p.num_points() || truth_values.size() != X.rows())
    throw InputError("risk_decomposition: model, design and truth disagree in size");
  RiskDecomposition out;
  out.total = excess_risk(park_predict(model, X), truth_values);
  out.cell_risk.resize(p.num_cells());
  out.fractions = p.cell_fractions;
  for (Index q = 0; q < p.num_cells(); ++q) {
    double acc = 0.0;
    for (Index i : p.cells[q]) {
      const double e = local_predict(model.cells[q], model.spec, X.row(i)) - truth_values(i);
      acc += e * e;
    }
    out.cell_risk[q] = acc / double(p.cell_size(q));
    out.weighted_sum += out.cell_risk[q] * p.cell_fractions[q];
  }
  out.relative_gap = relative_gap(out.total, out.weighted_sum);
  return out;
}

double effective_dimension(const Eigen::MatrixXd& K, double lambda, Index n) {
  if (!(lambda > 0.0)) throw InputError("effective_dimension: lambda must be positive");
  if (n < 1) throw InputError("effective_dimension: n must be positive");
  const auto eig = numerics::sym_eig(K / double(n));
  double acc = 0.0;
  for (Index k = 0; k < eig.values.size(); ++k) {
    const double s = std::max(eig.values(k), 0.0);
    acc += s / (s + lambda);
  }
  return acc;
}

LocalDimensions local_effective_dimensions(const PointMatrix& X, const Partition& partition,
                                           const KernelSpec& spec,
                                           const std::vector<double>& lambdas) {
  const Index Q = partition.num_cells();
  if (static_cast<Index>(lambdas.size()) != Q)
    throw InputError("local_effective_dimensions: one lambda per cell required");
  LocalDimensions out;
  out.n_q.resize(Q);
  out.n_inf_q.resize(Q);
  out.top_eig_q.resize(Q);
  for (Index q = 0; q < Q; ++q) {
    const double lam = lambdas[q];
    if (!(lam > 0.0)) throw InputError("local_effective_dimensions: lambda must be positive");
    const double nq = double(partition.cell_size(q));
    const Eigen::MatrixXd L = kernel::gram(spec, gather_rows(X, partition.cells[q])) / nq;
    const auto eig = numerics::sym_eig(L);
    Eigen::VectorXd filter(eig.values.size());
    for (Index k = 0; k < filter.size(); ++k) {
      const double s = std::max(eig.values(k), 0.0);
      filter(k) = s / (s + lam);
    }
    out.n_q[q] = filter.sum();
    const Eigen::VectorXd leverage = eig.vectors.array().square().matrix() * filter;
    out.n_inf_q[q] = nq * leverage.maxCoeff();
    out.top_eig_q[q] = std::max(eig.values.maxCoeff(), 0.0);
  }
  return out;
}

AngleReport principal_angles(const Partition& partition, const PointMatrix& X,
                             const KernelSpec& spec) {
  const Index Q = partition.num_cells();
  if (Q < 2) throw InputError("principal_angles: at least two cells required");
  std::vector<PointMatrix> points(Q);
  std::vector<Eigen::MatrixXd> whiten(Q);  // V_r diag(s^{-1/2})
  AngleReport out;
  for (Index q = 0; q < Q; ++q) {
    points[q] = gather_rows(X, partition.cells[q]);
    const CellBasis b = cell_basis(kernel::gram(spec, points[q]));
    if (b.values.size() == 0) {
      out.skipped_cells.push_back(q);
      continue;
    }
    whiten[q] = b.vectors * b.values.cwiseSqrt().cwiseInverse().asDiagonal();
  }
  out.cosines = Eigen::MatrixXd::Identity(Q, Q);
  out.cos_theta = 0.0;
  for (Index q = 0; q < Q; ++q) {
    for (Index k = q + 1; k < Q; ++k) {
      if (whiten[q].size() == 0 || whiten[k].size() == 0) {
        out.cosines(q, k) = out.cosines(k, q) = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      const Eigen::MatrixXd cross =
          whiten[q].transpose() * kernel::gram(spec, points[q], points[k]) * whiten[k];
      Eigen::BDCSVD<Eigen::MatrixXd> svd(cross);
      const double c = std::clamp(svd.singularValues()(0), 0.0, 1.0);
      out.cosines(q, k) = out.cosines(k, q) = c;
      out.cos_theta = std::max(out.cos_theta, c);
    }
  }
  return out;
}

double ProjectionNorms::sum() const {
  double s = 0.0;
  for (double v : per_cell) s += v;
  return s;
}

ProjectionNorms projection_norms(const GroundTruth& truth, const Partition& partition,
                                 const PointMatrix& X, const KernelSpec& spec) {
  ProjectionNorms out;
  out.total_norm_sq = truth.norm_sq(spec);
  out.per_cell.resize(partition.num_cells());
  for (Index q = 0; q < partition.num_cells(); ++q) {
    const PointMatrix Xq = gather_rows(X, partition.cells[q]);
    const Eigen::VectorXd v = truth.evaluate(spec, Xq);
    const CellBasis b = cell_basis(kernel::gram(spec, Xq));
    const Eigen::VectorXd coords = b.vectors.transpose() * v;
    out.per_cell[q] = (coords.array().square() / b.values.array()).sum();
  }
  return out;
}

double required_iterations(double sigma, double kappa, double delta, double lambda_q) {
  const double arg = 6.0 * sigma * kappa * std::log(1.0 / delta) / std::sqrt(lambda_q);
  return arg > 1.0 ? 2.0 * std::log(arg) : 0.0;
}

double required_iterations_displayed(double sigma, double proj_norm_sq, double lambda_q) {
  if (proj_norm_sq <= 0.0) return std::numeric_limits<double>::infinity();
  const double arg = 4.0 * sigma * sigma / std::sqrt(proj_norm_sq * lambda_q);
  return arg > 1.0 ? 2.0 * std::log(arg) : 0.0;
}

double required_centers(double n_inf_q, double kappa_sq, double lambda_q, double delta) {
  return 5.0 * (1.0 + 14.0 * n_inf_q) * std::log(8.0 * kappa_sq / (lambda_q * delta));
}

DiagnosticsReport check_bounds(const ParkModel& model, const PointMatrix& X,
                               const GroundTruth& truth, double lambda, double delta) {
  const Partition& p = model.partition;
  if (X.rows() != p.num_points()) throw InputError("check_bounds: design does not match model");
  if (!(lambda > 0.0)) throw InputError("check_bounds: lambda must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("check_bounds: delta must lie in (0, 1)");
  if (p.num_cells() < 2) throw InputError("check_bounds: at least two cells required");

  DiagnosticsReport r;
  r.lambda = lambda;
  r.delta = delta;
  r.sigma = truth.sigma;
  r.n = p.num_points();
  r.q = p.num_cells();
  const KernelSpec& spec = model.spec;
  r.kappa_sq = kernel::diagonal(spec, X).maxCoeff();
  const double kappa = std::sqrt(r.kappa_sq);
  const double n = double(r.n);
  const double Q = double(r.q);
  const double log_d = std::log(1.0 / delta);
  const double s2 = truth.sigma * truth.sigma;

  const Eigen::VectorXd f_values =
      truth.values.size() == r.n ? truth.values : truth.evaluate(spec, X);
  r.risk = risk_decomposition(model, X, f_values);
  r.effective_dim = effective_dimension(kernel::gram(spec, X), lambda, r.n);

  std::vector<double> model_lambdas, scaled_lambdas;
  for (Index q = 0; q < r.q; ++q) {
    model_lambdas.push_back(model.hyper[q].lambda);
    scaled_lambdas.push_back(lambda / p.cell_fractions[q]);
  }
  r.model_dims = local_effective_dimensions(X, p, spec, model_lambdas);
  r.scaled_dims = local_effective_dimensions(X, p, spec, scaled_lambdas);
  r.angles = principal_angles(p, X, spec);
  r.projections = projection_norms(truth, p, X, spec);
  const double cos = r.angles.cos_theta;
  const double f_norm = r.projections.total_norm_sq;

  r.bessel = make_verdict("projection_bessel", r.projections.sum(), (1.0 + Q * Q * cos) * f_norm);

  double sum_scaled = 0.0;
  for (double v : r.scaled_dims.n_q) sum_scaled += v;
  r.local_dimension = make_verdict("local_effective_dimension", sum_scaled,
                                   (1.0 + r.kappa_sq * cos * cos / lambda) * r.effective_dim);

  // Excess risk bound with the model's own lambda_q, m_q and t.
  double bias = 0.0, variance = 0.0;
  bool compliant = true;
  std::vector<std::string> notes;
  for (Index q = 0; q < r.q; ++q) {
    const double lq = model.hyper[q].lambda;
    const double Nq = r.model_dims.n_q[q];
    bias += r.projections.per_cell[q] * lq * p.cell_fractions[q];
    variance += Nq + std::sqrt(Nq * log_d) + 2.0 * log_d;
    const std::string cell = "cell " + std::to_string(q) + ": ";
    if (lq > r.kappa_sq) {
      compliant = false;
      notes.push_back(cell + "lambda_q exceeds kappa^2");
    }
    const double need_m = required_centers(r.model_dims.n_inf_q[q], r.kappa_sq, lq, delta);
    // All cell points as centers: the Nystrom step is exact.
    const bool exact = model.cells[q].centers.size() >= p.cell_size(q);
    if (!exact && double(model.cells[q].centers.size()) < need_m) {
      compliant = false;
      notes.push_back(cell + "m_q " + std::to_string(model.cells[q].centers.size()) +
                      " below required " + std::to_string(need_m));
    }
    const double need_t = required_iterations(truth.sigma, kappa, delta, lq);
    if (double(model.t) < need_t) {
      compliant = false;
      notes.push_back(cell + "t " + std::to_string(model.t) + " below required " +
                      std::to_string(need_t));
    }
  }
  r.risk_bound = make_verdict("excess_risk_bound", r.risk.total, 16.0 * bias + s2 * variance / n);
  r.risk_bound.conditions_met = compliant;
  r.risk_bound.notes = notes;

  const double rho_min = *std::min_element(p.cell_fractions.begin(), p.cell_fractions.end());
  r.global_bound = make_verdict(
      "global_excess_risk_bound", r.risk.total,
      16.0 * (1.0 + Q * Q * cos) * f_norm * lambda +
          4.0 * s2 / n * (1.0 + r.kappa_sq * cos * cos / lambda) * r.effective_dim * log_d);
  bool scaled = true;
  for (Index q = 0; q < r.q; ++q)
    if (relative_gap(model_lambdas[q], scaled_lambdas[q]) > 1e-12) scaled = false;
  r.global_bound.conditions_met = compliant && scaled && lambda <= rho_min * r.kappa_sq;
  r.global_bound.notes = notes;
  if (!scaled) r.global_bound.notes.push_back("model lambda_q differs from lambda / rho_q");
  if (lambda > rho_min * r.kappa_sq) r.global_bound.notes.push_back("lambda exceeds rho_min kappa^2");
  return r;
}

nlohmann::json to_json(const Verdict& v) {
  return {{"name", v.name},   {"lhs", v.lhs},   {"rhs", v.rhs},
          {"slack", v.slack}, {"pass", v.pass}, {"conditions_met", v.conditions_met},
          {"notes", v.notes}};
}

nlohmann::json to_json(const DiagnosticsReport& r) {
  nlohmann::json cells = nlohmann::json::array();
  for (Index q = 0; q < r.q; ++q) {
    cells.push_back({{"cell", q},
                     {"rho", r.risk.fractions[q]},
                     {"risk", r.risk.cell_risk[q]},
                     {"N_q", r.model_dims.n_q[q]},
                     {"N_inf_q", r.model_dims.n_inf_q[q]},
                     {"N_q_scaled", r.scaled_dims.n_q[q]},
                     {"proj_norm_sq", r.projections.per_cell[q]}});
  }
  nlohmann::json pairwise = nlohmann::json::array();
  for (Index q = 0; q < r.angles.cosines.rows(); ++q) {
    std::vector<double> row(r.angles.cosines.cols());
    for (Index k = 0; k < r.angles.cosines.cols(); ++k) row[k] = r.angles.cosines(q, k);
    pairwise.push_back(row);
  }
  return {{"n", r.n},
          {"q", r.q},
          {"lambda", r.lambda},
          {"delta", r.delta},
          {"sigma", r.sigma},
          {"kappa_sq", r.kappa_sq},
          {"excess_risk", r.risk.total},
          {"risk_weighted_sum", r.risk.weighted_sum},
          {"risk_relative_gap", r.risk.relative_gap},
          {"effective_dimension", r.effective_dim},
          {"cos_theta", r.angles.cos_theta},
          {"pairwise_cos", pairwise},
          {"skipped_cells", r.angles.skipped_cells},
          {"f_norm_sq", r.projections.total_norm_sq},
          {"sum_proj_norm_sq", r.projections.sum()},
          {"cells", cells},
          {"checks",
           {to_json(r.bessel), to_json(r.local_dimension), to_json(r.risk_bound),
            to_json(r.global_bound)}}};
}

}  // namespace diagnostics
}  // namespace park
