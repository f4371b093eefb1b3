#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "park/estimator.hpp"

namespace park {

/// Target function f*(x) = sum_s w_s K(z_s, x), held by its support points.
struct GroundTruth {
  PointMatrix support;         ///< z_s
  IndexList support_indices;   ///< rows of the generating design the z_s came from
  Eigen::VectorXd weights;     ///< w_s
  double sigma = 0.0;          ///< noise variance proxy is sigma^2
  Eigen::VectorXd values;      ///< f*(x_i) on the design

  /// |f*|_H^2 = w^T K_SS w.
  double norm_sq(const KernelSpec& spec) const;
  Eigen::VectorXd evaluate(const KernelSpec& spec, const PointMatrix& X) const;
};

namespace diagnostics {

/// Eigenvalues at or below this fraction of the trace are null directions.
inline constexpr double kNullThreshold = 1e-10;

/// (1/n) sum_i (f(x_i) - f*(x_i))^2
double excess_risk(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truth);

struct RiskDecomposition {
  double total = 0.0;               ///< R of the partitioned estimator
  std::vector<double> cell_risk;    ///< R_q over each cell's own points
  std::vector<double> fractions;    ///< rho_q
  double weighted_sum = 0.0;        ///< sum_q R_q rho_q
  double relative_gap = 0.0;        ///< |total - weighted_sum| / max(total, tiny)
};

/// Local risks of `model` against f* values on its training design.
RiskDecomposition risk_decomposition(const ParkModel& model, const PointMatrix& X,
                                     const Eigen::VectorXd& truth_values);

/// N(lambda) = sum_i s_i / (s_i + lambda), s_i the eigenvalues of K / n.
double effective_dimension(const Eigen::MatrixXd& K, double lambda, Index n);

struct LocalDimensions {
  std::vector<double> n_q;        ///< N_q(lambda_q)
  std::vector<double> n_inf_q;    ///< N_{inf,q}(lambda_q)
  std::vector<double> top_eig_q;  ///< lambda_max(T_q)
};

/// N_q and N_{inf,q} per cell from the spectrum of K_q / n_q. N_{inf,q} uses
/// the leverage identity n_q [L (L + lambda I)^{-1}]_ii with L = K_q / n_q.
LocalDimensions local_effective_dimensions(const PointMatrix& X, const Partition& partition,
                                           const KernelSpec& spec,
                                           const std::vector<double>& lambdas);

struct AngleReport {
  Eigen::MatrixXd cosines;   ///< pairwise cos of the first principal angle; diagonal 1
  double cos_theta = 0.0;    ///< max over distinct pairs
  std::vector<Index> skipped_cells;
};

/// cos angle(H_q, H_k) = largest singular value of K_qq^{+1/2} K_qk K_kk^{+1/2}.
AngleReport principal_angles(const Partition& partition, const PointMatrix& X,
                             const KernelSpec& spec);

struct ProjectionNorms {
  std::vector<double> per_cell;  ///< |P_q f*|_H^2
  double total_norm_sq = 0.0;    ///< |f*|_H^2
  double sum() const;
};

ProjectionNorms projection_norms(const GroundTruth& truth, const Partition& partition,
                                 const PointMatrix& X, const KernelSpec& spec);

struct Verdict {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;          ///< rhs - lhs
  bool pass = false;
  bool conditions_met = true;  ///< side conditions of the statement hold
  std::vector<std::string> notes;
};

/// Inequality test with round-off allowance |rhs| * 1e-9 + 1e-12.
bool holds(double lhs, double rhs);

/// Smallest t with 6 sigma kappa log(1/delta) e^{-t/2} <= sqrt(lambda_q).
double required_iterations(double sigma, double kappa, double delta, double lambda_q);
/// 2 log(4 sigma^2 (|P_q f*|^2 lambda_q)^{-1/2}), the variant in terms of the projection norm.
double required_iterations_displayed(double sigma, double proj_norm_sq, double lambda_q);
/// 5 [1 + 14 N_{inf,q}] log(8 kappa^2 / (lambda_q delta)).
double required_centers(double n_inf_q, double kappa_sq, double lambda_q, double delta);

struct DiagnosticsReport {
  double lambda = 0.0;
  double delta = 0.0;
  double sigma = 0.0;
  double kappa_sq = 0.0;
  Index n = 0;
  Index q = 0;
  RiskDecomposition risk;
  double effective_dim = 0.0;         ///< N(lambda)
  LocalDimensions model_dims;         ///< at the model's lambda_q
  LocalDimensions scaled_dims;        ///< at lambda / rho_q
  AngleReport angles;
  ProjectionNorms projections;
  Verdict bessel;                     ///< sum |P_q f*|^2 <= (1 + Q^2 cos) |f*|^2
  Verdict local_dimension;            ///< sum N_q(lambda/rho_q) <= (1 + k^2 cos^2/lambda) N(lambda)
  Verdict risk_bound;                 ///< excess risk bound of the partitioned estimator
  Verdict global_bound;               ///< same with global quantities, lambda_q = lambda/rho_q
};

/// Evaluates all four inequalities on one trained model.
DiagnosticsReport check_bounds(const ParkModel& model, const PointMatrix& X,
                               const GroundTruth& truth, double lambda, double delta);

nlohmann::json to_json(const DiagnosticsReport& report);
nlohmann::json to_json(const Verdict& v);

}  // namespace diagnostics
}  // namespace park
