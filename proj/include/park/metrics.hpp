#pragma once

#include <string>

#include <Eigen/Dense>

namespace park {

enum class Metric { rmse, mse, c_err, one_minus_auc };

Metric parse_metric(const std::string& name);
std::string to_string(Metric metric);

namespace metrics {

double mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& y);
double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& y);

/// Fraction of sign(pred) != y for labels in {-1, +1}; pred = 0 counts as +1.
double classification_error(const Eigen::VectorXd& pred, const Eigen::VectorXd& y);

/// Area under the ROC curve via the rank statistic, ties counted one half.
/// Positives are labels > 0.
double auc(const Eigen::VectorXd& score, const Eigen::VectorXd& y);

double evaluate(Metric metric, const Eigen::VectorXd& pred, const Eigen::VectorXd& y);

}  // namespace metrics
}  // namespace park
