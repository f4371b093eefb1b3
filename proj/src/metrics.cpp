#include "park/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "park/errors.hpp"

namespace park {

Metric parse_metric(const std::string& name) {
  if (name == "rmse") return Metric::rmse;
  if (name == "mse") return Metric::mse;
  if (name == "c-err" || name == "c_err") return Metric::c_err;
  if (name == "1-auc" || name == "auc") return Metric::one_minus_auc;
  throw InputError("unknown metric '" + name + "'");
}

std::string to_string(Metric metric) {
  switch (metric) {
    case Metric::rmse: return "rmse";
    case Metric::mse: return "mse";
    case Metric::c_err: return "c-err";
    case Metric::one_minus_auc: return "1-auc";
  }
  return "?";
}

namespace metrics {

namespace {
void check(const Eigen::VectorXd& pred, const Eigen::VectorXd& y) {
  if (pred.size() != y.size()) throw InputError("metric: length mismatch");
  if (y.size() == 0) throw InputError("metric: empty input");
}
}  // namespace

double mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& y) {
  check(pred, y);
  return (pred - y).squaredNorm() / double(y.size());
}

double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& y) { return std::sqrt(mse(pred, y)); }

double classification_error(const Eigen::VectorXd& pred, const Eigen::VectorXd& y) {
  check(pred, y);
  Eigen::Index wrong = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double label = pred(i) >= 0.0 ? 1.0 : -1.0;
    if (label != (y(i) > 0.0 ? 1.0 : -1.0)) ++wrong;
  }
  return double(wrong) / double(y.size());
}

double auc(const Eigen::VectorXd& score, const Eigen::VectorXd& y) {
  check(score, y);
  const Eigen::Index n = y.size();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return score(a) < score(b); });
  // Mid-ranks over tied groups, 1-based.
  double pos_rank_sum = 0.0;
  Eigen::Index n_pos = 0;
  for (Eigen::Index i = 0; i < n;) {
    Eigen::Index j = i;
    while (j < n && score(order[j]) == score(order[i])) ++j;
    const double rank = 0.5 * double(i + 1 + j);
    for (Eigen::Index k = i; k < j; ++k)
      if (y(order[k]) > 0.0) {
        pos_rank_sum += rank;
        ++n_pos;
      }
    i = j;
  }
  const Eigen::Index n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw InputError("auc: needs both classes");
  return (pos_rank_sum - 0.5 * double(n_pos) * double(n_pos + 1)) / (double(n_pos) * double(n_neg));
}

double evaluate(Metric metric, const Eigen::VectorXd& pred, const Eigen::VectorXd& y) {
  switch (metric) {
    case Metric::rmse: return rmse(pred, y);
    case Metric::mse: return mse(pred, y);
    case Metric::c_err: return classification_error(pred, y);
    case Metric::one_minus_auc: return 1.0 - auc(pred, y);
  }
  return 0.0;
}

}  // namespace metrics
}  // namespace park
