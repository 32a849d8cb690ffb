#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "migra/dataset.hpp"
#include "migra/flows.hpp"

namespace migra {

struct GbtSpec {
  int max_depth = 3;
  int n_estimators = 100;
  double learning_rate = 0.1;
  std::size_t k = 5;

  void validate() const;
};

struct TreeNode {
  int feature = -1;  // < 0 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
};

/// Axis-aligned regression tree; a row goes left when x[feature] < threshold.
struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const noexcept;
};

class GbtModel {
 public:
  GbtModel() = default;
  GbtModel(std::vector<std::string> columns, double base_score, std::vector<RegressionTree> trees,
           std::vector<double> gains, std::vector<double> train_rmse)
      : columns_(std::move(columns)),
        base_score_(base_score),
        trees_(std::move(trees)),
        gains_(std::move(gains)),
        train_rmse_(std::move(train_rmse)) {}

  /// Raw additive prediction (may be negative).
  double predict_raw(std::span<const double> x) const noexcept;

  const std::vector<std::string>& columns() const noexcept { return columns_; }
  double base_score() const noexcept { return base_score_; }
  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }
  /// Total squared-error reduction attributed to each feature.
  const std::vector<double>& gains() const noexcept { return gains_; }
  /// gains() normalized to sum to 1 (all zeros when no split was made).
  std::vector<double> importances() const;
  /// Training RMSE after the base score and after each boosting round.
  const std::vector<double>& train_rmse() const noexcept { return train_rmse_; }

 private:
  std::vector<std::string> columns_;
  double base_score_ = 0.0;
  std::vector<RegressionTree> trees_;
  std::vector<double> gains_;
  std::vector<double> train_rmse_;
};

/// Least-squares gradient boosting: each tree fits the current residuals
/// with exact greedy variance-reduction splits, grown level by level, and
/// is added with shrinkage `learning_rate`. Single-threaded and fully
/// deterministic. Constant targets give a constant model.
GbtModel fit_gbt(const GbtSpec& spec, const ObservationTable& train);

/// Per-pair predictions clamped at 0. Errors: SchemaMismatch.
PredictedFlows predict(const GbtModel& model, const ObservationSet& obs);

void to_json(nlohmann::json& j, const GbtSpec& s);
void from_json(const nlohmann::json& j, GbtSpec& s);
void to_json(nlohmann::json& j, const GbtModel& m);
void from_json(const nlohmann::json& j, GbtModel& m);

}  // namespace migra
