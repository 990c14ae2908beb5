#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "paretotune/space.hpp"

namespace paretotune {

struct ForestParams {
  std::size_t n_trees = 100;
  std::optional<std::size_t> max_depth;  // unlimited when empty
  std::size_t min_samples_leaf = 2;
  double feature_subsample = 1.0 / 3.0;
  bool bootstrap = true;
  std::uint64_t seed = 0;
  // Worker threads for tree training; 0 picks hardware concurrency. Does not
  // affect the trained model.
  std::size_t threads = 0;

  void validate() const;
  Json to_json() const;
  static ForestParams from_json(const Json& j);
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  std::int32_t left = -1;
  std::int32_t right = -1;
  double threshold = 0.0;  // x[feature] <= threshold goes left
  double value = 0.0;      // leaf prediction
};

class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  double predict(std::span<const double> x) const {
    std::int32_t i = 0;
    while (nodes_[i].feature >= 0) i = x[nodes_[i].feature] <= nodes_[i].threshold ? nodes_[i].left : nodes_[i].right;
    return nodes_[i].value;
  }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t leaf_count() const;
  std::size_t depth() const;

 private:
  std::vector<TreeNode> nodes_;
};

class ForestModel {
 public:
  ForestModel(std::vector<RegressionTree> trees, std::string objective_name, std::size_t training_size,
              std::size_t width, double y_min, double y_max);

  double predict(std::span<const double> x) const;
  std::vector<double> predict_batch(std::span<const FeatureVector> xs) const;
  // Combine already-summed tree outputs into a forest prediction. Shared by
  // predict() and bulk predictors so both produce identical values.
  double finish(double tree_sum) const;

  const std::vector<RegressionTree>& trees() const { return trees_; }
  const std::string& objective_name() const { return objective_name_; }
  std::size_t training_size() const { return training_size_; }
  std::size_t width() const { return width_; }
  double target_min() const { return y_min_; }
  double target_max() const { return y_max_; }

  // Debug dump; not a stable format.
  Json to_json() const;

 private:
  std::vector<RegressionTree> trees_;
  std::string objective_name_;
  std::size_t training_size_;
  std::size_t width_;
  double y_min_;
  double y_max_;
};

// Trains one regression forest. Training pairs are put in canonical order
// first, so any permutation of (xs, ys) yields the same model.
ForestModel fit_forest(std::span<const FeatureVector> xs, std::span<const double> ys,
                       const ForestParams& params, std::string objective_name = {});

inline double predict(const ForestModel& model, std::span<const double> x) { return model.predict(x); }

inline std::vector<double> predict_batch(const ForestModel& model, std::span<const FeatureVector> xs) {
  return model.predict_batch(xs);
}

}  // namespace paretotune
