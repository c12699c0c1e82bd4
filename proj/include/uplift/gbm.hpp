#ifndef UPLIFT_GBM_HPP
#define UPLIFT_GBM_HPP

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uplift/matrix.hpp"

namespace uplift {

// Least-squares gradient boosting configuration.
//
// Early stopping: a validation_fraction share of rows is held out by a
// seeded shuffle; fitting stops once validation MSE has failed to improve
// by more than tol for `patience` consecutive iterations, and the model is
// truncated to the tree prefix with the lowest validation MSE seen (which
// may be the empty prefix, leaving just the base prediction).
struct GbmConfig {
  int max_iterations = 1000;
  double learning_rate = 0.1;
  int max_depth = 3;
  int min_samples_leaf = 20;
  double validation_fraction = 0.1;
  int patience = 10;
  double tol = 1e-4;
  std::uint64_t seed = 0;
};

// Throws std::invalid_argument on any out-of-range field.
void check(const GbmConfig& config);

// Internal node: rows with value < threshold go left, >= threshold right.
// Leaf nodes have feature == -1 and carry the prediction in `value`.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  double value = 0.0;
  int left = -1;
  int right = -1;
  bool is_leaf() const { return feature < 0; }
};

class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes)
      : nodes_(std::move(nodes)) {}

  double predict_row(std::span<const double> x) const {
    const TreeNode* node = &nodes_[0];
    while (!node->is_leaf()) {
      node = &nodes_[x[static_cast<std::size_t>(node->feature)] <
                             node->threshold
                         ? node->left
                         : node->right];
    }
    return node->value;
  }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int leaf_count() const;

 private:
  std::vector<TreeNode> nodes_;  // nodes_[0] is the root
};

// Additive ensemble: prediction(x) = base + learning_rate * sum of trees.
class GbmModel {
 public:
  GbmModel() = default;
  GbmModel(double base_prediction, double learning_rate,
           std::vector<RegressionTree> trees, std::size_t feature_count,
           std::vector<double> train_mse, std::vector<double> val_mse);

  double base_prediction() const { return base_prediction_; }
  double learning_rate() const { return learning_rate_; }
  int iterations_used() const { return static_cast<int>(trees_.size()); }
  std::size_t feature_count() const { return feature_count_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }

  // Fitting diagnostics over the full run, one entry per fitted iteration
  // (the kept prefix may be shorter). Not part of the serialized model.
  const std::vector<double>& train_mse_history() const { return train_mse_; }
  const std::vector<double>& val_mse_history() const { return val_mse_; }

  double predict_row(std::span<const double> x) const;
  // Throws std::invalid_argument if features.cols != feature_count().
  std::vector<double> predict(const Matrix& features) const;

  // Versioned self-describing text format; numbers are written at shortest
  // round-trip precision, so serialize/deserialize is bit-exact.
  std::string serialize() const;
  static GbmModel deserialize(std::string_view text);

 private:
  double base_prediction_ = 0.0;
  double learning_rate_ = 0.1;
  std::vector<RegressionTree> trees_;
  std::size_t feature_count_ = 0;
  std::vector<double> train_mse_;
  std::vector<double> val_mse_;
};

// Greedy top-down CART regression tree: each split maximizes squared-error
// reduction over all (feature, midpoint-between-sorted-values) candidates;
// ties break toward the lowest feature index, then the lowest threshold.
// Leaves predict the mean target of their rows and hold at least
// min_samples_leaf of them. Throws on fewer than 2*min_samples_leaf rows or
// zero feature columns.
RegressionTree fit_tree(const Matrix& features,
                        const std::vector<double>& targets,
                        const GbmConfig& config);

// Stagewise least-squares boosting with the early stopping described on
// GbmConfig. base_prediction is the mean of all supplied targets; each
// iteration fits a tree to the residuals of the training share. Results are
// bit-identical for identical inputs regardless of thread count. Throws on
// fewer than 10 rows or non-finite targets.
GbmModel fit_gbm(const Matrix& features, const std::vector<double>& targets,
                 const GbmConfig& config);

}  // namespace uplift

#endif  // UPLIFT_GBM_HPP
