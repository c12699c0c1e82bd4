#include "uplift/gbm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "uplift/rng.hpp"

namespace uplift {

void check(const GbmConfig& c) {
  if (c.max_iterations < 0)
    throw std::invalid_argument("GbmConfig: max_iterations must be >= 0");
  if (!(c.learning_rate > 0.0))
    throw std::invalid_argument("GbmConfig: learning_rate must be > 0");
  if (c.max_depth < 1)
    throw std::invalid_argument("GbmConfig: max_depth must be >= 1");
  if (c.min_samples_leaf < 1)
    throw std::invalid_argument("GbmConfig: min_samples_leaf must be >= 1");
  if (!(c.validation_fraction > 0.0 && c.validation_fraction < 1.0))
    throw std::invalid_argument(
        "GbmConfig: validation_fraction must lie in (0, 1)");
  if (c.patience < 1)
    throw std::invalid_argument("GbmConfig: patience must be >= 1");
  if (!(c.tol >= 0.0))
    throw std::invalid_argument("GbmConfig: tol must be >= 0");
}

int RegressionTree::leaf_count() const {
  int n = 0;
  for (const TreeNode& node : nodes_) n += node.is_leaf() ? 1 : 0;
  return n;
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Builds a tree from per-feature presorted row-index lists. Split search is
// exact; per-feature scans run independently (and may run in parallel), with
// the cross-feature argmax reduced sequentially in feature order so the
// result never depends on thread count.
class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const std::vector<double>& y, int max_depth,
              int min_leaf)
      : x_(x), y_(y), max_depth_(max_depth),
        min_leaf_(static_cast<std::size_t>(min_leaf)) {}

  std::vector<TreeNode> build(std::vector<std::vector<int>> order) {
    build_node(std::move(order), max_depth_);
    return std::move(nodes_);
  }

 private:
  int build_node(std::vector<std::vector<int>> order, int depth_left) {
    const std::vector<int>& rows = order[0];
    const std::size_t n = rows.size();
    double sum = 0.0;
    for (int r : rows) sum += y_[static_cast<std::size_t>(r)];
    const double mean = n > 0 ? sum / static_cast<double>(n) : 0.0;

    Split best;
    if (depth_left > 0 && n >= 2 * min_leaf_) {
      const int p = static_cast<int>(x_.cols);
      std::vector<Split> per_feature(static_cast<std::size_t>(p));
#pragma omp parallel for schedule(static) if (n * static_cast<std::size_t>(p) > 8192)
      for (int f = 0; f < p; ++f) {
        per_feature[static_cast<std::size_t>(f)] =
            best_for_feature(order[static_cast<std::size_t>(f)], f, sum);
      }
      // Floor on the accepted gain; rejects pure rounding-noise splits on
      // (near-)constant targets.
      best.gain =
          1e-12 * std::max(1.0, sum * sum / static_cast<double>(n));
      for (int f = 0; f < p; ++f) {
        const Split& cand = per_feature[static_cast<std::size_t>(f)];
        if (cand.feature >= 0 && cand.gain > best.gain) best = cand;
      }
    }

    if (best.feature < 0) {
      nodes_.push_back(TreeNode{-1, 0.0, mean, -1, -1});
      return static_cast<int>(nodes_.size()) - 1;
    }

    const std::size_t p = x_.cols;
    std::vector<std::vector<int>> left(p), right(p);
#pragma omp parallel for schedule(static) if (n * p > 8192)
    for (std::size_t f = 0; f < p; ++f) {
      left[f].reserve(n / 2);
      right[f].reserve(n / 2);
      for (int r : order[f]) {
        if (x_.at(static_cast<std::size_t>(r),
                  static_cast<std::size_t>(best.feature)) < best.threshold) {
          left[f].push_back(r);
        } else {
          right[f].push_back(r);
        }
      }
    }
    std::vector<std::vector<int>>().swap(order);  // free before recursing

    const int me = static_cast<int>(nodes_.size());
    nodes_.push_back(TreeNode{best.feature, best.threshold, 0.0, -1, -1});
    const int l = build_node(std::move(left), depth_left - 1);
    const int r = build_node(std::move(right), depth_left - 1);
    nodes_[static_cast<std::size_t>(me)].left = l;
    nodes_[static_cast<std::size_t>(me)].right = r;
    return me;
  }

  Split best_for_feature(const std::vector<int>& rows, int f,
                         double total_sum) const {
    const std::size_t n = rows.size();
    const double parent_score = total_sum * total_sum / static_cast<double>(n);
    Split best;
    double left_sum = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left_sum += y_[static_cast<std::size_t>(rows[i])];
      const std::size_t left_n = i + 1;
      if (left_n < min_leaf_) continue;
      const std::size_t right_n = n - left_n;
      if (right_n < min_leaf_) break;
      const double xa = x_.at(static_cast<std::size_t>(rows[i]),
                              static_cast<std::size_t>(f));
      const double xb = x_.at(static_cast<std::size_t>(rows[i + 1]),
                              static_cast<std::size_t>(f));
      if (!(xb > xa)) continue;
      const double right_sum = total_sum - left_sum;
      const double gain = left_sum * left_sum / static_cast<double>(left_n) +
                          right_sum * right_sum / static_cast<double>(right_n) -
                          parent_score;
      if (gain > best.gain) {
        double thr = 0.5 * (xa + xb);
        if (!(thr > xa)) thr = xb;  // guard midpoint rounding onto xa
        best = Split{f, thr, gain};
      }
    }
    return best;
  }

  const Matrix& x_;
  const std::vector<double>& y_;
  int max_depth_;
  std::size_t min_leaf_;
  std::vector<TreeNode> nodes_;
};

std::vector<std::vector<int>> presort(const Matrix& x,
                                      const std::vector<int>& rows) {
  const std::size_t p = x.cols;
  std::vector<std::vector<int>> order(p);
#pragma omp parallel for schedule(static) if (rows.size() * p > 8192)
  for (std::size_t f = 0; f < p; ++f) {
    order[f] = rows;
    std::stable_sort(order[f].begin(), order[f].end(), [&](int a, int b) {
      return x.at(static_cast<std::size_t>(a), f) <
             x.at(static_cast<std::size_t>(b), f);
    });
  }
  return order;
}

double mse_against(const std::vector<double>& y, const std::vector<int>& rows,
                   const std::vector<double>& fitted) {
  double sum = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double e = y[static_cast<std::size_t>(rows[i])] - fitted[i];
    sum += e * e;
  }
  return sum / static_cast<double>(rows.size());
}

}  // namespace

RegressionTree fit_tree(const Matrix& features,
                        const std::vector<double>& targets,
                        const GbmConfig& config) {
  check(config);
  if (features.rows != targets.size()) {
    throw std::invalid_argument("fit_tree: row counts differ");
  }
  if (features.cols == 0) {
    throw std::invalid_argument("fit_tree: zero features");
  }
  if (features.rows < 2 * static_cast<std::size_t>(config.min_samples_leaf)) {
    throw std::invalid_argument(
        "fit_tree: needs at least 2*min_samples_leaf rows, got " +
        std::to_string(features.rows));
  }
  std::vector<int> rows(features.rows);
  std::iota(rows.begin(), rows.end(), 0);
  TreeBuilder builder(features, targets, config.max_depth,
                      config.min_samples_leaf);
  return RegressionTree(builder.build(presort(features, rows)));
}

GbmModel fit_gbm(const Matrix& features, const std::vector<double>& targets,
                 const GbmConfig& config) {
  check(config);
  const std::size_t n = features.rows;
  if (targets.size() != n) {
    throw std::invalid_argument("fit_gbm: row counts differ");
  }
  if (n < 10) {
    throw std::invalid_argument("fit_gbm: needs at least 10 rows, got " +
                                std::to_string(n));
  }
  if (features.cols == 0) {
    throw std::invalid_argument("fit_gbm: zero features");
  }
  for (double v : targets) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("fit_gbm: non-finite target value");
    }
  }
  if (config.validation_fraction * static_cast<double>(n) < 1.0) {
    throw std::invalid_argument(
        "fit_gbm: validation_fraction * rows must be >= 1");
  }

  double base = 0.0;
  for (double v : targets) base += v;
  base /= static_cast<double>(n);

  // Seeded shuffle; head becomes the validation share.
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  rng::shuffle(idx, config.seed, 0);
  const std::size_t n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(
             config.validation_fraction * static_cast<double>(n))));
  std::vector<int> val(idx.begin(), idx.begin() + static_cast<long>(n_val));
  std::vector<int> train(idx.begin() + static_cast<long>(n_val), idx.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  const std::size_t n_train = train.size();

  const std::vector<std::vector<int>> root_order = presort(features, train);

  std::vector<double> fitted_train(n_train, base);
  std::vector<double> fitted_val(n_val, base);
  std::vector<double> residual_of_row(n, 0.0);

  double best_val = mse_against(targets, val, fitted_val);
  int best_prefix = 0;
  double stop_best = best_val;
  int bad = 0;

  std::vector<RegressionTree> trees;
  std::vector<double> train_history, val_history;

  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    for (std::size_t i = 0; i < n_train; ++i) {
      const std::size_t r = static_cast<std::size_t>(train[i]);
      residual_of_row[r] = targets[r] - fitted_train[i];
    }
    TreeBuilder builder(features, residual_of_row, config.max_depth,
                        config.min_samples_leaf);
    RegressionTree tree(builder.build(root_order));

#pragma omp parallel for schedule(static) if (n_train > 4096)
    for (std::size_t i = 0; i < n_train; ++i) {
      fitted_train[i] +=
          config.learning_rate *
          tree.predict_row(features.row(static_cast<std::size_t>(train[i])));
    }
#pragma omp parallel for schedule(static) if (n_val > 4096)
    for (std::size_t i = 0; i < n_val; ++i) {
      fitted_val[i] +=
          config.learning_rate *
          tree.predict_row(features.row(static_cast<std::size_t>(val[i])));
    }
    trees.push_back(std::move(tree));

    train_history.push_back(mse_against(targets, train, fitted_train));
    const double val_mse = mse_against(targets, val, fitted_val);
    val_history.push_back(val_mse);

    if (val_mse < best_val) {
      best_val = val_mse;
      best_prefix = iter;
    }
    if (val_mse < stop_best - config.tol) {
      stop_best = val_mse;
      bad = 0;
    } else if (++bad >= config.patience) {
      break;
    }
  }

  trees.resize(static_cast<std::size_t>(best_prefix));
  return GbmModel(base, config.learning_rate, std::move(trees), features.cols,
                  std::move(train_history), std::move(val_history));
}

GbmModel::GbmModel(double base_prediction, double learning_rate,
                   std::vector<RegressionTree> trees,
                   std::size_t feature_count, std::vector<double> train_mse,
                   std::vector<double> val_mse)
    : base_prediction_(base_prediction), learning_rate_(learning_rate),
      trees_(std::move(trees)), feature_count_(feature_count),
      train_mse_(std::move(train_mse)), val_mse_(std::move(val_mse)) {}

double GbmModel::predict_row(std::span<const double> x) const {
  double sum = 0.0;
  for (const RegressionTree& tree : trees_) sum += tree.predict_row(x);
  return base_prediction_ + learning_rate_ * sum;
}

std::vector<double> GbmModel::predict(const Matrix& features) const {
  if (features.cols != feature_count_) {
    throw std::invalid_argument(
        "GbmModel::predict: feature width " + std::to_string(features.cols) +
        " does not match training width " + std::to_string(feature_count_));
  }
  std::vector<double> out(features.rows);
#pragma omp parallel for schedule(static) if (features.rows > 4096)
  for (std::size_t i = 0; i < features.rows; ++i) {
    out[i] = predict_row(features.row(i));
  }
  return out;
}

namespace {

void put_number(std::string& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

double read_double_token(std::istringstream& in, const char* what) {
  std::string tok;
  if (!(in >> tok)) {
    throw std::runtime_error(std::string("gbm model parse: missing ") + what);
  }
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw std::runtime_error(std::string("gbm model parse: bad number for ") +
                             what + ": '" + tok + "'");
  }
  return v;
}

long read_long_token(std::istringstream& in, const char* what) {
  std::string tok;
  if (!(in >> tok)) {
    throw std::runtime_error(std::string("gbm model parse: missing ") + what);
  }
  long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw std::runtime_error(std::string("gbm model parse: bad integer for ") +
                             what + ": '" + tok + "'");
  }
  return v;
}

}  // namespace

std::string GbmModel::serialize() const {
  std::string out = "gbm v1\n";
  out += "features " + std::to_string(feature_count_) + "\n";
  out += "base ";
  put_number(out, base_prediction_);
  out += "\nlearning_rate ";
  put_number(out, learning_rate_);
  out += "\ntrees " + std::to_string(trees_.size()) + "\n";
  for (const RegressionTree& tree : trees_) {
    out += "tree " + std::to_string(tree.nodes().size()) + "\n";
    for (const TreeNode& node : tree.nodes()) {
      if (node.is_leaf()) {
        out += "L ";
        put_number(out, node.value);
      } else {
        out += "S " + std::to_string(node.feature) + " ";
        put_number(out, node.threshold);
        out += " " + std::to_string(node.left) + " " +
               std::to_string(node.right);
      }
      out += "\n";
    }
  }
  return out;
}

GbmModel GbmModel::deserialize(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string magic, version;
  in >> magic >> version;
  if (magic != "gbm" || version != "v1") {
    throw std::runtime_error("gbm model parse: unsupported format header");
  }
  auto expect = [&in](const char* kw) {
    std::string tok;
    in >> tok;
    if (tok != kw) {
      throw std::runtime_error(std::string("gbm model parse: expected '") +
                               kw + "', got '" + tok + "'");
    }
  };
  expect("features");
  const long features = read_long_token(in, "features");
  expect("base");
  const double base = read_double_token(in, "base");
  expect("learning_rate");
  const double lr = read_double_token(in, "learning_rate");
  expect("trees");
  const long n_trees = read_long_token(in, "trees");

  std::vector<RegressionTree> trees;
  trees.reserve(static_cast<std::size_t>(n_trees));
  for (long t = 0; t < n_trees; ++t) {
    expect("tree");
    const long n_nodes = read_long_token(in, "tree node count");
    std::vector<TreeNode> nodes;
    nodes.reserve(static_cast<std::size_t>(n_nodes));
    for (long k = 0; k < n_nodes; ++k) {
      std::string kind;
      if (!(in >> kind)) {
        throw std::runtime_error("gbm model parse: truncated node list");
      }
      TreeNode node;
      if (kind == "L") {
        node.value = read_double_token(in, "leaf value");
      } else if (kind == "S") {
        node.feature = static_cast<int>(read_long_token(in, "split feature"));
        node.threshold = read_double_token(in, "split threshold");
        node.left = static_cast<int>(read_long_token(in, "left child"));
        node.right = static_cast<int>(read_long_token(in, "right child"));
      } else {
        throw std::runtime_error("gbm model parse: unknown node kind '" +
                                 kind + "'");
      }
      nodes.push_back(node);
    }
    trees.emplace_back(std::move(nodes));
  }
  return GbmModel(base, lr, std::move(trees),
                  static_cast<std::size_t>(features), {}, {});
}

}  // namespace uplift
