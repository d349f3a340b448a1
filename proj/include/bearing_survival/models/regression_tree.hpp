#pragma once

// Least-squares regression tree used as the boosting base learner.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bearing_survival/error.hpp"

namespace bsurv::models {

struct RegressionTreeOptions {
  int max_depth = 2;
  int min_leaf = 5;
};

/// Flat node arrays; feature < 0 marks a leaf holding `value`.
struct RegressionTree {
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<double> value;

  double predict(std::span<const double> x) const {
    std::size_t node = 0;
    while (feature[node] >= 0) {
      node = static_cast<std::size_t>(x[static_cast<std::size_t>(feature[node])] <= threshold[node] ? left[node] : right[node]);
    }
    return value[node];
  }

  double predict_row(const Eigen::MatrixXd& x, Eigen::Index row) const {
    std::size_t node = 0;
    while (feature[node] >= 0) {
      node = static_cast<std::size_t>(x(row, feature[node]) <= threshold[node] ? left[node] : right[node]);
    }
    return value[node];
  }

  void scale(double factor) {
    for (double& v : value) v *= factor;
  }
};

namespace detail {

class RegressionTreeBuilder {
 public:
  RegressionTreeBuilder(const Eigen::MatrixXd& x, std::span<const double> target, const RegressionTreeOptions& options)
      : x_(x), target_(target), options_(options) {}

  RegressionTree build(std::vector<std::size_t> rows) {
    tree_ = {};
    const int root = add_node();
    grow(root, std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  int add_node() {
    tree_.feature.push_back(-1);
    tree_.threshold.push_back(0.0);
    tree_.left.push_back(-1);
    tree_.right.push_back(-1);
    tree_.value.push_back(0.0);
    return static_cast<int>(tree_.feature.size() - 1);
  }

  void grow(int node, std::vector<std::size_t> rows, int depth) {
    const auto n = rows.size();
    double total = 0.0;
    for (std::size_t i : rows) total += target_[i];
    tree_.value[static_cast<std::size_t>(node)] = n ? total / static_cast<double>(n) : 0.0;
    const auto min_leaf = static_cast<std::size_t>(options_.min_leaf);
    if (depth >= options_.max_depth || n < 2 * min_leaf) return;

    const double parent = total * total / static_cast<double>(n);
    double best_gain = 1e-12 * std::max(1.0, std::abs(parent));
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::pair<double, double>> sorted(n);
    for (Eigen::Index f = 0; f < x_.cols(); ++f) {
      for (std::size_t j = 0; j < n; ++j) sorted[j] = {x_(static_cast<Eigen::Index>(rows[j]), f), target_[rows[j]]};
      std::sort(sorted.begin(), sorted.end());
      double left_sum = 0.0;
      for (std::size_t p = 1; p < n; ++p) {
        left_sum += sorted[p - 1].second;
        if (sorted[p - 1].first == sorted[p].first || p < min_leaf || n - p < min_leaf) continue;
        const double nl = static_cast<double>(p), nr = static_cast<double>(n - p);
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - parent;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (sorted[p - 1].first + sorted[p].first);
        }
      }
    }
    if (best_feature < 0) return;
    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t i : rows) {
      (x_(static_cast<Eigen::Index>(i), best_feature) <= best_threshold ? left_rows : right_rows).push_back(i);
    }
    tree_.feature[static_cast<std::size_t>(node)] = best_feature;
    tree_.threshold[static_cast<std::size_t>(node)] = best_threshold;
    const int l = add_node();
    tree_.left[static_cast<std::size_t>(node)] = l;
    grow(l, std::move(left_rows), depth + 1);
    const int r = add_node();
    tree_.right[static_cast<std::size_t>(node)] = r;
    grow(r, std::move(right_rows), depth + 1);
  }

  const Eigen::MatrixXd& x_;
  std::span<const double> target_;
  const RegressionTreeOptions& options_;
  RegressionTree tree_;
};

}  // namespace detail

inline RegressionTree fit_regression_tree(const Eigen::MatrixXd& x, std::span<const double> target,
                                          const RegressionTreeOptions& options, std::vector<std::size_t> rows) {
  require(static_cast<std::size_t>(x.rows()) == target.size(), ErrorCode::kDimensionMismatch,
          "regression tree: rows and targets differ");
  require(options.max_depth >= 0 && options.min_leaf >= 1, ErrorCode::kInvalidArgument, "regression tree: bad options");
  return detail::RegressionTreeBuilder(x, target, options).build(std::move(rows));
}

}  // namespace bsurv::models
