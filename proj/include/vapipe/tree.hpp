#pragma once

// CART-style binary decision trees. Classification trees minimize Gini
// impurity over labels; regression trees maximize the second-order boosting
// gain over per-sample gradient/hessian pairs. Split search walks presorted
// feature columns, so a node costs O(n * d) after the initial sort.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "vapipe/common.hpp"
#include "vapipe/dataset.hpp"

namespace vapipe {

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // x[feature] <= threshold goes left
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  double value = 0.0;  // leaf: positive fraction (classification) or score (regression)

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::size_t max_depth = 0;    // 0 = unlimited
  std::size_t min_samples_leaf = 1;
  std::size_t n_features = 0;

  std::size_t leaf_index(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return i;
  }

  double predict(std::span<const double> x) const { return nodes[leaf_index(x)].value; }

  std::size_t depth() const {
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    std::size_t best = 0;
    while (!stack.empty()) {
      auto [i, d] = stack.back();
      stack.pop_back();
      best = std::max(best, d);
      if (!nodes[i].is_leaf()) {
        stack.emplace_back(nodes[i].left, d + 1);
        stack.emplace_back(nodes[i].right, d + 1);
      }
    }
    return best;
  }

  bool operator==(const DecisionTree&) const = default;
};

struct TreeParams {
  std::size_t max_depth = 0;  // 0 = unlimited
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = 0;  // features tried per split; 0 = all
  // regression mode only
  double l2_leaf = 1.0;
  double min_child_weight = 0.0;
};

// Per-sample first and second derivatives of the loss, for regression trees.
struct GradientPairs {
  std::vector<double> grad;
  std::vector<double> hess;
};

namespace detail {

class TreeBuilder {
 public:
  // `rows` lists the training rows, duplicates allowed (bootstrap). Exactly
  // one of labels / gradients is used depending on the mode.
  TreeBuilder(const Matrix& x, std::vector<std::size_t> rows, const std::vector<std::uint8_t>* labels,
              const GradientPairs* gradients, const TreeParams& params, std::uint64_t seed)
      : params_(params), rng_(seed), regression_(gradients != nullptr) {
    const std::size_t n = rows.size();
    const std::size_t d = x.cols();
    columns_.assign(d, std::vector<double>(n));
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t f = 0; f < d; ++f) columns_[f][s] = x(rows[s], f);
    a_.resize(n);
    b_.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
      if (regression_) {
        a_[s] = gradients->grad[rows[s]];
        b_[s] = gradients->hess[rows[s]];
      } else {
        a_[s] = (*labels)[rows[s]];
        b_[s] = 1.0;
      }
    }
    goes_left_.assign(n, 0);
    tree_.max_depth = params.max_depth;
    tree_.min_samples_leaf = params.min_samples_leaf;
    tree_.n_features = d;
  }

  DecisionTree build() {
    const std::size_t n = a_.size();
    const std::size_t d = columns_.size();
    std::vector<std::vector<std::uint32_t>> sorted(d, std::vector<std::uint32_t>(n));
    for (std::size_t f = 0; f < d; ++f) {
      auto& order = sorted[f];
      std::iota(order.begin(), order.end(), 0u);
      const auto& col = columns_[f];
      std::stable_sort(order.begin(), order.end(),
                       [&](std::uint32_t i, std::uint32_t j) { return col[i] < col[j]; });
    }
    tree_.nodes.clear();
    grow(std::move(sorted), 0);
    return std::move(tree_);
  }

 private:
  struct Stats {
    double a = 0.0;  // positives, or gradient sum
    double b = 0.0;  // count, or hessian sum
    std::size_t n = 0;
  };

  // Weighted impurity (classification, lower is better) or negated structure
  // score (regression); either way a split's gain is parent - left - right.
  double cost(const Stats& s) const {
    if (regression_) return -(s.a * s.a) / (s.b + params_.l2_leaf);
    if (s.n == 0) return 0.0;
    const double n = static_cast<double>(s.n);
    return n - (s.a * s.a + (n - s.a) * (n - s.a)) / n;
  }

  double leaf_value(const Stats& s) const {
    if (regression_) return -s.a / (s.b + params_.l2_leaf);
    return s.n ? s.a / static_cast<double>(s.n) : 0.0;
  }

  bool child_ok(const Stats& s) const {
    if (s.n < params_.min_samples_leaf) return false;
    return !regression_ || s.b >= params_.min_child_weight;
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t d = columns_.size();
    std::vector<std::size_t> feats(d);
    std::iota(feats.begin(), feats.end(), 0);
    const std::size_t k = params_.max_features;
    if (k == 0 || k >= d) return feats;
    for (std::size_t i = 0; i < k; ++i) std::swap(feats[i], feats[i + rng_.below(d - i)]);
    feats.resize(k);
    std::sort(feats.begin(), feats.end());
    return feats;
  }

  std::uint32_t grow(std::vector<std::vector<std::uint32_t>> sorted, std::size_t depth) {
    const auto index = static_cast<std::uint32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const auto& members = sorted[0];
    Stats total;
    for (auto s : members) {
      total.a += a_[s];
      total.b += b_[s];
    }
    total.n = members.size();
    tree_.nodes[index].value = leaf_value(total);

    const bool depth_left = params_.max_depth == 0 || depth < params_.max_depth;
    const bool impure = regression_ || (total.a > 0 && total.a < static_cast<double>(total.n));
    if (!depth_left || !impure || total.n < 2 * params_.min_samples_leaf) return index;

    const double parent_cost = cost(total);
    double best_gain = -std::numeric_limits<double>::infinity();
    std::optional<std::size_t> best_feature;
    double best_threshold = 0.0;
    for (std::size_t f : candidate_features()) {
      const auto& order = sorted[f];
      const auto& col = columns_[f];
      Stats left;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const auto s = order[i];
        left.a += a_[s];
        left.b += b_[s];
        ++left.n;
        const double lo = col[s];
        const double hi = col[order[i + 1]];
        if (!(lo < hi)) continue;
        const Stats right{total.a - left.a, total.b - left.b, total.n - left.n};
        if (!child_ok(left) || !child_ok(right)) continue;
        const double gain = parent_cost - cost(left) - cost(right);
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_feature = f;
          double thr = lo + (hi - lo) / 2;
          if (!(thr < hi)) thr = lo;
          best_threshold = thr;
        }
      }
    }
    if (!best_feature) return index;
    if (regression_ ? !(best_gain > 1e-12) : best_gain < -1e-12) return index;

    const auto& col = columns_[*best_feature];
    for (auto s : members) goes_left_[s] = col[s] <= best_threshold;
    std::vector<std::vector<std::uint32_t>> left_sorted(sorted.size()), right_sorted(sorted.size());
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      left_sorted[f].reserve(members.size());
      right_sorted[f].reserve(members.size());
      for (auto s : sorted[f]) (goes_left_[s] ? left_sorted[f] : right_sorted[f]).push_back(s);
    }
    sorted.clear();
    sorted.shrink_to_fit();

    const auto l = grow(std::move(left_sorted), depth + 1);
    const auto r = grow(std::move(right_sorted), depth + 1);
    auto& node = tree_.nodes[index];
    node.feature = static_cast<std::int32_t>(*best_feature);
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return index;
  }

  TreeParams params_;
  Rng rng_;
  bool regression_;
  std::vector<std::vector<double>> columns_;  // feature-major copy of the sampled rows
  std::vector<double> a_, b_;
  std::vector<std::uint8_t> goes_left_;
  DecisionTree tree_;
};

}  // namespace detail

// Grows a tree on `rows` of `data` (all rows when empty). With `gradients`
// the tree is a boosting regression tree, otherwise a Gini classification
// tree on data.labels. Equal gains resolve to the lowest feature index, then
// the lowest threshold.
inline DecisionTree fit_decision_tree(const LabeledDataset& data, const TreeParams& params,
                                      const GradientPairs* gradients = nullptr,
                                      std::vector<std::size_t> rows = {},
                                      std::uint64_t seed = 0) {
  require(data.size() >= 1, ErrorKind::empty_corpus, "fit_decision_tree: no rows");
  require(params.min_samples_leaf >= 1, ErrorKind::config, "min_samples_leaf must be >= 1");
  if (gradients)
    require(gradients->grad.size() == data.size() && gradients->hess.size() == data.size(),
            ErrorKind::shape, "fit_decision_tree: gradient length mismatch");
  if (rows.empty()) {
    rows.resize(data.size());
    std::iota(rows.begin(), rows.end(), 0);
  }
  detail::TreeBuilder builder(data.features, std::move(rows), &data.labels, gradients, params, seed);
  return builder.build();
}

}  // namespace vapipe
