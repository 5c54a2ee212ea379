#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "vapipe/common.hpp"

namespace vapipe {

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

inline ConfusionMatrix confusion_matrix(const std::vector<std::uint8_t>& pred,
                                        const std::vector<std::uint8_t>& truth) {
  require(pred.size() == truth.size(), ErrorKind::shape,
          format("confusion_matrix: %zu predictions for %zu labels", pred.size(), truth.size()));
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (truth[i]) {
      (pred[i] ? cm.tp : cm.fn)++;
    } else {
      (pred[i] ? cm.fp : cm.tn)++;
    }
  }
  return cm;
}

struct ClassificationMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  bool degenerate = false;  // at least one ratio had a zero denominator
};

inline ClassificationMetrics classification_metrics(const ConfusionMatrix& cm) {
  ClassificationMetrics m;
  auto ratio = [&](double num, std::size_t den) {
    if (den == 0) {
      m.degenerate = true;
      return 0.0;
    }
    return num / static_cast<double>(den);
  };
  m.precision = ratio(static_cast<double>(cm.tp), cm.tp + cm.fp);
  m.recall = ratio(static_cast<double>(cm.tp), cm.tp + cm.fn);
  if (m.precision + m.recall > 0) {
    m.f1 = 2 * m.precision * m.recall / (m.precision + m.recall);
  } else {
    m.degenerate = true;
    m.f1 = 0.0;
  }
  m.accuracy = ratio(static_cast<double>(cm.tp + cm.tn), cm.total());
  return m;
}

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // predict 1 iff score >= threshold
  std::size_t fp = 0, tp = 0;
};

// Thresholds sweep the distinct scores in descending order; tied scores form
// one step. The first point (threshold +inf) is (0,0), the last is (1,1).
inline std::vector<RocPoint> roc_curve(const std::vector<double>& scores,
                                       const std::vector<std::uint8_t>& truth) {
  require(scores.size() == truth.size(), ErrorKind::shape, "roc_curve: length mismatch");
  std::size_t pos = 0;
  for (auto t : truth) pos += t ? 1 : 0;
  const std::size_t neg = truth.size() - pos;
  require(pos > 0 && neg > 0, ErrorKind::degenerate, "roc_curve undefined: truth has a single class");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<RocPoint> curve;
  curve.push_back({0.0, 0.0, std::numeric_limits<double>::infinity(), 0, 0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (truth[order[i]] ? tp : fp)++;
      ++i;
    }
    curve.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                     static_cast<double>(tp) / static_cast<double>(pos), s, fp, tp});
  }
  return curve;
}

// Trapezoidal area, accumulated in integer counts so that it equals the
// Mann-Whitney statistic (ties count one half).
inline double auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& truth) {
  const auto curve = roc_curve(scores, truth);
  const auto& end = curve.back();
  double twice_area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    twice_area += static_cast<double>(curve[i].fp - curve[i - 1].fp) *
                  static_cast<double>(curve[i].tp + curve[i - 1].tp);
  return twice_area / (2.0 * static_cast<double>(end.fp) * static_cast<double>(end.tp));
}

}  // namespace vapipe
