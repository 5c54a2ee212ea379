#pragma once

// SMOTE oversampling and Tomek-link cleaning. Distances are Euclidean on the
// raw feature rows; every ordering is fully specified so that a fixed seed
// gives identical output everywhere.

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "vapipe/common.hpp"
#include "vapipe/dataset.hpp"

namespace vapipe {

struct ResampleConfig {
  std::size_t k_neighbors = 5;
  double target_ratio = 1.0;  // minority / majority after oversampling
  std::uint64_t seed = 0;
  // Pins every interpolation coefficient; for tracing the geometry by hand.
  std::optional<double> fixed_lambda;

  void validate() const {
    require(k_neighbors >= 1, ErrorKind::config, "k_neighbors must be >= 1");
    require(target_ratio > 0 && std::isfinite(target_ratio), ErrorKind::config,
            "target_ratio must be positive");
    if (fixed_lambda)
      require(*fixed_lambda >= 0 && *fixed_lambda <= 1, ErrorKind::config,
              "fixed_lambda must lie in [0,1]");
  }
};

// The k rows of `restrict_to` (all rows when empty), excluding the query
// itself, closest to the query row. Ties go to the lower row index.
inline std::vector<std::size_t> knn_indices(const Matrix& points, std::size_t query_row,
                                            std::size_t k,
                                            std::span<const std::size_t> restrict_to = {}) {
  std::vector<std::pair<double, std::size_t>> cand;
  auto q = points.row(query_row);
  auto consider = [&](std::size_t r) {
    if (r != query_row) cand.emplace_back(squared_distance(q, points.row(r)), r);
  };
  if (restrict_to.empty()) {
    for (std::size_t r = 0; r < points.rows(); ++r) consider(r);
  } else {
    for (auto r : restrict_to) consider(r);
  }
  require(k <= cand.size(), ErrorKind::config,
          format("knn: k=%zu exceeds the %zu available neighbours", k, cand.size()));
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = cand[i].second;
  return out;
}

namespace detail {

inline std::uint8_t minority_label(const LabeledDataset& data) {
  return data.count(1) <= data.count(0) ? 1 : 0;
}

}  // namespace detail

// Appends synthetic minority rows x_i + lambda * (x_nn - x_i), walking the
// minority rows round-robin in index order until the minority count reaches
// round(target_ratio * majority). x_nn is drawn uniformly from x_i's k
// nearest minority neighbours and lambda uniformly from [0,1).
inline LabeledDataset smote_oversample(const LabeledDataset& data, const ResampleConfig& cfg) {
  cfg.validate();
  data.validate();
  const std::uint8_t minority = detail::minority_label(data);
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data.labels[i] == minority) members.push_back(i);
  const std::size_t n_min = members.size();
  const std::size_t n_maj = data.size() - n_min;
  require(n_min >= 2, ErrorKind::degenerate,
          format("cannot resample: minority class has %zu member(s)", n_min));
  require(cfg.k_neighbors < n_min, ErrorKind::config,
          format("k_neighbors=%zu must be below the minority count %zu", cfg.k_neighbors, n_min));

  const auto target = static_cast<std::size_t>(std::llround(cfg.target_ratio * static_cast<double>(n_maj)));
  const std::size_t n_new = target > n_min ? target - n_min : 0;

  LabeledDataset out = data;
  if (n_new == 0) return out;
  std::vector<std::vector<std::size_t>> neighbours(n_min);
  for (std::size_t j = 0; j < n_min; ++j)
    neighbours[j] = knn_indices(data.features, members[j], cfg.k_neighbors, members);

  Rng rng(cfg.seed);
  std::vector<double> x(data.width());
  for (std::size_t s = 0; s < n_new; ++s) {
    const std::size_t j = s % n_min;
    const std::size_t base = members[j];
    const std::size_t nn = neighbours[j][rng.below(cfg.k_neighbors)];
    const double lambda = cfg.fixed_lambda ? *cfg.fixed_lambda : rng.uniform();
    auto xb = data.features.row(base);
    auto xn = data.features.row(nn);
    for (std::size_t c = 0; c < x.size(); ++c) x[c] = xb[c] + lambda * (xn[c] - xb[c]);
    out.push_back(x, minority, Provenance::synthetic, kNoRow,
                  Parentage{data.row_ids[base], data.row_ids[nn], lambda});
  }
  return out;
}

// All opposite-label pairs (a, b), a < b, with no third point strictly closer
// to either member than they are to each other.
inline std::vector<std::pair<std::size_t, std::size_t>> find_tomek_links(const LabeledDataset& data) {
  const std::size_t n = data.size();
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (std::size_t a = 0; a < n; ++a) {
    auto xa = data.features.row(a);
    for (std::size_t b = a + 1; b < n; ++b) {
      const double d = squared_distance(xa, data.features.row(b));
      nearest[a] = std::min(nearest[a], d);
      nearest[b] = std::min(nearest[b], d);
    }
  }
  // A pair qualifies iff its distance is the nearest-neighbour distance of both members.
  std::vector<std::pair<std::size_t, std::size_t>> links;
  for (std::size_t a = 0; a < n; ++a) {
    auto xa = data.features.row(a);
    for (std::size_t b = a + 1; b < n; ++b) {
      if (data.labels[a] == data.labels[b] || nearest[a] != nearest[b]) continue;
      if (squared_distance(xa, data.features.row(b)) == nearest[a]) links.emplace_back(a, b);
    }
  }
  std::sort(links.begin(), links.end());
  return links;
}

// Removes the majority-class member of every Tomek link.
inline LabeledDataset remove_tomek_majority(const LabeledDataset& data, std::uint8_t majority) {
  const auto links = find_tomek_links(data);
  std::vector<bool> drop(data.size(), false);
  for (auto [a, b] : links) {
    if (data.labels[a] == majority) drop[a] = true;
    if (data.labels[b] == majority) drop[b] = true;
  }
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (!drop[i]) keep.push_back(i);
  return data.subset(keep);
}

// SMOTE first, then Tomek cleaning of the oversampled set.
inline LabeledDataset smote_tomek_resample(const LabeledDataset& data, const ResampleConfig& cfg) {
  const std::uint8_t majority = detail::minority_label(data) ? 0 : 1;
  return remove_tomek_majority(smote_oversample(data, cfg), majority);
}

}  // namespace vapipe
