#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "vapipe/common.hpp"

namespace vapipe {

enum class Provenance : std::uint8_t { original, synthetic };

inline constexpr std::size_t kNoRow = std::numeric_limits<std::size_t>::max();

// Interpolation record of a synthetic row: x = x_base + lambda * (x_neighbor - x_base).
// Parents are identified by row id, not by position.
struct Parentage {
  std::size_t base = kNoRow;
  std::size_t neighbor = kNoRow;
  double lambda = 0.0;
};

// Dense features plus binary labels. Every original row carries a caller-chosen
// id (by default its position); synthetic rows carry kNoRow and their parentage.
struct LabeledDataset {
  Matrix features;
  std::vector<std::uint8_t> labels;
  std::vector<Provenance> provenance;
  std::vector<std::size_t> row_ids;
  std::vector<Parentage> parents;

  LabeledDataset() = default;
  LabeledDataset(Matrix x, std::vector<std::uint8_t> y) : features(std::move(x)), labels(std::move(y)) {
    provenance.assign(labels.size(), Provenance::original);
    parents.assign(labels.size(), Parentage{});
    row_ids.resize(labels.size());
    for (std::size_t i = 0; i < row_ids.size(); ++i) row_ids[i] = i;
    validate();
  }

  std::size_t size() const { return labels.size(); }
  std::size_t width() const { return features.cols(); }

  std::size_t count(std::uint8_t label) const {
    std::size_t n = 0;
    for (auto l : labels) n += (l == label);
    return n;
  }

  void validate() const {
    require(features.rows() == labels.size() && provenance.size() == labels.size() &&
                row_ids.size() == labels.size() && parents.size() == labels.size(),
            ErrorKind::shape, "LabeledDataset: row counts disagree");
    require(all_finite(features.data()), ErrorKind::config,
            "LabeledDataset: non-finite feature value");
    for (auto l : labels) require(l <= 1, ErrorKind::config, "LabeledDataset: label not 0/1");
  }

  void push_back(std::span<const double> x, std::uint8_t y, Provenance prov, std::size_t id,
                 Parentage parent = {}) {
    features.append_row(x);
    labels.push_back(y);
    provenance.push_back(prov);
    row_ids.push_back(id);
    parents.push_back(parent);
  }

  LabeledDataset subset(std::span<const std::size_t> rows) const {
    LabeledDataset out;
    out.features = select_rows(features, rows);
    for (auto r : rows) {
      out.labels.push_back(labels[r]);
      out.provenance.push_back(provenance[r]);
      out.row_ids.push_back(row_ids[r]);
      out.parents.push_back(parents[r]);
    }
    return out;
  }
};

}  // namespace vapipe
