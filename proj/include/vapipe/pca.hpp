#pragma once

// Principal components from the eigendecomposition of the sample covariance
// (denominator n - 1).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "vapipe/common.hpp"

namespace vapipe {

struct PcaModel {
  std::vector<double> mean;
  Matrix components;  // r x d, orthonormal rows
  std::vector<double> explained_variance;  // descending
  double total_variance = 0.0;

  std::vector<double> explained_variance_ratio() const {
    std::vector<double> out;
    for (double v : explained_variance) out.push_back(total_variance > 0 ? v / total_variance : 0.0);
    return out;
  }
};

inline PcaModel fit_pca(const Matrix& points, std::size_t rank) {
  const std::size_t n = points.rows(), d = points.cols();
  require(n >= 2, ErrorKind::config, "fit_pca: need at least two points");
  require(rank >= 1 && rank <= std::min(n - 1, d), ErrorKind::config,
          format("fit_pca: rank %zu infeasible for %zu points in %zu dimensions", rank, n, d));

  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajor> x(points.data().data(), static_cast<Eigen::Index>(n),
                                     static_cast<Eigen::Index>(d));
  const Eigen::RowVectorXd mu = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mu;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  require(solver.info() == Eigen::Success, ErrorKind::degenerate, "fit_pca: eigensolver failed");

  PcaModel m;
  m.mean.assign(mu.data(), mu.data() + d);
  m.total_variance = cov.trace();
  m.components = Matrix(rank, d);
  // Eigen returns eigenvalues in ascending order.
  for (std::size_t k = 0; k < rank; ++k) {
    const auto col = static_cast<Eigen::Index>(d - 1 - k);
    Eigen::VectorXd v = solver.eigenvectors().col(col);
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
      if (std::abs(v(i)) > std::abs(v(arg)) + 1e-12) arg = i;
    if (v(arg) < 0) v = -v;
    for (std::size_t j = 0; j < d; ++j) m.components(k, j) = v(static_cast<Eigen::Index>(j));
    m.explained_variance.push_back(std::max(0.0, solver.eigenvalues()(col)));
  }
  return m;
}

// (points - mean) * components^T
inline Matrix project_pca(const PcaModel& model, const Matrix& points) {
  const std::size_t d = model.mean.size();
  require(points.cols() == d || points.rows() == 0, ErrorKind::shape,
          format("project_pca: expected width %zu, got %zu", d, points.cols()));
  const std::size_t r = model.components.rows();
  Matrix out(points.rows(), r);
  std::vector<double> centered(d);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    auto p = points.row(i);
    for (std::size_t j = 0; j < d; ++j) centered[j] = p[j] - model.mean[j];
    for (std::size_t k = 0; k < r; ++k) out(i, k) = dot(centered, model.components.row(k));
  }
  return out;
}

// Inverse map from component scores back to the input space.
inline Matrix reconstruct_pca(const PcaModel& model, const Matrix& scores) {
  const std::size_t d = model.mean.size();
  Matrix out(scores.rows(), d);
  for (std::size_t i = 0; i < scores.rows(); ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double v = model.mean[j];
      for (std::size_t k = 0; k < scores.cols(); ++k) v += scores(i, k) * model.components(k, j);
      out(i, j) = v;
    }
  return out;
}

}  // namespace vapipe
