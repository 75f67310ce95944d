#pragma once

#include <string>

#include <Eigen/Eigenvalues>

#include "layertopic/error.hpp"
#include "layertopic/matrix.hpp"

namespace layertopic::reducer {

struct PcaResult {
  VectorD mean;
  MatrixD components;  // (input_dim, n_components), orthonormal columns
  MatrixD projected;   // (n, n_components)
};

/// Exact principal projection. Each component's largest-magnitude loading is positive.
template <typename Derived>
PcaResult pca(const Eigen::MatrixBase<Derived>& points, std::size_t n_components) {
  const auto n = points.rows();
  const auto dim = points.cols();
  if (n_components < 1 || static_cast<Eigen::Index>(n_components) >= dim)
    throw ParameterError("n_components=" + std::to_string(n_components) +
                         " must be in [1, input dim " + std::to_string(dim) + ")");
  if (n < 2) throw ParameterError("PCA needs at least two points");
  const auto k = static_cast<Eigen::Index>(n_components);

  PcaResult out;
  const MatrixD x = points.template cast<double>();
  out.mean = x.colwise().mean().transpose();
  const MatrixD centered = x.rowwise() - out.mean.transpose();

  Eigen::MatrixXd basis(dim, k);
  if (n >= dim) {
    const Eigen::MatrixXd cov = centered.transpose() * centered;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw Error("PCA eigendecomposition failed");
    for (Eigen::Index c = 0; c < k; ++c) basis.col(c) = solver.eigenvectors().col(dim - 1 - c);
  } else {
    // Fewer points than dimensions: work on the n x n Gram matrix.
    const Eigen::MatrixXd gram = centered * centered.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success) throw Error("PCA eigendecomposition failed");
    for (Eigen::Index c = 0; c < k; ++c) {
      const Eigen::Index src = n - 1 - c;
      Eigen::VectorXd v = centered.transpose() * solver.eigenvectors().col(src);
      const double norm = v.norm();
      if (norm > 0) {
        basis.col(c) = v / norm;
      } else {
        basis.col(c).setZero();
      }
    }
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::Index arg = 0;
    basis.col(c).cwiseAbs().maxCoeff(&arg);
    if (basis(arg, c) < 0) basis.col(c) = -basis.col(c);
  }
  out.components = basis;
  out.projected = centered * basis;
  return out;
}

}  // namespace layertopic::reducer
