#pragma once

#include "opsplit/core.hpp"

namespace opsplit {

// Dense square linear map on R^d.
class LinearMap {
 public:
  explicit LinearMap(Matrix m) : mat_(std::move(m)) {
    if (mat_.rows() != mat_.cols() || mat_.rows() < 1) {
      throw DimensionError("LinearMap: matrix must be square and nonempty");
    }
    if (!mat_.allFinite()) throw NumericError("LinearMap: non-finite matrix entry");
  }

  const Matrix& matrix() const { return mat_; }
  Index dim() const { return mat_.rows(); }

  Vector apply(const Vector& x) const {
    check_dim(x.size(), dim(), "LinearMap::apply");
    return mat_ * x;
  }

  double operator_norm() const {
    return mat_.jacobiSvd().singularValues()(0);
  }

  bool is_nonexpansive(double slack = 1e-10) const {
    return operator_norm() <= 1.0 + slack;
  }

  // Smallest eigenvalue of the symmetric part; >= 0 characterizes monotone.
  double min_symmetric_eigenvalue() const {
    Matrix sym = 0.5 * (mat_ + mat_.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    return es.eigenvalues()(0);
  }

 private:
  Matrix mat_;
};

// x |-> L x + b on R^d.
class AffineMap {
 public:
  AffineMap(Matrix linear, Vector offset)
      : linear_(std::move(linear)), offset_(std::move(offset)) {
    check_dim(offset_.size(), linear_.dim(), "AffineMap");
    check_finite(offset_, "AffineMap");
  }

  const LinearMap& linear() const { return linear_; }
  const Vector& offset() const { return offset_; }
  Index dim() const { return linear_.dim(); }

  Vector apply(const Vector& x) const { return linear_.apply(x) + offset_; }

 private:
  LinearMap linear_;
  Vector offset_;
};

}  // namespace opsplit
