#pragma once

// Naive reference procedures for the test suite. These are deliberately
// slow and independent of the library's code paths: grid scans, finite
// differences, and dense least squares instead of closed forms.

#include "opsplit/core.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace testor {

using opsplit::Index;
using opsplit::Matrix;
using opsplit::Vector;

// Projection onto {(x, y) : x > 0, y >= 1/x} by brute force: if the point is
// a member, it projects to itself; otherwise scan the boundary curve
// (t, 1/t) on a log-spaced grid and refine the best bracket by ternary
// search on the squared distance.
inline Vector project_hyperbola_grid(const Vector& p) {
  if (p[0] > 0.0 && p[1] >= 1.0 / p[0]) return p;
  const auto sqdist = [&](double t) {
    const double dx = t - p[0];
    const double dy = 1.0 / t - p[1];
    return dx * dx + dy * dy;
  };
  const int grid = 200001;
  const double lo_exp = -6.0, hi_exp = 6.0;
  double best_t = 1.0;
  double best_f = std::numeric_limits<double>::infinity();
  int best_i = 0;
  for (int i = 0; i < grid; ++i) {
    const double t = std::pow(10.0, lo_exp + (hi_exp - lo_exp) * i / (grid - 1));
    const double f = sqdist(t);
    if (f < best_f) {
      best_f = f;
      best_t = t;
      best_i = i;
    }
  }
  double a = std::pow(10.0, lo_exp + (hi_exp - lo_exp) * std::max(0, best_i - 1) / (grid - 1));
  double b = std::pow(10.0, lo_exp + (hi_exp - lo_exp) * std::min(grid - 1, best_i + 1) / (grid - 1));
  for (int it = 0; it < 300; ++it) {
    const double m1 = a + (b - a) / 3.0;
    const double m2 = b - (b - a) / 3.0;
    if (sqdist(m1) <= sqdist(m2)) {
      b = m2;
    } else {
      a = m1;
    }
  }
  best_t = 0.5 * (a + b);
  Vector out(2);
  out << best_t, 1.0 / best_t;
  return out;
}

// Central-difference gradient of a scalar function.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                          double h = 1e-6) {
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

// Minimal displacement of the affine map x -> m x + c by dense least
// squares: v = (I - m) y* - c at the least-squares minimizer y*.
inline Vector displacement_least_squares(const Matrix& m, const Vector& c) {
  const Matrix w = Matrix::Identity(m.rows(), m.cols()) - m;
  const Vector y = w.completeOrthogonalDecomposition().solve(c);
  return w * y - c;
}

// Classical Gram-Schmidt orthonormalization, dropping near-dependent
// columns; an independent route to affine-subspace projections.
inline Matrix gram_schmidt(const Matrix& span, double drop_tol = 1e-12) {
  std::vector<Vector> basis;
  for (Index j = 0; j < span.cols(); ++j) {
    Vector w = span.col(j);
    for (const auto& q : basis) w -= q.dot(w) * q;
    for (const auto& q : basis) w -= q.dot(w) * q;  // second pass for stability
    const double n = w.norm();
    if (n > drop_tol * (1.0 + span.col(j).norm())) basis.push_back(w / n);
  }
  Matrix out(span.rows(), static_cast<Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) out.col(static_cast<Index>(k)) = basis[k];
  return out;
}

// Projection onto offset + range(basis) computed from Gram-Schmidt.
inline Vector project_affine_gs(const Vector& offset, const Matrix& span, const Vector& x) {
  const Matrix q = gram_schmidt(span);
  return offset + q * (q.transpose() * (x - offset));
}

// A random linear map that is exactly nonexpansive: Gaussian matrix scaled
// down by its largest singular value (when that exceeds one).
inline Matrix random_nonexpansive(opsplit::GaussianSampler& rng, Index dim) {
  Matrix g(dim, dim);
  for (Index i = 0; i < dim; ++i) g.row(i) = rng.vector(dim, 1.0).transpose();
  const double top = g.jacobiSvd().singularValues()(0);
  if (top > 1.0) g /= top * (1.0 + 1e-12);
  return g;
}

// A random firmly nonexpansive linear map: (I + N)/2 with N nonexpansive.
inline Matrix random_firmly_nonexpansive(opsplit::GaussianSampler& rng, Index dim) {
  return 0.5 * (Matrix::Identity(dim, dim) + random_nonexpansive(rng, dim));
}

}  // namespace testor
