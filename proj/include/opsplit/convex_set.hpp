#pragma once

#include "opsplit/core.hpp"

#include <limits>
#include <memory>
#include <variant>
#include <vector>

namespace opsplit {

struct SetNode;

// Closed convex subset of R^d, one of a fixed catalog of variants. Value type
// with cheap copies; instances are immutable after construction.
class ConvexSet {
 public:
  static ConvexSet orthant(Eigen::VectorXi signs);
  static ConvexSet nonnegative_orthant(Index dim);
  static ConvexSet box(Vector lo, Vector hi);
  // Orthonormalizes span columns; a zero-column span gives the point {offset}.
  static ConvexSet affine_subspace(Vector offset, Matrix span);
  static ConvexSet point(Vector p);
  static ConvexSet full_space(Index dim);
  static ConvexSet halfspace(Vector normal, double rhs);
  static ConvexSet ball(Vector center, double radius);
  // {(x, y) : x > 0, y >= 1/x} in R^2; closed as written.
  static ConvexSet hyperbola_epigraph();
  // {(x, ..., x) : x in R^block_dim} in R^{blocks * block_dim}.
  static ConvexSet diagonal(Index blocks, Index block_dim);
  static ConvexSet translate(ConvexSet inner, Vector shift);
  static ConvexSet product(std::vector<ConvexSet> parts);

  Index dim() const { return dim_; }
  const SetNode& node() const { return *node_; }

 private:
  ConvexSet(std::shared_ptr<const SetNode> node, Index dim)
      : node_(std::move(node)), dim_(dim) {}

  std::shared_ptr<const SetNode> node_;
  Index dim_;
};

struct OrthantSet {
  Eigen::VectorXi signs;  // entries +1 or -1
};

struct BoxSet {
  Vector lo, hi;  // finite, lo <= hi componentwise
};

struct AffineSubspaceSet {
  Vector offset;
  Matrix basis;  // orthonormal columns; zero columns encode a single point
};

struct HalfspaceSet {
  Vector normal;  // nonzero
  double rhs;     // <normal, x> <= rhs
};

struct BallSet {
  Vector center;
  double radius;
};

struct HyperbolaEpigraphSet {};

struct DiagonalSet {
  Index blocks;
  Index block_dim;
};

struct TranslateSet {
  ConvexSet inner;
  Vector shift;
};

struct ProductSet {
  std::vector<ConvexSet> parts;
};

struct SetNode : std::variant<OrthantSet, BoxSet, AffineSubspaceSet, HalfspaceSet,
                              BallSet, HyperbolaEpigraphSet, DiagonalSet,
                              TranslateSet, ProductSet> {
  using variant::variant;
};

namespace detail {

inline std::shared_ptr<const SetNode> make_node(SetNode n) {
  return std::make_shared<const SetNode>(std::move(n));
}

// Orthonormal basis of the column span, rank decided at cutoff * sigma_max.
inline Matrix orthonormal_span(const Matrix& span, double cutoff) {
  if (span.cols() == 0) return Matrix(span.rows(), 0);
  // an already-orthonormal basis is kept verbatim so serialization
  // round-trips exactly
  if (span.cols() <= span.rows()) {
    const Matrix gram = span.transpose() * span;
    if ((gram - Matrix::Identity(span.cols(), span.cols())).cwiseAbs().maxCoeff() <= 1e-12) {
      return span;
    }
  }
  Eigen::JacobiSVD<Matrix> svd(span, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return Matrix(span.rows(), 0);
  Index rank = 0;
  while (rank < sv.size() && sv(rank) > cutoff * sv(0)) ++rank;
  return svd.matrixU().leftCols(rank);
}

// Orthonormal basis of the orthogonal complement of an orthonormal basis.
inline Matrix orthonormal_complement(const Matrix& basis) {
  const Index d = basis.rows();
  const Index k = basis.cols();
  if (k == 0) return Matrix::Identity(d, d);
  if (k >= d) return Matrix(d, 0);
  Eigen::HouseholderQR<Matrix> qr(basis);
  Matrix q = qr.householderQ();
  return q.rightCols(d - k);
}

}  // namespace detail

inline ConvexSet ConvexSet::orthant(Eigen::VectorXi signs) {
  if (signs.size() < 1) throw DimensionError("orthant: empty sign vector");
  for (Index i = 0; i < signs.size(); ++i) {
    if (signs[i] != 1 && signs[i] != -1) {
      throw Error("orthant: signs must be +1 or -1");
    }
  }
  Index d = signs.size();
  return ConvexSet(detail::make_node(OrthantSet{std::move(signs)}), d);
}

inline ConvexSet ConvexSet::nonnegative_orthant(Index dim) {
  return orthant(Eigen::VectorXi::Ones(dim));
}

inline ConvexSet ConvexSet::box(Vector lo, Vector hi) {
  check_dim(hi.size(), lo.size(), "box");
  if (lo.size() < 1) throw DimensionError("box: empty bounds");
  check_finite(lo, "box");  // infinite extents are not modeled
  check_finite(hi, "box");
  if ((hi.array() < lo.array()).any()) throw Error("box: requires lo <= hi");
  Index d = lo.size();
  return ConvexSet(detail::make_node(BoxSet{std::move(lo), std::move(hi)}), d);
}

inline ConvexSet ConvexSet::affine_subspace(Vector offset, Matrix span) {
  if (offset.size() < 1) throw DimensionError("affine_subspace: empty offset");
  check_finite(offset, "affine_subspace");
  if (span.rows() != offset.size()) {
    throw DimensionError("affine_subspace: span rows must match offset size");
  }
  if (!span.allFinite()) throw NumericError("affine_subspace: non-finite span entry");
  Matrix basis = detail::orthonormal_span(span, default_tolerances().rank_cutoff);
  Index d = offset.size();
  return ConvexSet(detail::make_node(AffineSubspaceSet{std::move(offset), std::move(basis)}), d);
}

inline ConvexSet ConvexSet::point(Vector p) {
  Index d = p.size();
  return affine_subspace(std::move(p), Matrix(d, 0));
}

inline ConvexSet ConvexSet::full_space(Index dim) {
  return affine_subspace(Vector::Zero(dim), Matrix::Identity(dim, dim));
}

inline ConvexSet ConvexSet::halfspace(Vector normal, double rhs) {
  if (normal.size() < 1) throw DimensionError("halfspace: empty normal");
  check_finite(normal, "halfspace");
  if (!std::isfinite(rhs)) throw NumericError("halfspace: non-finite rhs");
  if (normal.norm() == 0.0) throw Error("halfspace: zero normal");
  Index d = normal.size();
  return ConvexSet(detail::make_node(HalfspaceSet{std::move(normal), rhs}), d);
}

inline ConvexSet ConvexSet::ball(Vector center, double radius) {
  if (center.size() < 1) throw DimensionError("ball: empty center");
  check_finite(center, "ball");
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw Error("ball: radius must be finite and >= 0");
  Index d = center.size();
  return ConvexSet(detail::make_node(BallSet{std::move(center), radius}), d);
}

inline ConvexSet ConvexSet::hyperbola_epigraph() {
  return ConvexSet(detail::make_node(HyperbolaEpigraphSet{}), 2);
}

inline ConvexSet ConvexSet::diagonal(Index blocks, Index block_dim) {
  if (blocks < 1 || block_dim < 1) throw DimensionError("diagonal: blocks and block_dim must be >= 1");
  return ConvexSet(detail::make_node(DiagonalSet{blocks, block_dim}), blocks * block_dim);
}

inline ConvexSet ConvexSet::translate(ConvexSet inner, Vector shift) {
  check_dim(shift.size(), inner.dim(), "translate");
  check_finite(shift, "translate");
  Index d = inner.dim();
  return ConvexSet(detail::make_node(TranslateSet{std::move(inner), std::move(shift)}), d);
}

inline ConvexSet ConvexSet::product(std::vector<ConvexSet> parts) {
  if (parts.empty()) throw DimensionError("product: needs at least one part");
  Index d = 0;
  for (const auto& p : parts) d += p.dim();
  return ConvexSet(detail::make_node(ProductSet{std::move(parts)}), d);
}

namespace detail {

// Stationarity of the squared distance from (a, b) to the boundary curve
// (t, 1/t), t > 0, cleared of denominators: g(t) = t^4 - a t^3 + b t - 1.
inline double hyper_g(double a, double b, double t) {
  return (t - a) * t * t * t + b * t - 1.0;
}

inline double hyper_g_prime(double a, double b, double t) {
  return (4.0 * t - 3.0 * a) * t * t + b;
}

// Magnitude of the terms composing g; |g| <= tol * scale is the stopping rule,
// which keeps the residual test meaningful for large |t|.
inline double hyper_g_scale(double a, double b, double t) {
  double t3 = t * t * t;
  return std::max(1.0, t3 * t + std::abs(a) * t3 + std::abs(b) * t + 1.0);
}

inline double hyper_dist2(double a, double b, double t) {
  double dx = t - a;
  double dy = 1.0 / t - b;
  return dx * dx + dy * dy;
}

// Newton iteration safeguarded by the [lo, hi] bracket of an up-crossing.
inline double hyper_refine_root(double a, double b, double lo, double hi,
                                const ToleranceConfig& tol) {
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < tol.projection_max_iter; ++it) {
    const double g = hyper_g(a, b, t);
    if (std::abs(g) <= tol.projection * hyper_g_scale(a, b, t)) return t;
    if (g < 0.0) lo = t;
    else hi = t;
    const double dg = hyper_g_prime(a, b, t);
    double next = (dg != 0.0) ? t - g / dg : std::numeric_limits<double>::quiet_NaN();
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);  // bisection fallback
    t = next;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, hi)) {
      return t;  // bracket collapsed to rounding width
    }
  }
  throw NumericError("hyperbola projection: root residual " +
                     format_double(hyper_g(a, b, t)) + " at t=" + format_double(t) +
                     " did not reach tolerance within iteration budget");
}

inline Vector project_hyperbola(const Vector& x, const ToleranceConfig& tol) {
  const double a = x[0];
  const double b = x[1];
  if (a > 0.0 && a * b >= 1.0) return x;  // interior / boundary short-circuit

  // Bracket every up-crossing of g on a geometric grid (down-crossings are
  // local maxima of the distance along the curve), refine each, keep the
  // closest candidate. g(0+) = -1 < 0 and g(t) -> +inf guarantee a root.
  double t_lo = std::min(1e-9, 1.0 / (2.0 * std::abs(b) + 1.0));
  double t_hi = std::max(2.0, std::abs(a) + std::abs(b) + 2.0);
  while (hyper_g(a, b, t_hi) <= 0.0) t_hi *= 2.0;

  const int grid_n = 512;
  const double ratio = std::pow(t_hi / t_lo, 1.0 / grid_n);
  double best_t = -1.0;
  double best_d2 = std::numeric_limits<double>::infinity();
  double prev_t = t_lo;
  double prev_g = hyper_g(a, b, t_lo);
  for (int k = 1; k <= grid_n + 1; ++k) {
    const double cur_t = (k <= grid_n) ? t_lo * std::pow(ratio, k) : t_hi;
    const double cur_g = hyper_g(a, b, cur_t);
    if (prev_g <= 0.0 && cur_g > 0.0) {
      const double root = hyper_refine_root(a, b, prev_t, cur_t, tol);
      const double d2 = hyper_dist2(a, b, root);
      if (d2 < best_d2) {
        best_d2 = d2;
        best_t = root;
      }
    }
    prev_t = cur_t;
    prev_g = cur_g;
  }
  if (best_t <= 0.0) {
    throw NumericError("hyperbola projection: no positive stationary point located");
  }
  Vector p(2);
  p[0] = best_t;
  p[1] = 1.0 / best_t;
  return p;
}

}  // namespace detail

Vector project(const ConvexSet& set, const Vector& x,
               const ToleranceConfig& tol = default_tolerances());

namespace detail {

struct ProjectVisitor {
  const ConvexSet& set;
  const Vector& x;
  const ToleranceConfig& tol;

  Vector operator()(const OrthantSet& s) const {
    Vector y = x;
    for (Index i = 0; i < y.size(); ++i) {
      if (s.signs[i] > 0) y[i] = std::max(0.0, y[i]);
      else y[i] = std::min(0.0, y[i]);
    }
    return y;
  }

  Vector operator()(const BoxSet& s) const {
    return x.cwiseMax(s.lo).cwiseMin(s.hi);
  }

  Vector operator()(const AffineSubspaceSet& s) const {
    if (s.basis.cols() == 0) return s.offset;
    return s.offset + s.basis * (s.basis.transpose() * (x - s.offset));
  }

  Vector operator()(const HalfspaceSet& s) const {
    const double slack = s.normal.dot(x) - s.rhs;
    if (slack <= 0.0) return x;
    return x - (slack / s.normal.squaredNorm()) * s.normal;
  }

  Vector operator()(const BallSet& s) const {
    Vector r = x - s.center;
    const double n = r.norm();
    if (n <= s.radius) return x;
    return s.center + (s.radius / n) * r;
  }

  Vector operator()(const HyperbolaEpigraphSet&) const {
    return project_hyperbola(x, tol);
  }

  Vector operator()(const DiagonalSet& s) const {
    // P_diag = lift of the block average
    Vector avg = Vector::Zero(s.block_dim);
    for (Index k = 0; k < s.blocks; ++k) avg += x.segment(k * s.block_dim, s.block_dim);
    avg /= static_cast<double>(s.blocks);
    Vector y(x.size());
    for (Index k = 0; k < s.blocks; ++k) y.segment(k * s.block_dim, s.block_dim) = avg;
    return y;
  }

  Vector operator()(const TranslateSet& s) const {
    return s.shift + project(s.inner, x - s.shift, tol);
  }

  Vector operator()(const ProductSet& s) const {
    Vector y(x.size());
    Index at = 0;
    for (const auto& part : s.parts) {
      y.segment(at, part.dim()) = project(part, x.segment(at, part.dim()), tol);
      at += part.dim();
    }
    return y;
  }
};

}  // namespace detail

inline Vector project(const ConvexSet& set, const Vector& x, const ToleranceConfig& tol) {
  check_dim(x.size(), set.dim(), "project");
  check_finite(x, "project");
  return std::visit(detail::ProjectVisitor{set, x, tol}, set.node());
}

inline double distance(const ConvexSet& set, const Vector& x,
                       const ToleranceConfig& tol = default_tolerances()) {
  return (x - project(set, x, tol)).norm();
}

inline bool contains(const ConvexSet& set, const Vector& x, double tol_dist,
                     const ToleranceConfig& tol = default_tolerances()) {
  return distance(set, x, tol) <= tol_dist;
}

// Gradient of x |-> (1/2) dist(set, x)^2, which equals x - P_set(x).
inline Vector grad_half_dist_sq(const ConvexSet& set, const Vector& x,
                                const ToleranceConfig& tol = default_tolerances()) {
  return x - project(set, x, tol);
}

ConvexSet polar_recession_cone(const ConvexSet& set);

namespace detail {

struct PolarRecessionVisitor {
  const ConvexSet& set;

  ConvexSet operator()(const OrthantSet& s) const {
    return ConvexSet::orthant(-s.signs);  // polar of an orthant cone flips every sign
  }

  ConvexSet operator()(const AffineSubspaceSet& s) const {
    // recession cone is the parallel subspace; its polar is the complement
    Matrix comp = orthonormal_complement(s.basis);
    return ConvexSet::affine_subspace(Vector::Zero(s.offset.size()), comp);
  }

  ConvexSet operator()(const BallSet& s) const {
    // bounded set: recession cone {0}, polar is everything
    return ConvexSet::full_space(s.center.size());
  }

  ConvexSet operator()(const HalfspaceSet& s) const {
    // rec = {x : <n, x> <= 0}; its polar is the ray {t n : t >= 0}, which the
    // catalog can express only for axis-aligned normals
    Index axis = -1;
    for (Index i = 0; i < s.normal.size(); ++i) {
      if (s.normal[i] != 0.0) {
        if (axis >= 0) {
          throw UnsupportedError(
              "polar_recession_cone: halfspace normal is not axis-aligned; the "
              "resulting ray is not representable in the set catalog");
        }
        axis = i;
      }
    }
    const Index d = s.normal.size();
    if (d == 1) {
      Eigen::VectorXi sign(1);
      sign[0] = s.normal[axis] > 0.0 ? 1 : -1;
      return ConvexSet::orthant(sign);
    }
    std::vector<ConvexSet> parts;
    parts.reserve(static_cast<std::size_t>(d));
    for (Index i = 0; i < d; ++i) {
      if (i == axis) {
        Eigen::VectorXi sign(1);
        sign[0] = s.normal[axis] > 0.0 ? 1 : -1;
        parts.push_back(ConvexSet::orthant(sign));
      } else {
        parts.push_back(ConvexSet::point(Vector::Zero(1)));
      }
    }
    return ConvexSet::product(std::move(parts));
  }

  ConvexSet operator()(const HyperbolaEpigraphSet&) const {
    // rec = R^2_+, polar = R^2_-
    return ConvexSet::orthant(-Eigen::VectorXi::Ones(2));
  }

  ConvexSet operator()(const DiagonalSet& s) const {
    // explicit diagonal basis, then complement; cold path, cost acceptable
    const Index d = s.block_dim;
    const Index n = s.blocks * d;
    Matrix basis = Matrix::Zero(n, d);
    const double inv = 1.0 / std::sqrt(static_cast<double>(s.blocks));
    for (Index k = 0; k < s.blocks; ++k) {
      basis.block(k * d, 0, d, d) = inv * Matrix::Identity(d, d);
    }
    return ConvexSet::affine_subspace(Vector::Zero(n), orthonormal_complement(basis));
  }

  ConvexSet operator()(const TranslateSet& s) const {
    return polar_recession_cone(s.inner);  // translation leaves recession unchanged
  }

  ConvexSet operator()(const BoxSet&) const {
    throw UnsupportedError("polar_recession_cone: Box variant not supported");
  }

  ConvexSet operator()(const ProductSet&) const {
    throw UnsupportedError("polar_recession_cone: Product variant not supported");
  }
};

}  // namespace detail

inline ConvexSet polar_recession_cone(const ConvexSet& set) {
  return std::visit(detail::PolarRecessionVisitor{set}, set.node());
}

}  // namespace opsplit
