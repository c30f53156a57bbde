#pragma once

#include "opsplit/affine.hpp"
#include "opsplit/convex_set.hpp"
#include "opsplit/core.hpp"

#include <memory>
#include <utility>
#include <variant>
#include <vector>

namespace opsplit {

struct OpNode;

// Maximally monotone operator on R^d from a fixed catalog. Set-valued
// variants (normal cones) support resolvents but not pointwise application.
class MonotoneOp {
 public:
  // x |-> L x + b; requires the symmetric part of L to be positive
  // semidefinite, which characterizes monotonicity of affine maps.
  static MonotoneOp affine(Matrix linear, Vector offset);
  static MonotoneOp constant(Vector value);
  static MonotoneOp normal_cone(ConvexSet set);
  // gradient of (1/2) dist(set, .)^2, i.e. Id - P_set; 1-cocoercive.
  static MonotoneOp grad_half_dist_sq(ConvexSet set);
  static MonotoneOp scaled(double alpha, MonotoneOp inner);
  // x |-> inner(x - shift)
  static MonotoneOp inner_shift(Vector shift, MonotoneOp inner);
  // x |-> inner(x) - shift
  static MonotoneOp outer_shift(Vector shift, MonotoneOp inner);
  // blockwise product operator acting on stacked vectors
  static MonotoneOp block_diag(std::vector<MonotoneOp> parts);

  Index dim() const { return dim_; }
  const OpNode& node() const { return *node_; }

 private:
  MonotoneOp(std::shared_ptr<const OpNode> node, Index dim)
      : node_(std::move(node)), dim_(dim) {}

  std::shared_ptr<const OpNode> node_;
  Index dim_;
};

struct AffineOpNode {
  AffineMap map;
};

struct ConstOpNode {
  Vector value;
};

struct NormalConeNode {
  ConvexSet set;
};

struct GradHalfDistSqNode {
  ConvexSet set;
};

struct ScaledNode {
  double alpha;
  MonotoneOp inner;
};

struct InnerShiftNode {
  Vector shift;
  MonotoneOp inner;
};

struct OuterShiftNode {
  Vector shift;
  MonotoneOp inner;
};

struct BlockDiagNode {
  std::vector<MonotoneOp> parts;
};

struct OpNode : std::variant<AffineOpNode, ConstOpNode, NormalConeNode, GradHalfDistSqNode,
                             ScaledNode, InnerShiftNode, OuterShiftNode, BlockDiagNode> {
  using variant::variant;
};

namespace detail {

inline std::shared_ptr<const OpNode> make_node(OpNode n) {
  return std::make_shared<const OpNode>(std::move(n));
}

}  // namespace detail

inline MonotoneOp MonotoneOp::affine(Matrix linear, Vector offset) {
  AffineMap map(std::move(linear), std::move(offset));
  const double min_eig = map.linear().min_symmetric_eigenvalue();
  const double scale = 1.0 + map.linear().matrix().cwiseAbs().maxCoeff();
  if (min_eig < -1e-10 * scale) {
    throw Error("affine operator: symmetric part has eigenvalue " + format_double(min_eig) +
                " < 0, not monotone");
  }
  Index d = map.dim();
  return MonotoneOp(detail::make_node(AffineOpNode{std::move(map)}), d);
}

inline MonotoneOp MonotoneOp::constant(Vector value) {
  if (value.size() < 1) throw DimensionError("constant operator: empty value");
  check_finite(value, "constant operator");
  Index d = value.size();
  return MonotoneOp(detail::make_node(ConstOpNode{std::move(value)}), d);
}

inline MonotoneOp MonotoneOp::normal_cone(ConvexSet set) {
  Index d = set.dim();
  return MonotoneOp(detail::make_node(NormalConeNode{std::move(set)}), d);
}

inline MonotoneOp MonotoneOp::grad_half_dist_sq(ConvexSet set) {
  Index d = set.dim();
  return MonotoneOp(detail::make_node(GradHalfDistSqNode{std::move(set)}), d);
}

inline MonotoneOp MonotoneOp::scaled(double alpha, MonotoneOp inner) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error("scaled operator: alpha must be finite and > 0");
  }
  Index d = inner.dim();
  return MonotoneOp(detail::make_node(ScaledNode{alpha, std::move(inner)}), d);
}

inline MonotoneOp MonotoneOp::inner_shift(Vector shift, MonotoneOp inner) {
  check_dim(shift.size(), inner.dim(), "inner_shift");
  check_finite(shift, "inner_shift");
  Index d = inner.dim();
  return MonotoneOp(detail::make_node(InnerShiftNode{std::move(shift), std::move(inner)}), d);
}

inline MonotoneOp MonotoneOp::outer_shift(Vector shift, MonotoneOp inner) {
  check_dim(shift.size(), inner.dim(), "outer_shift");
  check_finite(shift, "outer_shift");
  Index d = inner.dim();
  return MonotoneOp(detail::make_node(OuterShiftNode{std::move(shift), std::move(inner)}), d);
}

inline MonotoneOp MonotoneOp::block_diag(std::vector<MonotoneOp> parts) {
  if (parts.empty()) throw DimensionError("block_diag: needs at least one part");
  Index d = 0;
  for (const auto& p : parts) d += p.dim();
  return MonotoneOp(detail::make_node(BlockDiagNode{std::move(parts)}), d);
}

bool is_single_valued(const MonotoneOp& op);

namespace detail {

struct SingleValuedVisitor {
  bool operator()(const AffineOpNode&) const { return true; }
  bool operator()(const ConstOpNode&) const { return true; }
  bool operator()(const NormalConeNode&) const { return false; }
  bool operator()(const GradHalfDistSqNode&) const { return true; }
  bool operator()(const ScaledNode& n) const { return is_single_valued(n.inner); }
  bool operator()(const InnerShiftNode& n) const { return is_single_valued(n.inner); }
  bool operator()(const OuterShiftNode& n) const { return is_single_valued(n.inner); }
  bool operator()(const BlockDiagNode& n) const {
    for (const auto& p : n.parts) {
      if (!is_single_valued(p)) return false;
    }
    return true;
  }
};

}  // namespace detail

inline bool is_single_valued(const MonotoneOp& op) {
  return std::visit(detail::SingleValuedVisitor{}, op.node());
}

Vector apply(const MonotoneOp& op, const Vector& x,
             const ToleranceConfig& tol = default_tolerances());

namespace detail {

struct ApplyVisitor {
  const Vector& x;
  const ToleranceConfig& tol;

  Vector operator()(const AffineOpNode& n) const { return n.map.apply(x); }
  Vector operator()(const ConstOpNode& n) const { return n.value; }
  Vector operator()(const NormalConeNode&) const {
    throw NotSingleValuedError("apply: normal cone is set-valued; use resolvent");
  }
  Vector operator()(const GradHalfDistSqNode& n) const {
    return grad_half_dist_sq(n.set, x, tol);
  }
  Vector operator()(const ScaledNode& n) const { return n.alpha * apply(n.inner, x, tol); }
  Vector operator()(const InnerShiftNode& n) const { return apply(n.inner, x - n.shift, tol); }
  Vector operator()(const OuterShiftNode& n) const { return apply(n.inner, x, tol) - n.shift; }
  Vector operator()(const BlockDiagNode& n) const {
    Vector y(x.size());
    Index at = 0;
    for (const auto& p : n.parts) {
      y.segment(at, p.dim()) = apply(p, x.segment(at, p.dim()), tol);
      at += p.dim();
    }
    return y;
  }
};

}  // namespace detail

inline Vector apply(const MonotoneOp& op, const Vector& x, const ToleranceConfig& tol) {
  check_dim(x.size(), op.dim(), "apply");
  check_finite(x, "apply");
  return std::visit(detail::ApplyVisitor{x, tol}, op.node());
}

namespace detail {

Vector resolvent_scaled(double c, const MonotoneOp& op, const Vector& x,
                        const ToleranceConfig& tol);

// Resolvent of c*op at x, i.e. the y with x - y in c*op(y). Scaling is folded
// into the recursion so every composite variant reduces to a leaf rule.
struct ResolventVisitor {
  double c;
  const Vector& x;
  const ToleranceConfig& tol;

  Vector operator()(const AffineOpNode& n) const {
    const Matrix& l = n.map.linear().matrix();
    const Index d = l.rows();
    Matrix system = Matrix::Identity(d, d) + c * l;
    Vector rhs = x - c * n.map.offset();
    Eigen::PartialPivLU<Matrix> lu(system);
    Vector y = lu.solve(rhs);
    const double residual = (system * y - rhs).norm();
    const double scale = 1.0 + rhs.norm();
    if (!(residual <= tol.solve_residual * scale)) {
      throw NumericError("affine resolvent: solve residual " + format_double(residual) +
                         ", reciprocal condition " + format_double(lu.rcond()) +
                         "; system is numerically singular");
    }
    return y;
  }

  Vector operator()(const ConstOpNode& n) const { return x - c * n.value; }

  Vector operator()(const NormalConeNode& n) const {
    // positive scaling leaves a cone unchanged, so J_{c N_C} = P_C
    return project(n.set, x, tol);
  }

  Vector operator()(const GradHalfDistSqNode& n) const {
    // prox of (c/2) dist^2: x + c/(1+c) (P_set x - x)
    return x + (c / (1.0 + c)) * (project(n.set, x, tol) - x);
  }

  Vector operator()(const ScaledNode& n) const {
    return resolvent_scaled(c * n.alpha, n.inner, x, tol);
  }

  Vector operator()(const InnerShiftNode& n) const {
    // c * inner((.) - w): shift the argument, shift back
    return n.shift + resolvent_scaled(c, n.inner, x - n.shift, tol);
  }

  Vector operator()(const OuterShiftNode& n) const {
    // c * (inner - w) = c*inner - c*w
    return resolvent_scaled(c, n.inner, x + c * n.shift, tol);
  }

  Vector operator()(const BlockDiagNode& n) const {
    Vector y(x.size());
    Index at = 0;
    for (const auto& p : n.parts) {
      y.segment(at, p.dim()) = resolvent_scaled(c, p, x.segment(at, p.dim()), tol);
      at += p.dim();
    }
    return y;
  }
};

inline Vector resolvent_scaled(double c, const MonotoneOp& op, const Vector& x,
                               const ToleranceConfig& tol) {
  return std::visit(ResolventVisitor{c, x, tol}, op.node());
}

}  // namespace detail

// J_op(x) = (Id + op)^{-1} x.
inline Vector resolvent(const MonotoneOp& op, const Vector& x,
                        const ToleranceConfig& tol = default_tolerances()) {
  check_dim(x.size(), op.dim(), "resolvent");
  check_finite(x, "resolvent");
  return detail::resolvent_scaled(1.0, op, x, tol);
}

// R_op = 2 J_op - Id.
inline Vector reflected_resolvent(const MonotoneOp& op, const Vector& x,
                                  const ToleranceConfig& tol = default_tolerances()) {
  return 2.0 * resolvent(op, x, tol) - x;
}

// J_{op^{-1}} = Id - J_op (Minty parametrization of the inverse).
inline Vector inverse_resolvent_complement(const MonotoneOp& op, const Vector& x,
                                           const ToleranceConfig& tol = default_tolerances()) {
  return x - resolvent(op, x, tol);
}

// Resolvent of the inverse-of-dual operator: J_{op^{-v}}(x) = x + J_op(-x).
inline Vector dual_resolvent(const MonotoneOp& op, const Vector& x,
                             const ToleranceConfig& tol = default_tolerances()) {
  return x + resolvent(op, -x, tol);
}

// Witness for alpha-cocoercivity of a sampled map: alpha*map must satisfy the
// firm-nonexpansiveness inequality |T u - T v|^2 <= <u - v, T u - T v>.
struct CocoercivityWitness {
  double alpha = 1.0;
  long samples_checked = 0;
  double max_violation = 0.0;

  bool passed(double tol = default_tolerances().invariant) const {
    return max_violation <= tol;
  }
};

template <typename MapFn>
CocoercivityWitness check_firmly_nonexpansive(MapFn&& map, Index dim, long n_samples,
                                              std::uint64_t seed, double alpha = 1.0,
                                              double sample_scale = 10.0) {
  if (dim < 1) throw DimensionError("check_firmly_nonexpansive: dim must be >= 1");
  if (n_samples < 1) throw Error("check_firmly_nonexpansive: n_samples must be >= 1");
  GaussianSampler rng(seed);
  CocoercivityWitness witness;
  witness.alpha = alpha;
  for (long s = 0; s < n_samples; ++s) {
    const Vector x = rng.vector(dim, sample_scale);
    const Vector y = rng.vector(dim, sample_scale);
    const Vector dmap = alpha * (map(x) - map(y));
    const double violation = dmap.squaredNorm() - (x - y).dot(dmap);
    if (violation > witness.max_violation) witness.max_violation = violation;
    ++witness.samples_checked;
  }
  return witness;
}

inline CocoercivityWitness check_firmly_nonexpansive(const MonotoneOp& op, long n_samples,
                                                     std::uint64_t seed, double alpha = 1.0,
                                                     double sample_scale = 10.0) {
  return check_firmly_nonexpansive([&op](const Vector& x) { return apply(op, x); }, op.dim(),
                                   n_samples, seed, alpha, sample_scale);
}

// Rescale a pair by alpha > 0: zer(alpha A + alpha B) = zer(A + B), and an
// alpha-cocoercive A becomes firmly nonexpansive.
inline std::pair<MonotoneOp, MonotoneOp> cocoercive_rescale(const MonotoneOp& a,
                                                            const MonotoneOp& b, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error("cocoercive_rescale: alpha must be finite and > 0");
  }
  return {MonotoneOp::scaled(alpha, a), MonotoneOp::scaled(alpha, b)};
}

// Structural affineness predicates: used to gate the closed-form displacement
// machinery, which is exact only for affine fixed-point maps.

bool projector_is_affine(const ConvexSet& set);

namespace detail {

struct ProjectorAffineVisitor {
  bool operator()(const AffineSubspaceSet&) const { return true; }
  bool operator()(const DiagonalSet&) const { return true; }
  bool operator()(const TranslateSet& s) const { return projector_is_affine(s.inner); }
  bool operator()(const ProductSet& s) const {
    for (const auto& p : s.parts) {
      if (!projector_is_affine(p)) return false;
    }
    return true;
  }
  template <typename Other>
  bool operator()(const Other&) const {
    return false;
  }
};

}  // namespace detail

inline bool projector_is_affine(const ConvexSet& set) {
  return std::visit(detail::ProjectorAffineVisitor{}, set.node());
}

bool has_affine_apply(const MonotoneOp& op);
bool has_affine_resolvent(const MonotoneOp& op);

namespace detail {

struct AffineApplyVisitor {
  bool operator()(const AffineOpNode&) const { return true; }
  bool operator()(const ConstOpNode&) const { return true; }
  bool operator()(const NormalConeNode&) const { return false; }
  bool operator()(const GradHalfDistSqNode& n) const { return projector_is_affine(n.set); }
  bool operator()(const ScaledNode& n) const { return has_affine_apply(n.inner); }
  bool operator()(const InnerShiftNode& n) const { return has_affine_apply(n.inner); }
  bool operator()(const OuterShiftNode& n) const { return has_affine_apply(n.inner); }
  bool operator()(const BlockDiagNode& n) const {
    for (const auto& p : n.parts) {
      if (!has_affine_apply(p)) return false;
    }
    return true;
  }
};

struct AffineResolventVisitor {
  bool operator()(const AffineOpNode&) const { return true; }
  bool operator()(const ConstOpNode&) const { return true; }
  bool operator()(const NormalConeNode& n) const { return projector_is_affine(n.set); }
  bool operator()(const GradHalfDistSqNode& n) const { return projector_is_affine(n.set); }
  bool operator()(const ScaledNode& n) const { return has_affine_resolvent(n.inner); }
  bool operator()(const InnerShiftNode& n) const { return has_affine_resolvent(n.inner); }
  bool operator()(const OuterShiftNode& n) const { return has_affine_resolvent(n.inner); }
  bool operator()(const BlockDiagNode& n) const {
    for (const auto& p : n.parts) {
      if (!has_affine_resolvent(p)) return false;
    }
    return true;
  }
};

}  // namespace detail

inline bool has_affine_apply(const MonotoneOp& op) {
  return std::visit(detail::AffineApplyVisitor{}, op.node());
}

inline bool has_affine_resolvent(const MonotoneOp& op) {
  return std::visit(detail::AffineResolventVisitor{}, op.node());
}

}  // namespace opsplit
