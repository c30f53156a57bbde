#pragma once

#include "opsplit/displacement.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace opsplit {

// Many-operator problem: find z with 0 in sum_i A_i z, where each A_i is
// alpha_i-cocoercive (alpha_i * A_i is firmly nonexpansive). Lifted to the
// product space R^(m*d) with the uniform scaling alpha = min alpha_i, it
// becomes a two-operator split between the block-diagonal operator and the
// normal cone of the diagonal subspace, so the whole two-operator toolkit
// applies. The alphas are cocoercivity constants supplied by the caller, not
// weights: zer(sum_i alpha A_i) = zer(sum_i A_i).
struct ProductProblem {
  std::vector<MonotoneOp> ops;
  std::vector<double> alphas;
  Index block_dim = 0;

  ProductProblem(std::vector<MonotoneOp> operators, std::vector<double> cocoercivity)
      : ops(std::move(operators)), alphas(std::move(cocoercivity)) {
    if (ops.size() < 2) throw Error("ProductProblem: needs at least two operators");
    if (alphas.size() != ops.size()) {
      throw DimensionError("ProductProblem: " + std::to_string(ops.size()) + " operators but " +
                           std::to_string(alphas.size()) + " cocoercivity constants");
    }
    block_dim = ops.front().dim();
    for (const auto& op : ops) check_dim(op.dim(), block_dim, "ProductProblem");
    for (double a : alphas) {
      if (!(a > 0.0) || !std::isfinite(a)) {
        throw Error("ProductProblem: cocoercivity constants must be positive and finite");
      }
    }
  }

  std::size_t count() const { return ops.size(); }
  Index lifted_dim() const { return static_cast<Index>(count()) * block_dim; }
  // uniform scaling making every block firmly nonexpansive
  double alpha() const { return *std::min_element(alphas.begin(), alphas.end()); }
};

// Copy z into each of the m blocks.
inline Vector lift(const Vector& z, std::size_t m) {
  Vector out(static_cast<Index>(m) * z.size());
  for (std::size_t i = 0; i < m; ++i) {
    out.segment(static_cast<Index>(i) * z.size(), z.size()) = z;
  }
  return out;
}

// Mean of the m blocks of a product-space point.
inline Vector average(const Vector& x, std::size_t m) {
  if (m == 0) throw Error("average: m must be positive");
  if (x.size() % static_cast<Index>(m) != 0) {
    throw DimensionError("average: size " + std::to_string(x.size()) +
                         " is not divisible into " + std::to_string(m) + " blocks");
  }
  const Index d = x.size() / static_cast<Index>(m);
  Vector out = Vector::Zero(d);
  for (std::size_t i = 0; i < m; ++i) {
    out += x.segment(static_cast<Index>(i) * d, d);
  }
  return out / static_cast<double>(m);
}

// Projection onto the diagonal subspace {(z, ..., z)}: lift of the block
// mean. The residual x - P(x) lies in the orthogonal complement, i.e. its
// blocks sum to zero; this is checked.
inline Vector project_diagonal(const Vector& x, std::size_t m) {
  Vector out = lift(average(x, m), m);
  const Index d = out.size() / static_cast<Index>(m);
  Vector block_sum = Vector::Zero(d);
  for (std::size_t i = 0; i < m; ++i) {
    block_sum += x.segment(static_cast<Index>(i) * d, d) -
                 out.segment(static_cast<Index>(i) * d, d);
  }
  if (block_sum.norm() > 1e-10 * (1.0 + x.norm())) {
    throw NumericError("project_diagonal: residual blocks do not sum to zero, norm " +
                       format_double(block_sum.norm()));
  }
  return out;
}

// The two-operator form of the lifted problem: the forward operator is the
// block diagonal of the uniformly scaled alpha A_i with alpha = min alpha_i
// (so every block is firmly nonexpansive), and the backward operator is the
// normal cone of the diagonal subspace, whose resolvent is project_diagonal.
inline SplitProblem build_lifted_problem(const ProductProblem& p, bool validate = true,
                                         const ToleranceConfig& tol = default_tolerances()) {
  const double alpha = p.alpha();
  std::vector<MonotoneOp> scaled;
  scaled.reserve(p.count());
  for (std::size_t i = 0; i < p.count(); ++i) {
    scaled.push_back(MonotoneOp::scaled(alpha, p.ops[i]));
  }
  MonotoneOp forward = MonotoneOp::block_diag(std::move(scaled));
  MonotoneOp backward =
      MonotoneOp::normal_cone(ConvexSet::diagonal(static_cast<Index>(p.count()), p.block_dim));
  return SplitProblem(std::move(forward), std::move(backward), validate, tol);
}

// Result of running the normal-problem machinery on the lifted problem and
// projecting back down to the base space.
struct ParallelSolveReport {
  NormalSolveReport lifted;     // report for the product-space FB map
  Vector z;                     // block average of the lifted solution
  Vector v_average;             // block average of the lifted displacement
  double sum_residual = 0.0;    // |sum_i alpha A_i z| when all A_i are single-valued
  bool sum_residual_available = false;
};

inline ParallelSolveReport parallel_fb_solve(const ProductProblem& p, const Vector& z0,
                                             const NormalSolveOptions& opts = {},
                                             const ToleranceConfig& tol = default_tolerances()) {
  check_dim(z0.size(), p.block_dim, "parallel_fb_solve");
  const SplitProblem lifted_problem = build_lifted_problem(p, true, tol);
  const FixedPointMap map = FixedPointMap::forward_backward(lifted_problem);

  ParallelSolveReport report;
  report.lifted = normal_solve(map, lift(z0, p.count()), opts, tol);
  report.z = average(report.lifted.z, p.count());
  report.v_average = average(report.lifted.v, p.count());

  bool all_single = true;
  for (const auto& op : p.ops) all_single = all_single && is_single_valued(op);
  if (all_single) {
    const double alpha = p.alpha();
    Vector total = Vector::Zero(p.block_dim);
    for (std::size_t i = 0; i < p.count(); ++i) {
      total += alpha * apply(p.ops[i], report.z, tol);
    }
    report.sum_residual = total.norm();
    report.sum_residual_available = true;
  }
  return report;
}

}  // namespace opsplit
