#pragma once

#include "opsplit/monotone.hpp"

#include <memory>
#include <optional>
#include <variant>
#include <vector>

namespace opsplit {

// Inclusion problem: find x with 0 in A x + B x. A must be single-valued and
// firmly nonexpansive (1-cocoercive); rescale with cocoercive_rescale first if
// it is only alpha-cocoercive. B only needs a resolvent.
class SplitProblem {
 public:
  SplitProblem(MonotoneOp a, MonotoneOp b, bool validate = true,
               const ToleranceConfig& tol = default_tolerances())
      : a_(std::move(a)), b_(std::move(b)) {
    check_dim(b_.dim(), a_.dim(), "SplitProblem");
    if (!is_single_valued(a_)) {
      throw NotSingleValuedError("SplitProblem: A must be single-valued");
    }
    if (validate) {
      const auto witness = check_firmly_nonexpansive(a_, kValidationSamples, kValidationSeed);
      if (!witness.passed(tol.invariant)) {
        throw NumericError("SplitProblem: A failed the firm-nonexpansiveness check, max "
                           "violation " + format_double(witness.max_violation) +
                           " over " + std::to_string(witness.samples_checked) +
                           " sampled pairs; rescale a merely cocoercive operator first");
      }
    }
  }

  const MonotoneOp& a() const { return a_; }
  const MonotoneOp& b() const { return b_; }
  Index dim() const { return a_.dim(); }

  static constexpr long kValidationSamples = 64;
  static constexpr std::uint64_t kValidationSeed = 0x51ee7ull;

 private:
  MonotoneOp a_;
  MonotoneOp b_;
};

// Forward-backward map J_B(Id - A).
inline Vector t_fb(const SplitProblem& p, const Vector& x,
                   const ToleranceConfig& tol = default_tolerances()) {
  return resolvent(p.b(), x - apply(p.a(), x, tol), tol);
}

// Douglas-Rachford map Id - J_A + J_B(2 J_A - Id).
inline Vector t_dr(const SplitProblem& p, const Vector& x,
                   const ToleranceConfig& tol = default_tolerances()) {
  const Vector ja = resolvent(p.a(), x, tol);
  return x - ja + resolvent(p.b(), 2.0 * ja - x, tol);
}

struct MapNode;

// Nonexpansive self-map of R^d built from the splitting catalog.
class FixedPointMap {
 public:
  static FixedPointMap forward_backward(SplitProblem problem);
  static FixedPointMap douglas_rachford(SplitProblem problem);
  // alternating projections x |-> P_v(P_u(x))
  static FixedPointMap alternating_projections(ConvexSet u, ConvexSet v);
  // x |-> shift + inner(x)
  static FixedPointMap shifted(FixedPointMap inner, Vector shift);

  Index dim() const { return dim_; }
  const MapNode& node() const { return *node_; }

 private:
  FixedPointMap(std::shared_ptr<const MapNode> node, Index dim)
      : node_(std::move(node)), dim_(dim) {}

  std::shared_ptr<const MapNode> node_;
  Index dim_;
};

struct FbMapNode {
  SplitProblem problem;
};

struct DrMapNode {
  SplitProblem problem;
};

struct AlternatingMapNode {
  ConvexSet u;
  ConvexSet v;
};

struct ShiftedMapNode {
  FixedPointMap inner;
  Vector shift;
};

struct MapNode : std::variant<FbMapNode, DrMapNode, AlternatingMapNode, ShiftedMapNode> {
  using variant::variant;
};

namespace detail {

inline std::shared_ptr<const MapNode> make_node(MapNode n) {
  return std::make_shared<const MapNode>(std::move(n));
}

}  // namespace detail

inline FixedPointMap FixedPointMap::forward_backward(SplitProblem problem) {
  Index d = problem.dim();
  return FixedPointMap(detail::make_node(FbMapNode{std::move(problem)}), d);
}

inline FixedPointMap FixedPointMap::douglas_rachford(SplitProblem problem) {
  Index d = problem.dim();
  return FixedPointMap(detail::make_node(DrMapNode{std::move(problem)}), d);
}

inline FixedPointMap FixedPointMap::alternating_projections(ConvexSet u, ConvexSet v) {
  check_dim(v.dim(), u.dim(), "alternating_projections");
  Index d = u.dim();
  return FixedPointMap(detail::make_node(AlternatingMapNode{std::move(u), std::move(v)}), d);
}

inline FixedPointMap FixedPointMap::shifted(FixedPointMap inner, Vector shift) {
  check_dim(shift.size(), inner.dim(), "shifted map");
  check_finite(shift, "shifted map");
  Index d = inner.dim();
  return FixedPointMap(detail::make_node(ShiftedMapNode{std::move(inner), std::move(shift)}), d);
}

Vector apply_map(const FixedPointMap& map, const Vector& x,
                 const ToleranceConfig& tol = default_tolerances());

namespace detail {

struct ApplyMapVisitor {
  const Vector& x;
  const ToleranceConfig& tol;

  Vector operator()(const FbMapNode& n) const { return t_fb(n.problem, x, tol); }
  Vector operator()(const DrMapNode& n) const { return t_dr(n.problem, x, tol); }
  Vector operator()(const AlternatingMapNode& n) const {
    return project(n.v, project(n.u, x, tol), tol);
  }
  Vector operator()(const ShiftedMapNode& n) const {
    return n.shift + apply_map(n.inner, x, tol);
  }
};

}  // namespace detail

inline Vector apply_map(const FixedPointMap& map, const Vector& x, const ToleranceConfig& tol) {
  check_dim(x.size(), map.dim(), "apply_map");
  return std::visit(detail::ApplyMapVisitor{x, tol}, map.node());
}

inline Vector apply_map_n(const FixedPointMap& map, Vector x, long n,
                          const ToleranceConfig& tol = default_tolerances()) {
  for (long k = 0; k < n; ++k) x = apply_map(map, x, tol);
  return x;
}

// True when every iterate of the map is an affine function of x, which makes
// the closed-form displacement and acceleration identities exact.
bool is_affine(const FixedPointMap& map);

namespace detail {

struct MapAffineVisitor {
  bool operator()(const FbMapNode& n) const {
    return has_affine_apply(n.problem.a()) && has_affine_resolvent(n.problem.b());
  }
  bool operator()(const DrMapNode& n) const {
    return has_affine_resolvent(n.problem.a()) && has_affine_resolvent(n.problem.b());
  }
  bool operator()(const AlternatingMapNode& n) const {
    return projector_is_affine(n.u) && projector_is_affine(n.v);
  }
  bool operator()(const ShiftedMapNode& n) const { return is_affine(n.inner); }
};

}  // namespace detail

inline bool is_affine(const FixedPointMap& map) {
  return std::visit(detail::MapAffineVisitor{}, map.node());
}

// Recover the (L, b) form of an affine map by probing it at 0 and the
// coordinate directions; exact for affine maps.
inline AffineMap affine_form(const FixedPointMap& map,
                             const ToleranceConfig& tol = default_tolerances()) {
  if (!is_affine(map)) {
    throw UnsupportedError("affine_form: map is not structurally affine");
  }
  const Index d = map.dim();
  const Vector b = apply_map(map, Vector::Zero(d), tol);
  Matrix l(d, d);
  for (Index j = 0; j < d; ++j) {
    Vector e = Vector::Zero(d);
    e[j] = 1.0;
    l.col(j) = apply_map(map, e, tol) - b;
  }
  return AffineMap(std::move(l), b);
}

enum class StopReason { tolerance, max_iter, divergence };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::tolerance: return "tolerance";
    case StopReason::max_iter: return "max_iter";
    case StopReason::divergence: return "divergence";
  }
  return "unknown";
}

// Orbit record. Stores every iterate up to the cap, then thins to every
// stride-th point (stride doubles each time the cap is hit). step_norms[i]
// is |x_{n_i} - x_{n_i + 1}| for the recorded index n_i; the final iterate
// carries no step, so step_norms.size() == iterates.size() - 1.
struct IterationTrace {
  std::vector<long> indices;
  std::vector<Vector> iterates;
  std::vector<double> step_norms;
  std::vector<double> displacement_residuals;  // |x_n - x_{n+1} - v|, when v was supplied
  StopReason stop_reason = StopReason::max_iter;
  long total_iterations = 0;
  double final_step_norm = 0.0;

  const Vector& final_point() const { return iterates.back(); }
  bool has_displacement() const { return !displacement_residuals.empty(); }
};

struct IterateOptions {
  long max_iter = 100000;
  double tol = 1e-8;
  double divergence_threshold = 1e8;
  // consecutive iterates beyond the threshold needed to call it divergence
  int divergence_confirm = 10;
  std::size_t trace_cap = 10000;
  std::optional<Vector> displacement;  // record |x_n - x_{n+1} - v| against this v
};

// Numerical blow-up (non-finite iterate); carries the partial trace.
struct IterationOverflow : NumericError {
  IterationOverflow(const std::string& msg, IterationTrace t)
      : NumericError(msg), trace(std::move(t)) {}
  IterationTrace trace;
};

namespace detail {

class TraceRecorder {
 public:
  TraceRecorder(std::size_t cap, bool with_displacement)
      : cap_(cap < 2 ? 2 : cap), with_displacement_(with_displacement) {}

  void record(long n, const Vector& x, double step_norm, double displacement_residual) {
    if (n % stride_ != 0) return;
    if (trace_.indices.size() >= cap_) thin();
    if (n % stride_ != 0) return;  // stride may have doubled
    trace_.indices.push_back(n);
    trace_.iterates.push_back(x);
    trace_.step_norms.push_back(step_norm);
    if (with_displacement_) trace_.displacement_residuals.push_back(displacement_residual);
  }

  IterationTrace finish(long n_final, const Vector& x_final, StopReason reason,
                        long total_iterations, double final_step_norm) {
    trace_.indices.push_back(n_final);
    trace_.iterates.push_back(x_final);
    trace_.stop_reason = reason;
    trace_.total_iterations = total_iterations;
    trace_.final_step_norm = final_step_norm;
    return std::move(trace_);
  }

 private:
  void thin() {
    std::size_t w = 0;
    for (std::size_t r = 0; r < trace_.indices.size(); r += 2) {
      trace_.indices[w] = trace_.indices[r];
      trace_.iterates[w] = std::move(trace_.iterates[r]);
      trace_.step_norms[w] = trace_.step_norms[r];
      if (with_displacement_) trace_.displacement_residuals[w] = trace_.displacement_residuals[r];
      ++w;
    }
    trace_.indices.resize(w);
    trace_.iterates.resize(w);
    trace_.step_norms.resize(w);
    if (with_displacement_) trace_.displacement_residuals.resize(w);
    stride_ *= 2;
  }

  IterationTrace trace_;
  std::size_t cap_;
  bool with_displacement_;
  long stride_ = 1;
};

}  // namespace detail

// Iterate x_{n+1} = map(x_n) until the step norm reaches tol, the budget runs
// out, or the iterate norm stays beyond divergence_threshold for
// divergence_confirm consecutive iterations.
inline IterationTrace iterate(const FixedPointMap& map, const Vector& x0,
                              const IterateOptions& opts = {},
                              const ToleranceConfig& tol = default_tolerances()) {
  check_dim(x0.size(), map.dim(), "iterate");
  check_finite(x0, "iterate");
  if (opts.max_iter < 1) throw Error("iterate: max_iter must be >= 1");
  if (opts.displacement) check_dim(opts.displacement->size(), map.dim(), "iterate displacement");

  detail::TraceRecorder recorder(opts.trace_cap, opts.displacement.has_value());
  Vector x = x0;
  long n = 0;
  int beyond_threshold = 0;
  double last_step = 0.0;
  StopReason reason = StopReason::max_iter;

  while (n < opts.max_iter) {
    Vector next = apply_map(map, x, tol);
    if (!next.allFinite()) {
      throw IterationOverflow(
          "iterate: non-finite iterate at n=" + std::to_string(n + 1),
          recorder.finish(n, x, StopReason::divergence, n, last_step));
    }
    last_step = (x - next).norm();
    const double disp_res =
        opts.displacement ? (x - next - *opts.displacement).norm() : 0.0;
    recorder.record(n, x, last_step, disp_res);
    x = std::move(next);
    ++n;

    if (last_step <= opts.tol) {
      reason = StopReason::tolerance;
      break;
    }
    if (x.norm() >= opts.divergence_threshold) {
      if (++beyond_threshold >= opts.divergence_confirm) {
        reason = StopReason::divergence;
        break;
      }
    } else {
      beyond_threshold = 0;
    }
  }
  return recorder.finish(n, x, reason, n, last_step);
}

// Solution certificate for 0 in A z + B z obtained through the FB iteration.
struct Solution {
  Vector z;
  double primal_residual = 0.0;  // |z - T_fb z|
  Vector dual_point;             // A z, the Attouch-Thera dual certificate
  IterationTrace trace;
};

// FB iteration did not reach the tolerance; carries the partial orbit.
struct ConvergenceFailure : Error {
  ConvergenceFailure(const std::string& msg, IterationTrace t)
      : Error(msg), trace(std::move(t)) {}
  IterationTrace trace;
};

inline Solution solve_primal(const SplitProblem& problem, const Vector& x0,
                             const IterateOptions& opts = {},
                             const ToleranceConfig& tol = default_tolerances()) {
  const FixedPointMap map = FixedPointMap::forward_backward(problem);
  IterationTrace trace = iterate(map, x0, opts, tol);
  if (trace.stop_reason != StopReason::tolerance) {
    throw ConvergenceFailure(
        std::string("solve_primal: iteration stopped with reason '") +
            to_string(trace.stop_reason) +
            "' after " + std::to_string(trace.total_iterations) +
            " iterations (step norm " + format_double(trace.final_step_norm) +
            "); the problem may be inconsistent or slowly convergent",
        std::move(trace));
  }
  Solution sol{trace.final_point(), 0.0, Vector(), std::move(trace)};
  sol.primal_residual = (sol.z - t_fb(problem, sol.z, tol)).norm();
  sol.dual_point = apply(problem.a(), sol.z, tol);
  return sol;
}

// |x - w - T_fb(x)|: fixed-point residual of the w-perturbed problem
// 0 in A x + B(x - w) evaluated through the shifted map w + T_fb.
inline double perturbed_residual(const SplitProblem& problem, const Vector& w, const Vector& x,
                                 const ToleranceConfig& tol = default_tolerances()) {
  check_dim(w.size(), problem.dim(), "perturbed_residual");
  return (x - w - t_fb(problem, x, tol)).norm();
}

// Max over sampled pairs of |Tx - Ty|^2 + (1-a)/a |(Id-T)x - (Id-T)y|^2
// - |x - y|^2; nonpositive (up to slack) characterizes a-averagedness.
template <typename MapFn>
double averagedness_defect_fn(MapFn&& map, Index dim, double alpha, long n_samples,
                              std::uint64_t seed, double sample_scale = 10.0) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("averagedness_defect: alpha must be in (0, 1)");
  GaussianSampler rng(seed);
  double worst = -std::numeric_limits<double>::infinity();
  const double ratio = (1.0 - alpha) / alpha;
  for (long s = 0; s < n_samples; ++s) {
    const Vector x = rng.vector(dim, sample_scale);
    const Vector y = rng.vector(dim, sample_scale);
    const Vector tx = map(x);
    const Vector ty = map(y);
    const double defect = (tx - ty).squaredNorm() +
                          ratio * ((x - tx) - (y - ty)).squaredNorm() -
                          (x - y).squaredNorm();
    if (defect > worst) worst = defect;
  }
  return worst;
}

inline double averagedness_defect(const FixedPointMap& map, double alpha, long n_samples,
                                  std::uint64_t seed, double sample_scale = 10.0) {
  return averagedness_defect_fn([&map](const Vector& x) { return apply_map(map, x); },
                                map.dim(), alpha, n_samples, seed, sample_scale);
}

// The FB map of a valid problem is 2/3-averaged.
inline double averagedness_defect(const SplitProblem& problem, long n_samples,
                                  std::uint64_t seed) {
  return averagedness_defect(FixedPointMap::forward_backward(problem), 2.0 / 3.0, n_samples,
                             seed);
}

}  // namespace opsplit
