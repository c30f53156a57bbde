#pragma once

#include "opsplit/serialize.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace opsplit {

// Provenance of an expected value:
//   analytic   - follows in closed form from the structure of the instance
//   elementary - direct consequence of definitions (membership, monotonicity)
//   oracle     - computed at runtime by an independent naive procedure
enum class ExpectedKind { analytic, elementary, oracle };

inline const char* to_string(ExpectedKind k) {
  switch (k) {
    case ExpectedKind::analytic: return "analytic";
    case ExpectedKind::elementary: return "elementary";
    case ExpectedKind::oracle: return "oracle";
  }
  return "unknown";
}

struct AssertionResult {
  std::string name;
  ExpectedKind kind = ExpectedKind::elementary;
  double deviation = 0.0;  // measured distance from the expectation
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

struct ScenarioReport {
  std::string id;
  std::string description;
  std::string anchor;
  std::vector<AssertionResult> assertions;
  std::vector<std::pair<std::string, IterationTrace>> traces;

  bool all_passed() const {
    for (const auto& a : assertions) {
      if (!a.pass) return false;
    }
    return true;
  }
};

struct ScenarioInfo {
  std::string id;
  std::string description;
  std::string anchor;
};

namespace detail {

inline void check(ScenarioReport& report, std::string name, ExpectedKind kind, double deviation,
                  double tolerance, std::string detail_text = {}) {
  AssertionResult r;
  r.name = std::move(name);
  r.kind = kind;
  r.deviation = deviation;
  r.tolerance = tolerance;
  r.pass = std::isfinite(deviation) && deviation <= tolerance;
  r.detail = std::move(detail_text);
  report.assertions.push_back(std::move(r));
}

inline void check_flag(ScenarioReport& report, std::string name, ExpectedKind kind, bool ok,
                       std::string detail_text = {}) {
  check(report, std::move(name), kind, ok ? 0.0 : 1.0, 0.5, std::move(detail_text));
}

inline std::string vec_str(const Vector& v) {
  std::ostringstream out;
  out << "(";
  for (Index i = 0; i < v.size(); ++i) {
    if (i) out << ", ";
    out << format_double(v[i]);
  }
  out << ")";
  return out.str();
}

// -----------------------------------------------------------------------
// Naive oracles, deliberately independent of the main solver paths.

// Least-norm least-squares solve via complete orthogonal decomposition.
inline Vector pinv_solve(const Matrix& w, const Vector& rhs) {
  return w.completeOrthogonalDecomposition().solve(rhs);
}

// For an affine map z -> M z + c with fixed points, the orthogonal
// projection of x onto {z : (I - M) z = c}: x - pinv(I-M) ((I-M) x - c).
inline Vector oracle_fixed_point_projection(const Matrix& m, const Vector& c, const Vector& x) {
  const Matrix w = Matrix::Identity(m.rows(), m.cols()) - m;
  const Vector z = x - pinv_solve(w, w * x - c);
  if ((w * z - c).norm() > 1e-8 * (1.0 + c.norm() + x.norm())) {
    throw NumericError("oracle_fixed_point_projection: the fixed-point system is inconsistent");
  }
  return z;
}

// Orthonormal basis of the null space of a, via SVD.
inline Matrix oracle_nullspace(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? 1e-10 * sv(0) : 0.0;
  Index rank = 0;
  while (rank < sv.size() && sv(rank) > cutoff) ++rank;
  return svd.matrixV().rightCols(a.cols() - rank);
}

// Orthonormal basis of the intersection of two subspaces given by
// orthonormal bases: the null space of the stacked deficiency operators.
inline Matrix oracle_subspace_intersection(const Matrix& b1, const Matrix& b2) {
  const Index d = b1.rows();
  Matrix stacked(2 * d, d);
  stacked.topRows(d) = Matrix::Identity(d, d) - b1 * b1.transpose();
  stacked.bottomRows(d) = Matrix::Identity(d, d) - b2 * b2.transpose();
  return oracle_nullspace(stacked);
}

// Largest eigenvalue magnitude strictly inside the unit circle.
inline double oracle_subunit_spectral_radius(const Matrix& m) {
  Eigen::EigenSolver<Matrix> eig(m);
  double best = 0.0;
  for (Index i = 0; i < m.rows(); ++i) {
    const double mag = std::abs(eig.eigenvalues()[i]);
    if (mag < 1.0 - 1e-9 && mag > best) best = mag;
  }
  return best;
}

// Solution of 0 in (L z + b - w) + N_U(z - w) for an affine subspace
// U = {o + D t}: z = w + o + D t with (D^T L D) t = -D^T (L (w + o) + b - w).
// Throws unless the reduced system has a unique solution.
inline Vector oracle_affine_inclusion_solution(const Matrix& l, const Vector& b, const Vector& o,
                                               const Matrix& d, const Vector& w) {
  const Matrix reduced = d.transpose() * l * d;
  const Vector rhs = -d.transpose() * (l * (w + o) + b - w);
  Eigen::FullPivLU<Matrix> lu(reduced);
  if (!lu.isInvertible()) {
    throw NumericError("oracle_affine_inclusion_solution: reduced system is singular");
  }
  return w + o + d * lu.solve(rhs);
}

// Closest points of two balls (must be disjoint or touching from outside).
inline std::pair<Vector, Vector> oracle_ball_nearest_points(const Vector& c1, double r1,
                                                            const Vector& c2, double r2) {
  const Vector diff = c2 - c1;
  const double dist = diff.norm();
  if (dist <= r1 + r2) {
    throw Error("oracle_ball_nearest_points: balls intersect");
  }
  const Vector unit = diff / dist;
  return {c1 + r1 * unit, c2 - r2 * unit};
}

// -----------------------------------------------------------------------
// Scenario implementations.

inline constexpr long kScenarioBudget = 100000;
inline constexpr std::uint64_t kScenarioSeed = 42;

inline ScenarioReport scenario_orthant_shift() {
  ScenarioReport report;
  report.id = "orthant-shift";
  report.description =
      "Projection onto the nonnegative orthant translated by p = (1,1): the minimal "
      "displacement is -p and the shifted iteration lands back in the orthant.";
  report.anchor = "translated orthant projection";

  const ConvexSet orthant = ConvexSet::nonnegative_orthant(2);
  const SplitProblem projector_problem(MonotoneOp::constant(Vector::Zero(2)),
                                       MonotoneOp::normal_cone(orthant));
  Vector p(2);
  p << 1.0, 1.0;
  const FixedPointMap map =
      FixedPointMap::shifted(FixedPointMap::forward_backward(projector_problem), p);
  Vector x0(2);
  x0 << 5.0, -3.0;

  EstimateOptions est_opts;
  est_opts.max_iter = 10000;
  const DisplacementEstimate est = estimate_v_iterative(map, x0, est_opts);
  Vector expected_v(2);
  expected_v << -1.0, -1.0;
  check(report, "displacement-estimate", ExpectedKind::analytic, (est.v - expected_v).norm(),
        1e-6, "estimated " + vec_str(est.v) + " expected " + vec_str(expected_v));
  check_flag(report, "step-norms-monotone", ExpectedKind::elementary, est.monotone_ok);

  NormalSolveOptions ns_opts;
  ns_opts.max_iter = kScenarioBudget;
  const NormalSolveReport ns = normal_solve(map, x0, ns_opts);
  check_flag(report, "normal-solution-found", ExpectedKind::elementary,
             ns.status == NormalSolveStatus::normal_solution_found,
             std::string("status ") + to_string(ns.status));
  check(report, "normal-limit-in-orthant", ExpectedKind::elementary, distance(orthant, ns.z),
        1e-6, "limit " + vec_str(ns.z));

  IterateOptions orbit_opts;
  orbit_opts.max_iter = 10000;
  orbit_opts.tol = 0.0;
  orbit_opts.displacement = est.v;
  const IterationTrace orbit = iterate(map, x0, orbit_opts);
  const SummabilityReport sums = summability(orbit.displacement_residuals);
  check(report, "summability-plateau-squared", ExpectedKind::analytic,
        sums.tail_increase_squared, 1e-8,
        "total " + format_double(sums.sum_squared));
  check(report, "summability-plateau-linear", ExpectedKind::analytic, sums.tail_increase_linear,
        1e-8, "total " + format_double(sums.sum_linear));
  report.traces.emplace_back("orbit", orbit);
  report.traces.emplace_back("normal-orbit", ns.trace);
  return report;
}

inline ScenarioReport scenario_constants() {
  ScenarioReport report;
  report.id = "constants";
  report.description =
      "Two constant operators a* = (1,0), b* = (0,1): no zeros exist, the displacement is "
      "a* + b* = (1,1) exactly, and every point solves the displaced problem.";
  report.anchor = "constant-operator pair";

  Vector a_star(2), b_star(2);
  a_star << 1.0, 0.0;
  b_star << 0.0, 1.0;
  const SplitProblem problem(MonotoneOp::constant(a_star), MonotoneOp::constant(b_star));
  const FixedPointMap map = FixedPointMap::forward_backward(problem);
  GaussianSampler rng(kScenarioSeed);
  const Vector x0 = rng.vector(2, 2.0);

  const DisplacementEstimate est = estimate_v_iterative(map, x0);
  const Vector expected_v = a_star + b_star;
  check(report, "displacement-exact", ExpectedKind::analytic, (est.v - expected_v).norm(),
        1e-12, "estimated " + vec_str(est.v));

  double worst_residual = 0.0;
  for (int k = 0; k < 5; ++k) {
    const Vector x = rng.vector(2, 10.0);
    worst_residual = std::max(worst_residual, perturbed_residual(problem, est.v, x));
  }
  check(report, "displaced-problem-solved-everywhere", ExpectedKind::analytic, worst_residual,
        1e-12, "max residual over 5 sampled points");

  const AcceleratedSequence acc = accelerated_sequence(map, x0, 20);
  double worst_acc = 0.0;
  for (long n : {1L, 5L, 20L}) {
    worst_acc = std::max(worst_acc, (acc.points[static_cast<std::size_t>(n - 1)] - x0).norm());
  }
  check(report, "accelerated-sequence-stays-at-start", ExpectedKind::analytic, worst_acc, 1e-12,
        "the projection of the start onto the full solution space is itself");

  IterateOptions io;
  io.max_iter = 100;
  const IterationTrace shifted_orbit =
      iterate(FixedPointMap::shifted(map, est.v), x0, io);
  check_flag(report, "shifted-iteration-stops-immediately", ExpectedKind::analytic,
             shifted_orbit.stop_reason == StopReason::tolerance &&
                 shifted_orbit.total_iterations == 1);
  report.traces.emplace_back("shifted-orbit", shifted_orbit);
  return report;
}

inline ScenarioReport scenario_hyperbola_infeasible() {
  ScenarioReport report;
  report.id = "hyperbola-infeasible";
  report.description =
      "Hyperbola epigraph against the horizontal axis with a unit pull: the gap is never "
      "attained, the displacement is (-1,0), and the displaced problem has no solution - "
      "the shifted orbit drifts off to infinity at a fourth-root pace.";
  report.anchor = "hyperbola epigraph vs axis, unattained gap";

  const ConvexSet hyper = ConvexSet::hyperbola_epigraph();
  Matrix axis_span(2, 1);
  axis_span << 1.0, 0.0;
  const ConvexSet axis = ConvexSet::affine_subspace(Vector::Zero(2), axis_span);
  Vector pull(2);
  pull << 1.0, 0.0;
  const SplitProblem problem(
      MonotoneOp::grad_half_dist_sq(hyper),
      MonotoneOp::outer_shift(pull, MonotoneOp::normal_cone(axis)));
  const FixedPointMap map = FixedPointMap::forward_backward(problem);
  Vector x0(2);
  x0 << 2.0, 2.0;

  EstimateOptions est_opts;
  est_opts.max_iter = kScenarioBudget;
  const DisplacementEstimate est = estimate_v_iterative(map, x0, est_opts);
  Vector expected_v(2);
  expected_v << -1.0, 0.0;
  check(report, "displacement-estimate", ExpectedKind::analytic, (est.v - expected_v).norm(),
        1e-3, "estimated " + vec_str(est.v) + " after " + std::to_string(est.iterations) +
                  " iterations");
  check_flag(report, "step-norms-monotone", ExpectedKind::elementary, est.monotone_ok);

  NormalSolveOptions ns_opts;
  ns_opts.max_iter = kScenarioBudget;
  const NormalSolveReport ns = normal_solve(map, x0, ns_opts);
  check_flag(report, "no-normal-solution-at-tolerance", ExpectedKind::analytic,
             ns.status != NormalSolveStatus::normal_solution_found,
             std::string("status ") + to_string(ns.status) + ", residual " +
                 format_double(ns.residual));
  // The escape is genuine but extremely slow (the iterate norm grows like the
  // fourth root of the iteration count), so a finite budget reports
  // "inconclusive" rather than crossing any practical divergence threshold.
  check_flag(report, "budget-exhausted-without-solution", ExpectedKind::elementary,
             ns.status == NormalSolveStatus::inconclusive,
             "after " + std::to_string(ns.trace.total_iterations) + " shifted iterations");
  bool norms_grow = true;
  for (std::size_t i = 1; i < ns.trace.iterates.size(); ++i) {
    if (ns.trace.iterates[i].norm() + 1e-9 < ns.trace.iterates[i - 1].norm()) {
      norms_grow = false;
    }
  }
  check_flag(report, "shifted-orbit-norm-monotone-growth", ExpectedKind::elementary, norms_grow,
             "final norm " + format_double(ns.trace.final_point().norm()));
  check_flag(report, "shifted-orbit-escapes-start", ExpectedKind::elementary,
             ns.trace.final_point().norm() > x0.norm() + 5.0,
             "final norm " + format_double(ns.trace.final_point().norm()) + " from " +
                 format_double(x0.norm()));
  report.traces.emplace_back("shifted-orbit", ns.trace);
  return report;
}

inline ScenarioReport scenario_a_identity_ranges() {
  ScenarioReport report;
  report.id = "a-identity-ranges";
  report.description =
      "With the identity as forward operator, the forward-backward map is constant while "
      "the Douglas-Rachford map is half the identity plus that constant - their ranges "
      "differ as drastically as possible.";
  report.anchor = "identity forward operator ranges";

  Vector center(2);
  center << 3.0, 4.0;
  const double radius = 1.0;
  const ConvexSet ball = ConvexSet::ball(center, radius);
  const SplitProblem problem(MonotoneOp::affine(Matrix::Identity(2, 2), Vector::Zero(2)),
                             MonotoneOp::normal_cone(ball));
  // projection of the origin onto the ball, written out directly
  const Vector jb0 = center * (1.0 - radius / center.norm());

  GaussianSampler rng(kScenarioSeed);
  double fb_dev = 0.0, dr_dev = 0.0, fb_diam = 0.0, dr_diam = 0.0;
  std::vector<Vector> fb_images, dr_images;
  for (int k = 0; k < 100; ++k) {
    const Vector x = rng.vector(2, 10.0);
    const Vector fb = t_fb(problem, x);
    const Vector dr = t_dr(problem, x);
    fb_dev = std::max(fb_dev, (fb - jb0).norm());
    dr_dev = std::max(dr_dev, (dr - (0.5 * x + jb0)).norm());
    fb_images.push_back(fb);
    dr_images.push_back(dr);
  }
  for (std::size_t i = 0; i < fb_images.size(); ++i) {
    for (std::size_t j = i + 1; j < fb_images.size(); ++j) {
      fb_diam = std::max(fb_diam, (fb_images[i] - fb_images[j]).norm());
      dr_diam = std::max(dr_diam, (dr_images[i] - dr_images[j]).norm());
    }
  }
  check(report, "fb-map-constant", ExpectedKind::analytic, fb_dev, 1e-12,
        "constant value " + vec_str(jb0));
  check(report, "dr-map-half-identity-plus-constant", ExpectedKind::analytic, dr_dev, 1e-12);
  check(report, "fb-image-collapses", ExpectedKind::elementary, fb_diam, 1e-12,
        "diameter of 100 sampled images");
  check_flag(report, "dr-image-spreads", ExpectedKind::elementary, dr_diam >= 0.1,
             "diameter " + format_double(dr_diam) +
                 " (sampling evidences, not proves, the range difference)");
  return report;
}

inline ScenarioReport scenario_not_self_dual() {
  ScenarioReport report;
  report.id = "not-self-dual";
  report.description =
      "Translation toward a point of a line against that line's normal cone: the "
      "forward-backward map is constant at u, while the same construction on the dual "
      "pair is constant at zero. The two maps could hardly differ more.";
  report.anchor = "dual-pair forward-backward asymmetry";

  Matrix axis_span(2, 1);
  axis_span << 1.0, 0.0;
  const ConvexSet v_line = ConvexSet::affine_subspace(Vector::Zero(2), axis_span);
  Vector u(2);
  u << 1.0, 0.0;
  const MonotoneOp a = MonotoneOp::affine(Matrix::Identity(2, 2), -u);
  const MonotoneOp b = MonotoneOp::normal_cone(v_line);
  const SplitProblem problem(a, b);

  GaussianSampler rng(kScenarioSeed);
  double primal_dev = 0.0, dual_dev = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Vector x = rng.vector(2, 10.0);
    primal_dev = std::max(primal_dev, (t_fb(problem, x) - u).norm());
    // the inverse of x - u is x + u; the dual backward resolvent comes from
    // dual_resolvent, so the dual forward-backward map is evaluated honestly
    const Vector a_inv_x = x + u;
    dual_dev = std::max(dual_dev, dual_resolvent(b, x - a_inv_x).norm());
  }
  check(report, "primal-map-constant-u", ExpectedKind::analytic, primal_dev, 1e-12,
        "u = " + vec_str(u));
  check(report, "dual-map-constant-zero", ExpectedKind::analytic, dual_dev, 1e-12);
  check_flag(report, "maps-differ", ExpectedKind::elementary, u.norm() >= 0.5,
             "the two constants are distance " + format_double(u.norm()) + " apart");
  return report;
}

inline ScenarioReport scenario_map_feasible() {
  ScenarioReport report;
  report.id = "map-feasible";
  report.description =
      "Alternating projections between a disk and a line that cuts it: the "
      "forward-backward map with the squared-distance gradient reproduces the "
      "composition of projections exactly, and the iteration lands in the intersection.";
  report.anchor = "alternating projections, intersecting sets";

  const ConvexSet disk = ConvexSet::ball(Vector::Zero(2), 2.0);
  Matrix axis_span(2, 1);
  axis_span << 1.0, 0.0;
  Vector line_offset(2);
  line_offset << 0.0, 1.0;
  const ConvexSet line = ConvexSet::affine_subspace(line_offset, axis_span);
  const SplitProblem problem(MonotoneOp::grad_half_dist_sq(disk), MonotoneOp::normal_cone(line));
  const FixedPointMap composite = FixedPointMap::alternating_projections(disk, line);

  GaussianSampler rng(kScenarioSeed);
  double composite_dev = 0.0;
  for (int k = 0; k < 50; ++k) {
    const Vector x = rng.vector(2, 5.0);
    composite_dev = std::max(composite_dev, (t_fb(problem, x) - apply_map(composite, x)).norm());
  }
  check(report, "fb-equals-projection-composite", ExpectedKind::analytic, composite_dev, 1e-12);

  Vector x0(2);
  x0 << 4.0, 5.0;
  const Solution sol = solve_primal(problem, x0);
  check(report, "limit-in-intersection", ExpectedKind::elementary,
        std::max(distance(disk, sol.z), distance(line, sol.z)), 1e-6,
        "limit " + vec_str(sol.z));
  report.traces.emplace_back("orbit", sol.trace);
  return report;
}

inline ScenarioReport scenario_map_affine_shift() {
  ScenarioReport report;
  report.id = "map-affine-shift";
  report.description =
      "Alternating projections between two lines translated by a common w reduce to the "
      "untranslated iteration conjugated by the translation, checked for 50 steps.";
  report.anchor = "alternating projections under translation";

  Matrix d1(2, 1), d2(2, 1);
  d1 << 1.0, 0.0;
  const double theta = M_PI / 6.0;
  d2 << std::cos(theta), std::sin(theta);
  const ConvexSet u0 = ConvexSet::affine_subspace(Vector::Zero(2), d1);
  const ConvexSet v0 = ConvexSet::affine_subspace(Vector::Zero(2), d2);

  GaussianSampler rng(kScenarioSeed);
  const Vector w = rng.vector(2, 3.0);
  const Vector x = rng.vector(2, 5.0);
  const ConvexSet uw = ConvexSet::translate(u0, w);
  const ConvexSet vw = ConvexSet::translate(v0, w);
  const FixedPointMap shifted_map = FixedPointMap::alternating_projections(uw, vw);
  const FixedPointMap base_map = FixedPointMap::alternating_projections(u0, v0);

  double identity_dev = 0.0;
  Vector ys = x;
  Vector yb = x - w;
  for (int n = 1; n <= 50; ++n) {
    ys = apply_map(shifted_map, ys);
    yb = apply_map(base_map, yb);
    identity_dev = std::max(identity_dev, (ys - (yb + w)).norm());
  }
  check(report, "translation-conjugation-identity", ExpectedKind::analytic, identity_dev, 1e-10,
        "max over 50 iterations, w = " + vec_str(w));

  const SplitProblem problem(MonotoneOp::grad_half_dist_sq(uw), MonotoneOp::normal_cone(vw));
  double composite_dev = 0.0;
  Vector probe = x;
  for (int n = 0; n < 10; ++n) {
    composite_dev =
        std::max(composite_dev, (t_fb(problem, probe) - apply_map(shifted_map, probe)).norm());
    probe = apply_map(shifted_map, probe);
  }
  check(report, "fb-equals-projection-composite", ExpectedKind::analytic, composite_dev, 1e-12);
  return report;
}

inline ScenarioReport scenario_affine_normal_solve() {
  ScenarioReport report;
  report.id = "affine-normal-solve";
  report.description =
      "A rotation-contraction forward term against the normal cone of an affine line: the "
      "displacement formula, the closed-form estimate, the least-squares solution oracle, "
      "and the fitted linear rate all line up.";
  report.anchor = "affine operator with affine-line constraint";

  const double c = 0.8;
  const double theta = M_PI / 6.0;
  Matrix l(2, 2);
  l << c * std::cos(theta), -c * std::sin(theta), c * std::sin(theta), c * std::cos(theta);
  Vector b(2);
  b << 0.7, -0.3;
  Vector o(2);
  o << 1.0, 2.0;
  Matrix d(2, 1);
  d << 2.0 / std::sqrt(5.0), 1.0 / std::sqrt(5.0);
  const ConvexSet u_line = ConvexSet::affine_subspace(o, d);
  const SplitProblem problem(MonotoneOp::affine(l, b), MonotoneOp::normal_cone(u_line));
  const FixedPointMap map = FixedPointMap::forward_backward(problem);
  Vector x0(2);
  x0 << 3.0, -1.0;

  // oracle: project b onto ker(L) meet the direction space of the line
  const Matrix kernel = oracle_nullspace(l);
  const Matrix meet = oracle_subspace_intersection(kernel, d);
  const Vector v_oracle = meet * (meet.transpose() * b);

  const AffineMap af = affine_form(map);
  const Vector v_cf = v_affine_closed_form(af);
  const DisplacementEstimate est = estimate_v_iterative(map, x0);
  check(report, "displacement-formula", ExpectedKind::oracle, (est.v - v_oracle).norm(), 1e-6,
        "kernel-meet-direction projection gives " + vec_str(v_oracle));
  check(report, "closed-form-matches-formula", ExpectedKind::oracle, (v_cf - v_oracle).norm(),
        1e-10, "closed form gives " + vec_str(v_cf));

  NormalSolveOptions ns_opts;
  ns_opts.max_iter = kScenarioBudget;
  const NormalSolveReport ns = normal_solve(map, x0, ns_opts);
  const Vector z_oracle = oracle_affine_inclusion_solution(l, b, o, d, v_cf);
  check_flag(report, "normal-solution-found", ExpectedKind::elementary,
             ns.status == NormalSolveStatus::normal_solution_found,
             std::string("status ") + to_string(ns.status));
  check(report, "normal-point-vs-ls-oracle", ExpectedKind::oracle, (ns.z - z_oracle).norm(),
        1e-6, "oracle point " + vec_str(z_oracle));

  IterateOptions io;
  io.max_iter = 10000;
  io.tol = 0.0;
  const IterationTrace orbit = iterate(FixedPointMap::shifted(map, v_cf), x0, io);
  std::vector<double> errors;
  for (const auto& xk : orbit.iterates) {
    const double e = (xk - z_oracle).norm();
    if (e > 1e-12) errors.push_back(e);  // cut the numeric floor, fit the geometric regime
  }
  const RateFit fit = rate_fit(errors);
  check_flag(report, "linear-rate-fit", ExpectedKind::analytic,
             fit.r_squared >= 0.99 && fit.mu < 1.0 - 1e-4,
             "mu " + format_double(fit.mu) + ", r^2 " + format_double(fit.r_squared) + " on " +
                 std::to_string(fit.points_used) + " points");
  const double mu_oracle = oracle_subunit_spectral_radius(af.linear().matrix());
  check(report, "rate-matches-spectrum", ExpectedKind::oracle, std::abs(fit.mu - mu_oracle),
        1e-3, "spectral oracle " + format_double(mu_oracle));
  check(report, "shifted-limit-matches-oracle", ExpectedKind::oracle,
        (orbit.final_point() - z_oracle).norm(), 1e-8);
  report.traces.emplace_back("shifted-orbit", orbit);
  return report;
}

inline ScenarioReport scenario_parallel_constants() {
  ScenarioReport report;
  report.id = "parallel-constants";
  report.description =
      "Three constant operators with nonzero sum, run through the product-space lifting: "
      "the lifted displacement is the diagonal embedding of the mean, matching the "
      "closed-form computation on the lifted affine map.";
  report.anchor = "product-space constants";

  Vector a1(2), a2(2), a3(2);
  a1 << 1.0, 0.0;
  a2 << 0.5, 1.0;
  a3 << -0.5, 0.0;
  std::vector<MonotoneOp> ops{MonotoneOp::constant(a1), MonotoneOp::constant(a2),
                              MonotoneOp::constant(a3)};
  const ProductProblem pp(ops, {1.0, 1.0, 1.0});
  const SplitProblem lifted = build_lifted_problem(pp);
  const FixedPointMap lifted_map = FixedPointMap::forward_backward(lifted);

  const Vector x0 = lift(Vector::Zero(2), pp.count());
  const DisplacementEstimate est = estimate_v_iterative(lifted_map, x0);
  const Vector v_cf = v_affine_closed_form(affine_form(lifted_map));
  const Vector mean = (a1 + a2 + a3) / 3.0;
  const Vector v_expected = lift(pp.alpha() * mean, pp.count());
  check(report, "lifted-displacement-vs-closed-form", ExpectedKind::oracle,
        (est.v - v_cf).norm(), 1e-6);
  check(report, "lifted-displacement-analytic", ExpectedKind::analytic,
        (est.v - v_expected).norm(), 1e-6, "diagonal embedding of the block mean " +
                                               vec_str(mean));
  check_flag(report, "no-common-zero-lower-bound", ExpectedKind::elementary, est.v.norm() >= 0.1,
             "norm " + format_double(est.v.norm()));

  NormalSolveOptions ns_opts;
  ns_opts.max_iter = kScenarioBudget;
  const ParallelSolveReport rep = parallel_fb_solve(pp, Vector::Zero(2), ns_opts);
  check(report, "averaged-displacement", ExpectedKind::analytic,
        (rep.v_average - pp.alpha() * mean).norm(), 1e-6);
  check_flag(report, "normal-solution-found", ExpectedKind::elementary,
             rep.lifted.status == NormalSolveStatus::normal_solution_found,
             std::string("status ") + to_string(rep.lifted.status));
  // membership in the displaced solution set: blocks of z - v agree, and the
  // blockwise operator values minus the displacement blocks sum to zero
  const std::size_t m = pp.count();
  const Vector z_shift = rep.lifted.z - rep.lifted.v;
  double block_dev = 0.0;
  const Vector z_mean = average(z_shift, m);
  Vector a_sum = Vector::Zero(2);
  for (std::size_t i = 0; i < m; ++i) {
    block_dev = std::max(
        block_dev, (z_shift.segment(static_cast<Index>(i) * 2, 2) - z_mean).norm());
    a_sum += pp.alpha() * apply(pp.ops[i], rep.lifted.z.segment(static_cast<Index>(i) * 2, 2)) -
             rep.lifted.v.segment(static_cast<Index>(i) * 2, 2);
  }
  check(report, "solution-diagonal-membership", ExpectedKind::analytic, block_dev, 1e-6);
  check(report, "operator-values-balance", ExpectedKind::analytic, a_sum.norm(), 1e-6);
  return report;
}

inline ScenarioReport scenario_parallel_feasible() {
  ScenarioReport report;
  report.id = "parallel-feasible";
  report.description =
      "Two squared-distance gradients toward overlapping disks, lifted to the product "
      "space: a common zero exists, so the displacement vanishes and the average lands in "
      "the intersection.";
  report.anchor = "product-space common zero";

  const ConvexSet disk1 = ConvexSet::ball(Vector::Zero(2), 1.5);
  Vector c2(2);
  c2 << 2.0, 0.0;
  const ConvexSet disk2 = ConvexSet::ball(c2, 1.5);
  std::vector<MonotoneOp> ops{MonotoneOp::grad_half_dist_sq(disk1),
                              MonotoneOp::grad_half_dist_sq(disk2)};
  const ProductProblem pp(ops, {1.0, 1.0});

  Vector z0(2);
  z0 << 5.0, 3.0;
  NormalSolveOptions ns_opts;
  ns_opts.max_iter = kScenarioBudget;
  const ParallelSolveReport rep = parallel_fb_solve(pp, z0, ns_opts);
  check(report, "displacement-vanishes", ExpectedKind::analytic, rep.lifted.v.norm(), 1e-6);
  check_flag(report, "normal-solution-found", ExpectedKind::elementary,
             rep.lifted.status == NormalSolveStatus::normal_solution_found,
             std::string("status ") + to_string(rep.lifted.status));
  check(report, "operator-sum-residual", ExpectedKind::elementary, rep.sum_residual, 1e-6);
  check(report, "average-in-both-disks", ExpectedKind::elementary,
        std::max(distance(disk1, rep.z), distance(disk2, rep.z)), 1e-6,
        "average " + vec_str(rep.z));
  report.traces.emplace_back("lifted-orbit", rep.lifted.trace);
  return report;
}

inline ScenarioReport scenario_accel_vs_shifted() {
  ScenarioReport report;
  report.id = "accel-vs-shifted";
  report.description =
      "Skew lines in three dimensions: the accelerated sequence and the shifted orbit obey "
      "their exact defect identity, and both converge to the projection onto the fixed "
      "points of the displaced map, here the foot of the common perpendicular.";
  report.anchor = "accelerated vs shifted iteration";

  Matrix d1(3, 1), d2(3, 1);
  d1 << 1.0, 0.0, 0.0;
  d2 << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 0.0;
  Vector v_offset(3);
  v_offset << 0.0, 0.0, 1.0;
  const ConvexSet u_line = ConvexSet::affine_subspace(Vector::Zero(3), d1);
  const ConvexSet v_line = ConvexSet::affine_subspace(v_offset, d2);
  const FixedPointMap map = FixedPointMap::alternating_projections(u_line, v_line);
  Vector x0(3);
  x0 << 2.0, 1.0, -1.0;

  const AffineMap af = affine_form(map);
  const Vector v_cf = v_affine_closed_form(af);
  check(report, "gap-attained-displacement-zero", ExpectedKind::analytic, v_cf.norm(), 1e-10,
        "the lines realize their distance, so the map has fixed points");

  const AcceleratedSequence acc = accelerated_sequence(map, x0, 20);
  const FixedPointMap shifted = FixedPointMap::shifted(map, v_cf);
  double identity_dev = 0.0;
  Vector y = x0;
  for (long n = 1; n <= 20; ++n) {
    y = apply_map(shifted, y);
    const std::size_t idx = static_cast<std::size_t>(n - 1);
    const double lhs = (acc.points[idx] - y).norm();
    const double rhs = static_cast<double>(n) * (acc.differences[idx] - v_cf).norm();
    identity_dev = std::max(identity_dev, std::abs(lhs - rhs) / (1.0 + rhs));
  }
  check(report, "defect-identity", ExpectedKind::analytic, identity_dev, 1e-10,
        "the accelerated point differs from the shifted orbit by exactly n times the "
        "displacement defect");

  const Vector z_oracle =
      oracle_fixed_point_projection(af.linear().matrix(), af.offset() + v_cf, x0);
  double prev = std::numeric_limits<double>::infinity();
  bool monotone = true;
  double err20 = 0.0;
  for (long n : {3L, 5L, 10L, 20L}) {
    const double e = (acc.points[static_cast<std::size_t>(n - 1)] - z_oracle).norm();
    if (e > prev + 1e-15) monotone = false;
    prev = e;
    if (n == 20) err20 = e;
  }
  check_flag(report, "monotone-approach", ExpectedKind::elementary, monotone);
  check(report, "accelerated-limit-vs-oracle", ExpectedKind::oracle, err20, 1e-4,
        "projection oracle " + vec_str(z_oracle));
  return report;
}

inline ScenarioReport scenario_vfb_vdr_agree() {
  ScenarioReport report;
  report.id = "vfb-vdr-agree";
  report.description =
      "The forward-backward and Douglas-Rachford maps of one problem share their minimal "
      "displacement: checked on the constant pair, the translated orthant, and two "
      "disjoint disks.";
  report.anchor = "displacement agreement of the two splittings";

  EstimateOptions est_opts;
  est_opts.max_iter = kScenarioBudget;

  Vector a_star(2), b_star(2);
  a_star << 1.0, 0.0;
  b_star << 0.0, 1.0;
  const SplitProblem constants(MonotoneOp::constant(a_star), MonotoneOp::constant(b_star));
  GaussianSampler rng(kScenarioSeed);
  const Vector x0 = rng.vector(2, 3.0);
  const DisplacementComparison cmp1 = v_fb_vs_v_dr(constants, x0, est_opts);
  check(report, "gap-constants", ExpectedKind::analytic, cmp1.gap, 1e-4,
        "fb " + vec_str(cmp1.fb.v) + " dr " + vec_str(cmp1.dr.v));

  Vector p(2);
  p << 1.0, 1.0;
  const SplitProblem orthant_problem(MonotoneOp::constant(-p),
                                     MonotoneOp::normal_cone(ConvexSet::nonnegative_orthant(2)));
  const DisplacementComparison cmp2 = v_fb_vs_v_dr(orthant_problem, x0, est_opts);
  check(report, "gap-orthant", ExpectedKind::analytic, cmp2.gap, 1e-4,
        "fb " + vec_str(cmp2.fb.v) + " dr " + vec_str(cmp2.dr.v));

  const ConvexSet ball1 = ConvexSet::ball(Vector::Zero(2), 1.0);
  Vector c2(2);
  c2 << 3.0, 0.0;
  const ConvexSet ball2 = ConvexSet::ball(c2, 1.0);
  const SplitProblem balls(MonotoneOp::grad_half_dist_sq(ball1), MonotoneOp::normal_cone(ball2));
  const DisplacementComparison cmp3 = v_fb_vs_v_dr(balls, x0, est_opts);
  check(report, "gap-balls", ExpectedKind::analytic, cmp3.gap, 1e-4,
        "fb " + vec_str(cmp3.fb.v) + " dr " + vec_str(cmp3.dr.v));

  // the disks are disjoint but realize their distance at a nearest pair, so
  // the displacement is zero; the oracle computes that pair directly
  const auto [p_near, q_near] = oracle_ball_nearest_points(Vector::Zero(2), 1.0, c2, 1.0);
  check(report, "balls-displacement-zero", ExpectedKind::oracle, cmp3.fb.v.norm(), 1e-4,
        "nearest pair " + vec_str(p_near) + " / " + vec_str(q_near) +
            " attains the gap, hence fixed points exist");
  return report;
}

inline ScenarioReport scenario_fb_dr_displacement_range() {
  ScenarioReport report;
  report.id = "fb-dr-displacement-range";
  report.description =
      "A step vector produced by one forward-backward evaluation lies in the shared "
      "displacement range of both splitting maps, so both shifted iterations converge.";
  report.anchor = "shared range of displacement operators";

  const ConvexSet ball1 = ConvexSet::ball(Vector::Zero(2), 1.0);
  Vector c2(2);
  c2 << 3.0, 0.0;
  const ConvexSet ball2 = ConvexSet::ball(c2, 1.0);
  const SplitProblem problem(MonotoneOp::grad_half_dist_sq(ball1),
                             MonotoneOp::normal_cone(ball2));
  Vector probe(2);
  probe << 0.0, 4.0;
  const Vector w = probe - t_fb(problem, probe);

  IterateOptions io;
  io.max_iter = kScenarioBudget;
  const FixedPointMap fb = FixedPointMap::forward_backward(problem);
  const FixedPointMap dr = FixedPointMap::douglas_rachford(problem);
  const IterationTrace fb_trace = iterate(FixedPointMap::shifted(fb, w), probe, io);
  const IterationTrace dr_trace = iterate(FixedPointMap::shifted(dr, w), probe, io);

  check_flag(report, "shifted-fb-converges", ExpectedKind::analytic,
             fb_trace.stop_reason == StopReason::tolerance,
             "after " + std::to_string(fb_trace.total_iterations) + " iterations");
  check_flag(report, "shifted-dr-converges", ExpectedKind::analytic,
             dr_trace.stop_reason == StopReason::tolerance,
             "after " + std::to_string(dr_trace.total_iterations) + " iterations");
  check(report, "shifted-fb-residual", ExpectedKind::elementary,
        (fb_trace.final_point() - w - t_fb(problem, fb_trace.final_point())).norm(), 1e-6);
  check(report, "shifted-dr-residual", ExpectedKind::elementary,
        (dr_trace.final_point() - w - t_dr(problem, dr_trace.final_point())).norm(), 1e-6);
  report.traces.emplace_back("shifted-fb-orbit", fb_trace);
  report.traces.emplace_back("shifted-dr-orbit", dr_trace);
  return report;
}

struct ScenarioEntry {
  const char* id;
  const char* description;
  const char* anchor;
  ScenarioReport (*run)();
};

inline const std::vector<ScenarioEntry>& scenario_registry() {
  static const std::vector<ScenarioEntry> entries{
      {"orthant-shift",
       "Translated orthant projection with displacement equal to the negated shift",
       "translated orthant projection", &scenario_orthant_shift},
      {"constants",
       "Constant operator pair whose displaced problem is solved by every point",
       "constant-operator pair", &scenario_constants},
      {"hyperbola-infeasible",
       "Unattained gap between a hyperbola epigraph and the axis; no displaced solution",
       "hyperbola epigraph vs axis, unattained gap", &scenario_hyperbola_infeasible},
      {"a-identity-ranges",
       "Identity forward operator: constant forward-backward map vs spreading "
       "Douglas-Rachford map",
       "identity forward operator ranges", &scenario_a_identity_ranges},
      {"not-self-dual",
       "The forward-backward construction applied to the dual pair yields a different map",
       "dual-pair forward-backward asymmetry", &scenario_not_self_dual},
      {"map-feasible",
       "Alternating projections between intersecting sets reach the intersection",
       "alternating projections, intersecting sets", &scenario_map_feasible},
      {"map-affine-shift",
       "Alternating projections commute with a common translation of both sets",
       "alternating projections under translation", &scenario_map_affine_shift},
      {"affine-normal-solve",
       "Affine forward term with an affine-line constraint: formulas, oracle, and rate",
       "affine operator with affine-line constraint", &scenario_affine_normal_solve},
      {"parallel-constants",
       "Product-space lifting of constant operators with nonzero mean",
       "product-space constants", &scenario_parallel_constants},
      {"parallel-feasible",
       "Product-space lifting with a common zero: displacement vanishes",
       "product-space common zero", &scenario_parallel_feasible},
      {"accel-vs-shifted",
       "Accelerated sequence against the shifted orbit on skew lines",
       "accelerated vs shifted iteration", &scenario_accel_vs_shifted},
      {"vfb-vdr-agree",
       "Minimal displacement agrees between the two splitting maps on three problems",
       "displacement agreement of the two splittings", &scenario_vfb_vdr_agree},
      {"fb-dr-displacement-range",
       "A realized forward-backward step shifts both splitting maps into convergence",
       "shared range of displacement operators", &scenario_fb_dr_displacement_range},
  };
  return entries;
}

}  // namespace detail

inline std::vector<ScenarioInfo> list_scenarios() {
  std::vector<ScenarioInfo> out;
  for (const auto& e : detail::scenario_registry()) {
    out.push_back(ScenarioInfo{e.id, e.description, e.anchor});
  }
  return out;
}

inline ScenarioReport run_scenario(const std::string& id) {
  for (const auto& e : detail::scenario_registry()) {
    if (id == e.id) return e.run();
  }
  std::string known;
  for (const auto& e : detail::scenario_registry()) {
    if (!known.empty()) known += ", ";
    known += e.id;
  }
  throw Error("unknown scenario '" + id + "'; available: " + known);
}

inline std::vector<ScenarioReport> run_all_scenarios() {
  std::vector<ScenarioReport> out;
  for (const auto& e : detail::scenario_registry()) out.push_back(e.run());
  return out;
}

inline Json to_json(const AssertionResult& a) {
  return Json{{"name", a.name},          {"kind", to_string(a.kind)},
              {"deviation", a.deviation}, {"tolerance", a.tolerance},
              {"pass", a.pass},          {"detail", a.detail}};
}

inline Json to_json(const ScenarioReport& r) {
  Json assertions = Json::array();
  for (const auto& a : r.assertions) assertions.push_back(to_json(a));
  return Json{{"id", r.id},
              {"description", r.description},
              {"anchor", r.anchor},
              {"all_passed", r.all_passed()},
              {"assertions", assertions}};
}

inline std::string format_report_text(const ScenarioReport& r) {
  std::ostringstream out;
  out << "scenario " << r.id << ": " << (r.all_passed() ? "PASS" : "FAIL") << "\n";
  for (const auto& a : r.assertions) {
    char line[256];
    std::snprintf(line, sizeof(line), "  [%s] %-40s deviation %-12.5g tol %-10.3g (%s)",
                  a.pass ? "ok" : "FAIL", a.name.c_str(), a.deviation, a.tolerance,
                  to_string(a.kind));
    out << line << "\n";
    if (!a.pass && !a.detail.empty()) out << "        " << a.detail << "\n";
  }
  return out.str();
}

}  // namespace opsplit
