// Acceptance gate: eleven end-to-end criteria with pinned tolerances.
// Each criterion prints exactly one PASS/FAIL line; the exit code is the
// number of failed criteria. Expected values are either stated constants of
// the worked examples or are computed at runtime by independent oracles
// (dense least squares, eigendecomposition, finite differences) — never
// hard-coded from a previous run of the code under test.

#include "opsplit/product_space.hpp"
#include "opsplit/scenarios.hpp"

#include "oracle.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

using namespace opsplit;

namespace {

int failures = 0;

void report(int number, const char* name, bool pass, const std::string& detail) {
  std::printf("%s  criterion %02d  %-28s %s\n", pass ? "PASS" : "FAIL", number, name,
              detail.c_str());
  if (!pass) ++failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

// ---------------------------------------------------------------------
// 1. Translated orthant projection: displacement, summability, limit.
void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  Vector p(2), x0(2), expected_v(2);
  p << 1.0, 1.0;
  x0 << 5.0, -3.0;
  expected_v << -1.0, -1.0;
  const SplitProblem projector(MonotoneOp::constant(Vector::Zero(2)),
                               MonotoneOp::normal_cone(ConvexSet::nonnegative_orthant(2)));
  const FixedPointMap map =
      FixedPointMap::shifted(FixedPointMap::forward_backward(projector), p);

  EstimateOptions eopts;
  eopts.max_iter = 10000;
  const DisplacementEstimate est = estimate_v_iterative(map, x0, eopts);
  const double v_dev = (est.v - expected_v).norm();

  IterateOptions iopts;
  iopts.max_iter = 10000;
  iopts.tol = 0.0;
  iopts.trace_cap = 20001;  // keep every residual: the sums must be untrimmed
  iopts.displacement = est.v;
  const IterationTrace orbit = iterate(map, x0, iopts);
  const SummabilityReport sums = summability(orbit.displacement_residuals);

  Vector combined = x0;
  Vector prev_combined = x0;
  Vector tn = x0;
  for (int n = 1; n <= 200; ++n) {
    tn = apply_map(map, tn);
    prev_combined = combined;
    combined = tn + static_cast<double>(n) * est.v;
  }
  const double settle = (combined - prev_combined).norm();
  const double member = distance(ConvexSet::nonnegative_orthant(2), combined);
  const double secs = seconds_since(t0);

  const bool pass = v_dev <= 1e-6 && est.iterations <= 10000 &&
                    sums.tail_increase_squared <= 1e-8 && sums.tail_increase_linear <= 1e-8 &&
                    settle <= 1e-10 && member <= 1e-6 && secs < 1.0;
  report(1, "orthant-displacement", pass,
         "v dev " + fmt(v_dev) + ", tail increase " + fmt(sums.tail_increase_linear) +
             ", limit-to-orthant " + fmt(member) + ", " + fmt(secs) + "s (tol 1e-6/1e-8/1s)");
}

// ---------------------------------------------------------------------
// 2. Constant operators: exact displacement, universal displaced solutions,
//    accelerated sequence frozen at its start.
void criterion_2() {
  Vector a(2), b(2), expected_v(2);
  a << 1.0, 0.0;
  b << 0.0, 1.0;
  expected_v << 1.0, 1.0;
  const SplitProblem problem(MonotoneOp::constant(a), MonotoneOp::constant(b));
  const FixedPointMap map = FixedPointMap::forward_backward(problem);
  GaussianSampler rng(42);
  const Vector x0 = rng.vector(2, 3.0);

  const DisplacementEstimate est = estimate_v_iterative(map, x0);
  const double v_dev = (est.v - expected_v).norm();

  double worst_residual = 0.0;
  for (int k = 0; k < 5; ++k) {
    worst_residual = std::max(worst_residual,
                              perturbed_residual(problem, est.v, rng.vector(2, 10.0)));
  }

  const AcceleratedSequence acc = accelerated_sequence(map, x0, 20);
  double worst_acc = 0.0;
  for (long n : {1L, 5L, 20L}) {
    worst_acc = std::max(worst_acc, (acc.points[static_cast<std::size_t>(n - 1)] - x0).norm());
  }

  const bool pass = v_dev <= 1e-12 && worst_residual <= 1e-12 && worst_acc <= 1e-12;
  report(2, "constants-exact", pass,
         "v dev " + fmt(v_dev) + ", residual " + fmt(worst_residual) + ", accel dev " +
             fmt(worst_acc) + " (tol 1e-12)");
}

// ---------------------------------------------------------------------
// 3. Hyperbola against the axis: the displacement is right, but the escape
//    to infinity is a fourth-root crawl, so no finite budget can push the
//    iterate norm past 1e8. The second half fails honestly by design: the
//    iterate norm after 10^5 steps is near 25, and reaching 1e8 would take
//    about 2.5e31 applications.
void criterion_3() {
  const auto t0 = std::chrono::steady_clock::now();
  Matrix span(2, 1);
  span << 1.0, 0.0;
  const ConvexSet axis = ConvexSet::affine_subspace(Vector::Zero(2), span);
  Vector pull(2), x0(2), expected_v(2);
  pull << 1.0, 0.0;
  x0 << 2.0, 2.0;
  expected_v << -1.0, 0.0;
  const SplitProblem problem(
      MonotoneOp::grad_half_dist_sq(ConvexSet::hyperbola_epigraph()),
      MonotoneOp::outer_shift(pull, MonotoneOp::normal_cone(axis)));
  const FixedPointMap map = FixedPointMap::forward_backward(problem);

  EstimateOptions eopts;
  eopts.max_iter = 100000;
  const DisplacementEstimate est = estimate_v_iterative(map, x0, eopts);
  const double v_dev = (est.v - expected_v).norm();

  NormalSolveOptions nopts;
  nopts.max_iter = 100000;
  const NormalSolveReport ns = normal_solve(map, x0, nopts);
  const double final_norm = ns.trace.final_point().norm();
  const double secs = seconds_since(t0);

  const bool pass = v_dev <= 1e-3 && ns.status == NormalSolveStatus::divergent &&
                    final_norm > 1e8 && secs < 5.0;
  report(3, "hyperbola-divergence", pass,
         "v dev " + fmt(v_dev) + ", status " + to_string(ns.status) + ", final norm " +
             fmt(final_norm) + ", " + fmt(secs) + "s (needs divergent, norm > 1e8)");
  if (!pass) {
    std::printf(
        "      note: the displaced orbit grows like (4n)^(1/4); after the 1e5-step budget\n"
        "      its norm is ~25, and crossing 1e8 would take ~2.5e31 applications, so the\n"
        "      honest status at any practical budget is 'inconclusive', never 'divergent'.\n"
        "      The displacement estimate itself converges fine (deviation %.3g).\n",
        v_dev);
  }
}

// ---------------------------------------------------------------------
// 4. The two splitting maps agree on the minimal displacement.
void criterion_4() {
  EstimateOptions opts;
  opts.max_iter = 100000;
  Vector x0(2);
  x0 << 0.7, -0.3;

  Vector a(2), b(2);
  a << 1.0, 0.0;
  b << 0.0, 1.0;
  const SplitProblem constants(MonotoneOp::constant(a), MonotoneOp::constant(b));
  const double gap1 = v_fb_vs_v_dr(constants, x0, opts).gap;

  Vector mp(2);
  mp << -1.0, -1.0;
  const SplitProblem orthant(MonotoneOp::constant(mp),
                             MonotoneOp::normal_cone(ConvexSet::nonnegative_orthant(2)));
  const double gap2 = v_fb_vs_v_dr(orthant, x0, opts).gap;

  Vector c2(2);
  c2 << 3.0, 0.0;
  const SplitProblem balls(
      MonotoneOp::grad_half_dist_sq(ConvexSet::ball(Vector::Zero(2), 1.0)),
      MonotoneOp::normal_cone(ConvexSet::ball(c2, 1.0)));
  const double gap3 = v_fb_vs_v_dr(balls, x0, opts).gap;

  const bool pass = gap1 <= 1e-4 && gap2 <= 1e-4 && gap3 <= 1e-4;
  report(4, "fb-dr-displacement-match", pass,
         "gaps " + fmt(gap1) + " / " + fmt(gap2) + " / " + fmt(gap3) + " (tol 1e-4)");
}

// ---------------------------------------------------------------------
// 5. The construction applied to the dual pair gives a genuinely different
//    map: constant at u versus constant at zero.
void criterion_5() {
  Matrix span(2, 1);
  span << 1.0, 0.0;
  const ConvexSet v_line = ConvexSet::affine_subspace(Vector::Zero(2), span);
  Vector u(2);
  u << 1.0, 0.0;
  const MonotoneOp b_op = MonotoneOp::normal_cone(v_line);
  const SplitProblem problem(MonotoneOp::affine(Matrix::Identity(2, 2), -u), b_op);

  GaussianSampler rng(42);
  double primal_dev = 0.0, dual_dev = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Vector x = rng.vector(2, 10.0);
    primal_dev = std::max(primal_dev, (t_fb(problem, x) - u).norm());
    const Vector a_inv_x = x + u;  // inverse of x - u
    dual_dev = std::max(dual_dev, dual_resolvent(b_op, x - a_inv_x).norm());
  }
  const bool pass = primal_dev <= 1e-12 && dual_dev <= 1e-12;
  report(5, "dual-pair-asymmetry", pass,
         "primal dev " + fmt(primal_dev) + ", dual dev " + fmt(dual_dev) + " (tol 1e-12)");
}

// ---------------------------------------------------------------------
// 6. Affine instance: the shifted orbit at n = 10^4 matches the
//    least-squares oracle, and the error decay fits a genuine linear rate.
void criterion_6() {
  const double c = 0.8;
  const double theta = M_PI / 6.0;
  Matrix l(2, 2);
  l << c * std::cos(theta), -c * std::sin(theta), c * std::sin(theta), c * std::cos(theta);
  Vector b(2), o(2), x0(2);
  b << 0.7, -0.3;
  o << 1.0, 2.0;
  x0 << 3.0, -1.0;
  Matrix d(2, 1);
  d << 2.0 / std::sqrt(5.0), 1.0 / std::sqrt(5.0);
  const SplitProblem problem(MonotoneOp::affine(l, b),
                             MonotoneOp::normal_cone(ConvexSet::affine_subspace(o, d)));
  const FixedPointMap map = FixedPointMap::forward_backward(problem);
  const Vector v = v_affine_closed_form(affine_form(map));

  // independent oracle: reduced least-squares solution of the inclusion
  const Matrix reduced = d.transpose() * l * d;
  const Vector rhs = -d.transpose() * (l * (v + o) + b - v);
  const Vector z_oracle = v + o + d * reduced.fullPivLu().solve(rhs);

  const FixedPointMap shifted = FixedPointMap::shifted(map, v);
  Vector x = x0;
  std::vector<double> errors;
  for (long n = 0; n < 10000; ++n) {
    const double e = (x - z_oracle).norm();
    if (e > 1e-12) errors.push_back(e);  // fit the geometric regime, not the fp floor
    x = apply_map(shifted, x);
  }
  const double limit_dev = (x - z_oracle).norm();
  const RateFit fit = rate_fit(errors);

  const bool pass = limit_dev <= 1e-8 && fit.r_squared >= 0.99 && fit.mu < 1.0 - 1e-4;
  report(6, "affine-normal-solve", pass,
         "orbit-vs-oracle " + fmt(limit_dev) + ", mu " + fmt(fit.mu) + ", r^2 " +
             fmt(fit.r_squared) + " (tol 1e-8, r^2 >= 0.99)");
}

// ---------------------------------------------------------------------
// 7. Alternating projections commute with a common translation.
void criterion_7() {
  Matrix d1(2, 1), d2(2, 1);
  d1 << 1.0, 0.0;
  const double theta = M_PI / 6.0;
  d2 << std::cos(theta), std::sin(theta);
  const ConvexSet u0 = ConvexSet::affine_subspace(Vector::Zero(2), d1);
  const ConvexSet v0 = ConvexSet::affine_subspace(Vector::Zero(2), d2);
  GaussianSampler rng(42);
  const Vector w = rng.vector(2, 3.0);
  const Vector x = rng.vector(2, 5.0);
  const FixedPointMap shifted_map = FixedPointMap::alternating_projections(
      ConvexSet::translate(u0, w), ConvexSet::translate(v0, w));
  const FixedPointMap base_map = FixedPointMap::alternating_projections(u0, v0);

  double dev = 0.0;
  Vector ys = x, yb = x - w;
  for (int n = 1; n <= 50; ++n) {
    ys = apply_map(shifted_map, ys);
    yb = apply_map(base_map, yb);
    dev = std::max(dev, (ys - (yb + w)).norm());
  }
  report(7, "translation-identity", dev <= 1e-10,
         "max deviation over 50 iterations " + fmt(dev) + " (tol 1e-10)");
}

// ---------------------------------------------------------------------
// 8. Accelerated sequence on skew lines: monotone approach to the projected
//    fixed point, small error at n = 20.
void criterion_8() {
  const auto t0 = std::chrono::steady_clock::now();
  Matrix d1(3, 1), d2(3, 1);
  d1 << 1.0, 0.0, 0.0;
  d2 << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 0.0;
  Vector off(3), x0(3);
  off << 0.0, 0.0, 1.0;
  x0 << 2.0, 1.0, -1.0;
  const FixedPointMap map = FixedPointMap::alternating_projections(
      ConvexSet::affine_subspace(Vector::Zero(3), d1), ConvexSet::affine_subspace(off, d2));

  const AffineMap af = affine_form(map);
  const Vector v = v_affine_closed_form(af);
  // oracle: orthogonal projection of the start onto the fixed points of the
  // displaced map, via pseudoinverse least squares
  const Matrix w = Matrix::Identity(3, 3) - af.linear().matrix();
  const Vector z_oracle =
      x0 - w.completeOrthogonalDecomposition().solve(w * x0 - (af.offset() + v));

  const AcceleratedSequence acc = accelerated_sequence(map, x0, 20);
  double prev = std::numeric_limits<double>::infinity();
  bool monotone = true;
  double err20 = 0.0;
  for (long n : {3L, 5L, 10L, 20L}) {
    const double e = (acc.points[static_cast<std::size_t>(n - 1)] - z_oracle).norm();
    if (e > prev) monotone = false;
    prev = e;
    err20 = e;
  }
  const double secs = seconds_since(t0);
  const bool pass = monotone && err20 <= 1e-4 && secs < 10.0;
  report(8, "accelerated-sequence", pass,
         std::string("monotone ") + (monotone ? "yes" : "NO") + ", error at n=20 " +
             fmt(err20) + ", " + fmt(secs) + "s (tol 1e-4/10s)");
}

// ---------------------------------------------------------------------
// 9. Product-space lifting: vanishing displacement with a common zero, and
//    the mean displacement against the lifted closed form.
void criterion_9() {
  const ConvexSet disk1 = ConvexSet::ball(Vector::Zero(2), 1.5);
  Vector c2(2);
  c2 << 2.0, 0.0;
  const ConvexSet disk2 = ConvexSet::ball(c2, 1.5);
  const ProductProblem feasible(
      {MonotoneOp::grad_half_dist_sq(disk1), MonotoneOp::grad_half_dist_sq(disk2)},
      {1.0, 1.0});
  Vector z0(2);
  z0 << 5.0, 3.0;
  const ParallelSolveReport rep = parallel_fb_solve(feasible, z0);
  const double v_norm = rep.lifted.v.norm();
  const double sum_res = rep.sum_residual;

  Vector a1(2), a2(2), a3(2);
  a1 << 1.0, 0.0;
  a2 << 0.5, 1.0;
  a3 << -0.5, 0.0;  // sums to (1,1)
  const ProductProblem translated(
      {MonotoneOp::constant(a1), MonotoneOp::constant(a2), MonotoneOp::constant(a3)},
      {1.0, 1.0, 1.0});
  const SplitProblem lifted = build_lifted_problem(translated);
  const FixedPointMap lifted_map = FixedPointMap::forward_backward(lifted);
  const DisplacementEstimate est =
      estimate_v_iterative(lifted_map, lift(Vector::Zero(2), 3));
  const Vector oracle = v_affine_closed_form(affine_form(lifted_map));
  const double against_oracle = (est.v - oracle).norm();

  const bool pass = v_norm <= 1e-6 && sum_res <= 1e-6 && against_oracle <= 1e-6;
  report(9, "parallel-splitting", pass,
         "feasible |v| " + fmt(v_norm) + ", sum residual " + fmt(sum_res) +
             ", translated vs oracle " + fmt(against_oracle) + " (tol 1e-6)");
}

// ---------------------------------------------------------------------
// 10. Non-unique solutions, unique forward value: two overlapping parallel
//     segments; three distinct limits share one operator value.
void criterion_10() {
  Vector lo1(2), hi1(2), lo2(2), hi2(2);
  lo1 << -2.0, 0.0;
  hi1 << 2.0, 0.0;
  lo2 << -1.0, 1.0;
  hi2 << 3.0, 1.0;
  const ConvexSet seg1 = ConvexSet::box(lo1, hi1);
  const ConvexSet seg2 = ConvexSet::box(lo2, hi2);
  const SplitProblem problem(MonotoneOp::grad_half_dist_sq(seg1),
                             MonotoneOp::normal_cone(seg2));

  std::vector<Vector> starts;
  Vector s(2);
  s << -5.0, -3.0;
  starts.push_back(s);
  s << 5.0, 4.0;
  starts.push_back(s);
  s << 0.5, -7.0;
  starts.push_back(s);

  std::vector<Vector> zs, values;
  for (const auto& start : starts) {
    const Solution sol = solve_primal(problem, start);
    zs.push_back(sol.z);
    values.push_back(sol.dual_point);
  }
  double min_z_gap = std::numeric_limits<double>::infinity();
  double max_value_gap = 0.0;
  for (std::size_t i = 0; i < zs.size(); ++i) {
    for (std::size_t j = i + 1; j < zs.size(); ++j) {
      min_z_gap = std::min(min_z_gap, (zs[i] - zs[j]).norm());
      max_value_gap = std::max(max_value_gap, (values[i] - values[j]).norm());
    }
  }
  const bool pass = min_z_gap >= 0.5 && max_value_gap <= 1e-6;
  report(10, "dual-value-uniqueness", pass,
         "distinct limits (min gap " + fmt(min_z_gap) + "), forward-value gap " +
             fmt(max_value_gap) + " (tol 1e-6)");
}

// ---------------------------------------------------------------------
// 11. Property suites: firm nonexpansiveness, averagedness, gradient
//     consistency, and the monotone displacement defect.
void criterion_11() {
  // (a) resolvents and projectors, 1000 sampled pairs each
  Matrix rot(2, 2);
  const double th = 0.6;
  rot << 0.9 * std::cos(th), -0.9 * std::sin(th), 0.9 * std::sin(th), 0.9 * std::cos(th);
  Vector c(2);
  c << 1.0, -1.0;
  std::vector<MonotoneOp> ops;
  ops.push_back(MonotoneOp::affine(rot, c));
  ops.push_back(MonotoneOp::constant(c));
  ops.push_back(MonotoneOp::normal_cone(ConvexSet::nonnegative_orthant(2)));
  ops.push_back(MonotoneOp::normal_cone(ConvexSet::ball(c, 2.0)));
  Matrix span(2, 1);
  span << 3.0, 4.0;
  ops.push_back(MonotoneOp::normal_cone(ConvexSet::affine_subspace(c, span)));
  ops.push_back(MonotoneOp::normal_cone(ConvexSet::hyperbola_epigraph()));
  Vector lo(2), hi(2);
  lo << -1.0, 0.0;
  hi << 2.0, 1.0;
  ops.push_back(MonotoneOp::normal_cone(ConvexSet::box(lo, hi)));
  ops.push_back(MonotoneOp::grad_half_dist_sq(ConvexSet::ball(c, 2.0)));
  ops.push_back(MonotoneOp::scaled(0.5, MonotoneOp::inner_shift(c, MonotoneOp::affine(rot, c))));
  double worst_fne = 0.0;
  std::uint64_t seed = 1000;
  for (const auto& op : ops) {
    const auto witness = check_firmly_nonexpansive(
        [&op](const Vector& x) { return resolvent(op, x); }, op.dim(), 1000, seed++);
    worst_fne = std::max(worst_fne, witness.max_violation);
  }

  // (b) two-thirds averagedness of the forward-backward map
  Vector pull(2);
  pull << -1.0, -2.0;
  const SplitProblem fb1(MonotoneOp::constant(pull),
                         MonotoneOp::normal_cone(ConvexSet::nonnegative_orthant(2)));
  const SplitProblem fb2(MonotoneOp::grad_half_dist_sq(ConvexSet::ball(Vector::Zero(2), 1.0)),
                         MonotoneOp::normal_cone(ConvexSet::hyperbola_epigraph()));
  const double defect =
      std::max(averagedness_defect(fb1, 1000, 2000), averagedness_defect(fb2, 1000, 2001));

  // (c) gradient of half the squared distance vs central differences
  GaussianSampler grng(3000);
  double worst_grad = 0.0;
  const std::vector<ConvexSet> sets{ConvexSet::nonnegative_orthant(2),
                                    ConvexSet::ball(c, 2.0),
                                    ConvexSet::affine_subspace(c, span),
                                    ConvexSet::hyperbola_epigraph()};
  for (const auto& set : sets) {
    auto f = [&](const Vector& y) {
      const double dist = distance(set, y);
      return 0.5 * dist * dist;
    };
    for (int k = 0; k < 25; ++k) {
      const Vector x = grng.vector(2, 5.0);
      const Vector g = grad_half_dist_sq(set, x);
      const Vector fd = testor::fd_gradient(f, x);
      worst_grad = std::max(worst_grad, (g - fd).norm() / (1.0 + g.norm()));
    }
  }

  // (d) the displacement defect |T^n x - T^(n+1) x - v| never increases
  GaussianSampler mrng(4000);
  double worst_increase = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix l = testor::random_firmly_nonexpansive(mrng, 3);
    const Vector b = mrng.vector(3, 2.0);
    const AffineMap t(l, b);
    const Vector v = v_affine_closed_form(t);
    Vector x = mrng.vector(3, 5.0);
    double prev = std::numeric_limits<double>::infinity();
    for (int n = 0; n < 60; ++n) {
      const Vector tx = t.linear().matrix() * x + t.offset();
      const double defect_n = (x - tx - v).norm();
      if (defect_n > prev) worst_increase = std::max(worst_increase, defect_n - prev);
      prev = defect_n;
      x = tx;
    }
  }

  const bool pass = worst_fne <= 1e-9 && defect <= 1e-9 && worst_grad <= 1e-4 &&
                    worst_increase <= 1e-12;
  report(11, "property-suites", pass,
         "firm-nonexp " + fmt(worst_fne) + ", averagedness " + fmt(defect) + ", gradient " +
             fmt(worst_grad) + ", defect increase " + fmt(worst_increase) +
             " (tol 1e-9/1e-9/1e-4/1e-12)");
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  criterion_11();
  if (failures > 0) {
    std::printf("%d of 11 criteria failed\n", failures);
  } else {
    std::printf("all 11 criteria passed\n");
  }
  return failures;
}
