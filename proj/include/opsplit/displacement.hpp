#pragma once

#include "opsplit/splitting.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace opsplit {

// Estimate of the minimal displacement vector v = argmin{|u| : u in
// cl ran(Id - T)}. For a nonexpansive T, x_n - x_{n+1} -> v along any orbit,
// and |x_n - x_{n+1}| decreases monotonically to |v|.
struct DisplacementEstimate {
  Vector v;
  long iterations = 0;       // map evaluations spent
  double last_residual = 0;  // |x_N - x_{N+1} - v_hat| proxy: final step-to-step movement
  bool monotone_ok = true;   // recorded |x_n - x_{n+1}| was nonincreasing (up to slack)
  int stages_run = 0;
  bool accepted_early = false;
};

struct EstimateOptions {
  long max_iter = 100000;   // total budget across stages
  double early_accept = 1e-8;  // stop once successive difference estimates agree this well
  std::size_t trace_cap = 10000;
  double monotone_slack = 1e-9;
};

// Run the orbit, watching the difference d_n = x_n - x_{n+1}. Stages check
// the estimate at geometrically spaced budgets so cheap problems exit early.
inline DisplacementEstimate estimate_v_iterative(const FixedPointMap& map, const Vector& x0,
                                                 const EstimateOptions& opts = {},
                                                 const ToleranceConfig& tol = default_tolerances()) {
  check_dim(x0.size(), map.dim(), "estimate_v_iterative");
  check_finite(x0, "estimate_v_iterative");
  if (opts.max_iter < 2) throw Error("estimate_v_iterative: budget must be >= 2");

  DisplacementEstimate est;
  Vector x = x0;
  Vector d_prev;
  double prev_step_norm = std::numeric_limits<double>::infinity();
  double last_checkpoint_gap = std::numeric_limits<double>::quiet_NaN();
  long n = 0;
  long next_checkpoint = std::max<long>(8, opts.max_iter / 1024);

  while (n < opts.max_iter) {
    Vector next = apply_map(map, x, tol);
    if (!next.allFinite()) {
      throw NumericError("estimate_v_iterative: non-finite iterate at n=" +
                         std::to_string(n + 1));
    }
    Vector d = x - next;
    const double step_norm = d.norm();
    if (step_norm > prev_step_norm + opts.monotone_slack * (1.0 + prev_step_norm)) {
      est.monotone_ok = false;
    }
    prev_step_norm = step_norm;
    x = std::move(next);
    ++n;

    if (n >= next_checkpoint) {
      ++est.stages_run;
      if (d_prev.size() > 0) {
        last_checkpoint_gap = (d - d_prev).norm();
        if (last_checkpoint_gap <= opts.early_accept) {
          est.v = std::move(d);
          est.iterations = n;
          est.last_residual = last_checkpoint_gap;
          est.accepted_early = true;
          return est;
        }
      }
      d_prev = d;
      next_checkpoint = std::max(next_checkpoint + 1, 2 * next_checkpoint);
    }
    if (n == opts.max_iter) {
      est.v = std::move(d);
      est.iterations = n;
      est.last_residual = last_checkpoint_gap;
    }
  }
  return est;
}

// Closed form for affine T = L x + b with L nonexpansive: v is the projection
// of b onto ran(Id - L) shifted back, v = P_ran(Id-L)(b) - b ... more
// precisely v = b - P_ran(Id-L)(b) negated; derived from v = -P_ran(Id-T)(0)
// sign convention v = P_cl ran(Id-T)(0). Here Id - T maps x to (Id-L)x - b,
// so ran(Id-T) = ran(Id-L) - b and the least-norm element is
// P_ran(Id-L)(b) - b.
inline Vector v_affine_closed_form(const AffineMap& t,
                                   const ToleranceConfig& tol = default_tolerances()) {
  const Index d = t.dim();
  const Matrix m = Matrix::Identity(d, d) - t.linear().matrix();
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
  const auto& sigma = svd.singularValues();
  const double cutoff = tol.rank_cutoff * (sigma.size() > 0 ? sigma(0) : 0.0);
  Index rank = 0;
  while (rank < sigma.size() && sigma(rank) > cutoff) ++rank;
  const Matrix u = svd.matrixU().leftCols(rank);
  const Vector b = t.offset();
  return u * (u.transpose() * b) - b;
}

inline Vector v_closed_form(const FixedPointMap& map,
                            const ToleranceConfig& tol = default_tolerances()) {
  return v_affine_closed_form(affine_form(map, tol), tol);
}

// The FB and DR maps of the same problem share ran(Id - T), so their minimal
// displacement vectors coincide; this returns both estimates and their gap.
struct DisplacementComparison {
  DisplacementEstimate fb;
  DisplacementEstimate dr;
  double gap = 0.0;
};

inline DisplacementComparison v_fb_vs_v_dr(const SplitProblem& problem, const Vector& x0,
                                           const EstimateOptions& opts = {},
                                           const ToleranceConfig& tol = default_tolerances()) {
  DisplacementComparison out;
  out.fb = estimate_v_iterative(FixedPointMap::forward_backward(problem), x0, opts, tol);
  out.dr = estimate_v_iterative(FixedPointMap::douglas_rachford(problem), x0, opts, tol);
  out.gap = (out.fb.v - out.dr.v).norm();
  return out;
}

// ---------------------------------------------------------------------------
// Normal solve: find a fixed point of v + T, i.e. a solution of the problem
// perturbed by the minimal displacement, which exists iff the perturbed
// problem is attained.

enum class NormalSolveStatus { normal_solution_found, divergent, inconclusive };

inline const char* to_string(NormalSolveStatus s) {
  switch (s) {
    case NormalSolveStatus::normal_solution_found: return "normal_solution_found";
    case NormalSolveStatus::divergent: return "divergent";
    case NormalSolveStatus::inconclusive: return "inconclusive";
  }
  return "unknown";
}

struct NormalSolveReport {
  NormalSolveStatus status = NormalSolveStatus::inconclusive;
  Vector v;                 // displacement used for the shift
  Vector z;                 // candidate fixed point of v + T (meaningful when found)
  double residual = 0.0;    // |z - v - T z|
  DisplacementEstimate estimate;
  IterationTrace trace;     // orbit of the shifted map
  bool used_closed_form = false;
};

struct NormalSolveOptions {
  long max_iter = 100000;   // total budget: half estimation, half shifted solve
  double tol = 1e-8;
  double divergence_threshold = 1e8;
  bool closed_form = false;  // use the affine closed form for v when available
  EstimateOptions estimate;  // early_accept etc. for the estimation phase
  std::size_t trace_cap = 10000;
};

inline NormalSolveReport normal_solve(const FixedPointMap& map, const Vector& x0,
                                      const NormalSolveOptions& opts = {},
                                      const ToleranceConfig& tol = default_tolerances()) {
  NormalSolveReport report;
  long solve_budget = opts.max_iter;
  if (opts.closed_form && is_affine(map)) {
    report.v = v_closed_form(map, tol);
    report.used_closed_form = true;
    report.estimate.v = report.v;
    report.estimate.accepted_early = true;
  } else {
    EstimateOptions est_opts = opts.estimate;
    est_opts.max_iter = std::max<long>(2, opts.max_iter / 2);
    report.estimate = estimate_v_iterative(map, x0, est_opts, tol);
    report.v = report.estimate.v;
    solve_budget = std::max<long>(1, opts.max_iter - report.estimate.iterations);
  }

  const FixedPointMap shifted = FixedPointMap::shifted(map, report.v);
  IterateOptions it_opts;
  it_opts.max_iter = solve_budget;
  it_opts.tol = opts.tol;
  it_opts.divergence_threshold = opts.divergence_threshold;
  it_opts.trace_cap = opts.trace_cap;
  it_opts.displacement = Vector(Vector::Zero(map.dim()));

  try {
    report.trace = iterate(shifted, x0, it_opts, tol);
  } catch (const IterationOverflow& overflow) {
    report.trace = overflow.trace;
    report.status = NormalSolveStatus::divergent;
    report.z = report.trace.final_point();
    report.residual = std::numeric_limits<double>::infinity();
    return report;
  }

  report.z = report.trace.final_point();
  report.residual = (report.z - report.v - apply_map(map, report.z, tol)).norm();
  switch (report.trace.stop_reason) {
    case StopReason::tolerance:
      report.status = NormalSolveStatus::normal_solution_found;
      break;
    case StopReason::divergence:
      report.status = NormalSolveStatus::divergent;
      break;
    case StopReason::max_iter:
      report.status = NormalSolveStatus::inconclusive;
      break;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Accelerated normal-point sequence for affine maps:
//   x_n := T^n x + n (T^(n^2) x - T^(n^2+1) x),
// which converges to P_{Fix(v+T)}x, since the correction term n d_(n^2)
// approaches n v and T^n x + n v = (v+T)^n x for affine T. Each point costs
// n^2 + 1 applications of the map; the whole sequence up to N is produced in
// one orbit pass of N^2 + 1 applications.

struct AcceleratedSequence {
  std::vector<long> outer;        // n = 1..N
  std::vector<Vector> points;     // x_n
  std::vector<Vector> differences;  // d_(n^2) = T^(n^2) x - T^(n^2+1) x
  Vector v;                       // last difference, the displacement estimate
  long map_evaluations = 0;

  const Vector& final_point() const { return points.back(); }
};

inline AcceleratedSequence accelerated_sequence(const FixedPointMap& map, const Vector& x0,
                                                long outer_steps,
                                                const ToleranceConfig& tol = default_tolerances()) {
  if (!is_affine(map)) {
    throw UnsupportedError("accelerated_sequence: requires an affine map");
  }
  if (outer_steps < 1) throw Error("accelerated_sequence: outer_steps must be >= 1");
  check_dim(x0.size(), map.dim(), "accelerated_sequence");

  AcceleratedSequence out;
  std::vector<Vector> low_orbit;  // T^k x for k = 0..outer_steps
  low_orbit.reserve(static_cast<std::size_t>(outer_steps) + 1);
  low_orbit.push_back(x0);

  Vector x = x0;
  long evaluated = 0;  // x == T^evaluated x0
  long n = 1;
  while (n <= outer_steps) {
    const long target = n * n;
    while (evaluated < target) {
      x = apply_map(map, x, tol);
      if (!x.allFinite()) {
        throw NumericError("accelerated_sequence: non-finite iterate at k=" +
                           std::to_string(evaluated + 1));
      }
      ++evaluated;
      if (evaluated <= outer_steps) low_orbit.push_back(x);
    }
    const Vector next = apply_map(map, x, tol);
    out.outer.push_back(n);
    out.differences.push_back(x - next);
    out.points.push_back(low_orbit[static_cast<std::size_t>(n)] +
                         static_cast<double>(n) * out.differences.back());
    // reuse the evaluation when the orbit continues past n^2
    if (n < outer_steps) {
      x = next;
      ++evaluated;
      if (evaluated <= outer_steps) low_orbit.push_back(x);
    }
    ++n;
  }
  out.map_evaluations = evaluated + 1;
  out.v = out.differences.back();
  return out;
}

// Exactness check of T^n x + n v == (v + T)^n x for affine T; returns the
// max relative deviation over n = 1..steps.
inline double affine_shifted_iterate_identity_check(const FixedPointMap& map, const Vector& x0,
                                                    const Vector& v, long steps,
                                                    const ToleranceConfig& tol = default_tolerances()) {
  check_dim(x0.size(), map.dim(), "shifted iterate identity");
  check_dim(v.size(), map.dim(), "shifted iterate identity");
  const FixedPointMap shifted = FixedPointMap::shifted(map, v);
  Vector plain = x0;
  Vector moved = x0;
  double worst = 0.0;
  for (long n = 1; n <= steps; ++n) {
    plain = apply_map(map, plain, tol);
    moved = apply_map(shifted, moved, tol);
    const double dev = (plain + static_cast<double>(n) * v - moved).norm() /
                       (1.0 + moved.norm());
    worst = std::max(worst, dev);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Convergence-rate diagnostics.

struct RateFit {
  double mu = 0.0;        // fitted contraction factor per iteration
  double r_squared = 1.0; // quality of the log-linear fit
  long points_used = 0;
  std::string note;
};

// Least-squares fit of log e_n ~ log C + n log mu over the positive-error
// tail (first 20% of positive entries discarded as transient). Errors that
// hit exactly zero end the subsequence; an immediately exact orbit returns
// the mu = 0 sentinel.
inline RateFit rate_fit(const std::vector<double>& errors) {
  std::vector<std::pair<long, double>> positive;
  positive.reserve(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i] > 0.0 && std::isfinite(errors[i])) {
      positive.emplace_back(static_cast<long>(i), errors[i]);
    }
  }
  RateFit fit;
  if (positive.size() < 3) {
    fit.note = "exact or near-exact convergence; too few positive errors to fit";
    return fit;
  }
  const std::size_t skip = positive.size() / 5;
  const std::size_t m = positive.size() - skip;
  double sn = 0, se = 0, snn = 0, sne = 0;
  for (std::size_t k = skip; k < positive.size(); ++k) {
    const double n = static_cast<double>(positive[k].first);
    const double e = std::log(positive[k].second);
    sn += n;
    se += e;
    snn += n * n;
    sne += n * e;
  }
  const double denom = m * snn - sn * sn;
  if (denom <= 0.0) {
    fit.note = "degenerate abscissae";
    return fit;
  }
  const double slope = (m * sne - sn * se) / denom;
  const double intercept = (se - slope * sn) / m;
  fit.mu = std::exp(slope);
  fit.points_used = static_cast<long>(m);

  double ss_res = 0, ss_tot = 0;
  const double mean_e = se / m;
  for (std::size_t k = skip; k < positive.size(); ++k) {
    const double n = static_cast<double>(positive[k].first);
    const double e = std::log(positive[k].second);
    const double pred = intercept + slope * n;
    ss_res += (e - pred) * (e - pred);
    ss_tot += (e - mean_e) * (e - mean_e);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

// Rate of |x_n - z| along an orbit against a known limit z.
inline RateFit rate_fit_to_limit(const std::vector<Vector>& iterates, const Vector& z) {
  std::vector<double> errors;
  errors.reserve(iterates.size());
  for (const auto& x : iterates) errors.push_back((x - z).norm());
  return rate_fit(errors);
}

// ---------------------------------------------------------------------------
// Summability diagnostics for sequences a_n >= 0 (step norms, residuals).

struct SummabilityReport {
  double sum_squared = 0.0;
  double sum_linear = 0.0;
  double tail_increase_squared = 0.0;  // last-decile increase of the squared partial sums
  double tail_increase_linear = 0.0;
};

inline SummabilityReport summability(const std::vector<double>& a) {
  SummabilityReport rep;
  const std::size_t n = a.size();
  const std::size_t tail_start = n - n / 10;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = a[i] * a[i];
    rep.sum_squared += s;
    rep.sum_linear += a[i];
    if (i >= tail_start) {
      rep.tail_increase_squared += s;
      rep.tail_increase_linear += a[i];
    }
  }
  return rep;
}

// For a nonnegative nonincreasing summable sequence, n * a_n -> 0; reports
// the max of n * a_n over the last decile and whether the sequence was
// nonincreasing, as evidence for or against summability.
struct TailDecayReport {
  double max_tail_n_an = 0.0;
  bool nonincreasing = true;
};

inline TailDecayReport knopp_tail_check(const std::vector<double>& a, double slack = 1e-12) {
  TailDecayReport rep;
  for (std::size_t i = 1; i < a.size(); ++i) {
    if (a[i] > a[i - 1] + slack * (1.0 + a[i - 1])) rep.nonincreasing = false;
  }
  const std::size_t n = a.size();
  for (std::size_t i = n - n / 10; i < n; ++i) {
    rep.max_tail_n_an = std::max(rep.max_tail_n_an, static_cast<double>(i + 1) * a[i]);
  }
  return rep;
}

// knopp_tail_check against explicit iteration indices (thinned traces).
inline TailDecayReport knopp_tail_check(const std::vector<long>& indices,
                                        const std::vector<double>& a, double slack = 1e-12) {
  TailDecayReport rep;
  const std::size_t n = std::min(indices.size(), a.size());
  for (std::size_t i = 1; i < n; ++i) {
    if (a[i] > a[i - 1] + slack * (1.0 + a[i - 1])) rep.nonincreasing = false;
  }
  for (std::size_t i = n - n / 10; i < n; ++i) {
    rep.max_tail_n_an =
        std::max(rep.max_tail_n_an, static_cast<double>(indices[i] + 1) * a[i]);
  }
  return rep;
}

}  // namespace opsplit
