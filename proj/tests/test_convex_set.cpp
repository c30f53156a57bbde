#include "opsplit/convex_set.hpp"

#include "oracle.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using namespace opsplit;

namespace {

std::vector<ConvexSet> catalog_2d() {
  Eigen::VectorXi signs(2);
  signs << 1, -1;
  Vector lo(2), hi(2), c(2), n(2), off(2);
  lo << -1.0, 0.0;
  hi << 2.0, 3.0;
  c << 1.0, -2.0;
  n << 1.0, 1.0;
  off << 0.5, 1.0;
  Matrix span(2, 1);
  span << 3.0, 4.0;
  Vector shift(2);
  shift << -2.0, 5.0;
  return {
      ConvexSet::nonnegative_orthant(2),
      ConvexSet::orthant(signs),
      ConvexSet::box(lo, hi),
      ConvexSet::affine_subspace(off, span),
      ConvexSet::point(c),
      ConvexSet::full_space(2),
      ConvexSet::halfspace(n, 1.0),
      ConvexSet::ball(c, 1.5),
      ConvexSet::hyperbola_epigraph(),
      ConvexSet::translate(ConvexSet::ball(c, 1.0), shift),
  };
}

}  // namespace

TEST_CASE("projections are idempotent, members, and consistent with distance",
          "[convex_set]") {
  GaussianSampler rng(7);
  for (const auto& set : catalog_2d()) {
    for (int k = 0; k < 40; ++k) {
      const Vector x = rng.vector(2, 8.0);
      const Vector px = project(set, x);
      REQUIRE(contains(set, px, 1e-8));
      REQUIRE((project(set, px) - px).norm() <= 1e-9);
      REQUIRE(std::abs(distance(set, x) - (x - px).norm()) <= 1e-12);
      // the projection is the closest member among sampled candidates
      const Vector y = project(set, rng.vector(2, 8.0));
      REQUIRE((x - px).norm() <= (x - y).norm() + 1e-9);
    }
  }
}

TEST_CASE("projections are nonexpansive", "[convex_set]") {
  GaussianSampler rng(11);
  for (const auto& set : catalog_2d()) {
    for (int k = 0; k < 40; ++k) {
      const Vector x = rng.vector(2, 8.0);
      const Vector y = rng.vector(2, 8.0);
      REQUIRE((project(set, x) - project(set, y)).norm() <= (x - y).norm() + 1e-12);
    }
  }
}

TEST_CASE("orthant and box projections clamp coordinatewise", "[convex_set]") {
  Vector x(2);
  x << 5.0, -3.0;
  Vector px = project(ConvexSet::nonnegative_orthant(2), x);
  REQUIRE(px[0] == 5.0);
  REQUIRE(px[1] == 0.0);

  Eigen::VectorXi signs(2);
  signs << -1, 1;
  px = project(ConvexSet::orthant(signs), x);
  REQUIRE(px[0] == 0.0);
  REQUIRE(px[1] == 0.0);

  Vector lo(2), hi(2);
  lo << -1.0, -1.0;
  hi << 2.0, 2.0;
  px = project(ConvexSet::box(lo, hi), x);
  REQUIRE(px[0] == 2.0);
  REQUIRE(px[1] == -1.0);
}

TEST_CASE("halfspace and ball projections match their closed forms", "[convex_set]") {
  Vector n(2);
  n << 3.0, 4.0;  // non-unit on purpose
  const ConvexSet h = ConvexSet::halfspace(n, 5.0);
  Vector x(2);
  x << 3.0, 4.0;  // n.x = 25 > 5, outside
  const Vector px = project(h, x);
  const Vector expected = x - (n.dot(x) - 5.0) / n.squaredNorm() * n;
  REQUIRE((px - expected).norm() <= 1e-14);
  REQUIRE(std::abs(n.dot(px) - 5.0) <= 1e-12);
  Vector inside(2);
  inside << 0.0, 0.0;
  REQUIRE((project(h, inside) - inside).norm() == 0.0);

  Vector c(2);
  c << 1.0, 1.0;
  const ConvexSet b = ConvexSet::ball(c, 2.0);
  Vector far(2);
  far << 1.0, 6.0;
  const Vector pb = project(b, far);
  Vector expected_b(2);
  expected_b << 1.0, 3.0;
  REQUIRE((pb - expected_b).norm() <= 1e-14);
}

TEST_CASE("affine subspace projection agrees with Gram-Schmidt oracle", "[convex_set]") {
  GaussianSampler rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix span(3, 2);
    for (Index i = 0; i < 3; ++i) span.row(i) = rng.vector(2, 2.0).transpose();
    const Vector off = rng.vector(3, 3.0);
    const ConvexSet s = ConvexSet::affine_subspace(off, span);
    for (int k = 0; k < 10; ++k) {
      const Vector x = rng.vector(3, 5.0);
      const Vector px = project(s, x);
      const Vector ox = testor::project_affine_gs(off, span, x);
      REQUIRE((px - ox).norm() <= 1e-9 * (1.0 + x.norm()));
    }
  }
}

TEST_CASE("affine subspace accepts rank-deficient spans", "[convex_set]") {
  Matrix span(2, 2);
  span << 1.0, 2.0, 1.0, 2.0;  // both columns parallel to (1,1)
  Vector off = Vector::Zero(2);
  const ConvexSet s = ConvexSet::affine_subspace(off, span);
  Vector x(2);
  x << 2.0, 0.0;
  Vector expected(2);
  expected << 1.0, 1.0;
  REQUIRE((project(s, x) - expected).norm() <= 1e-12);
}

TEST_CASE("hyperbola epigraph projection matches the grid oracle", "[convex_set][oracle]") {
  std::vector<Vector> probes;
  auto add = [&](double a, double b) {
    Vector p(2);
    p << a, b;
    probes.push_back(p);
  };
  add(2.0, 2.0);     // interior
  add(1.0, 1.0);     // boundary
  add(3.0, 0.0);     // below the curve, past the shoulder
  add(0.5, -1.0);    // below and left
  add(-1.0, -1.0);   // third quadrant
  add(-5.0, 2.0);    // second quadrant
  add(0.0, 0.0);     // origin
  add(10.0, -0.5);   // far along the axis
  add(0.01, 50.0);   // near-vertical branch
  add(100.0, -3.0);  // far along, well below

  const ConvexSet h = ConvexSet::hyperbola_epigraph();
  for (const auto& p : probes) {
    const Vector px = project(h, p);
    const Vector ox = testor::project_hyperbola_grid(p);
    REQUIRE((px - ox).norm() <= 1e-6 * (1.0 + p.norm()));
    if ((px - p).norm() > 1e-12) {
      // boundary solutions satisfy y = 1/x and first-order optimality:
      // the residual p - px is orthogonal to the tangent (1, -1/x^2)
      REQUIRE(std::abs(px[1] - 1.0 / px[0]) <= 1e-9);
      Vector tangent(2);
      tangent << 1.0, -1.0 / (px[0] * px[0]);
      REQUIRE(std::abs(tangent.dot(p - px)) <= 1e-7 * (1.0 + p.norm()));
    }
  }
}

TEST_CASE("hyperbola epigraph membership", "[convex_set]") {
  const ConvexSet h = ConvexSet::hyperbola_epigraph();
  Vector p(2);
  p << 2.0, 0.5;
  REQUIRE(contains(h, p, 1e-12));
  p << 2.0, 0.49;
  REQUIRE(!contains(h, p, 1e-6));
  p << -1.0, 5.0;
  REQUIRE(!contains(h, p, 1e-6));
}

TEST_CASE("translated set projects by conjugation with the shift", "[convex_set]") {
  GaussianSampler rng(17);
  Vector c(2);
  c << 1.0, -2.0;
  const ConvexSet inner = ConvexSet::ball(c, 1.5);
  const Vector w = rng.vector(2, 4.0);
  const ConvexSet shifted = ConvexSet::translate(inner, w);
  for (int k = 0; k < 25; ++k) {
    const Vector x = rng.vector(2, 6.0);
    REQUIRE((project(shifted, x) - (w + project(inner, x - w))).norm() <= 1e-12);
  }
}

TEST_CASE("product set projects blockwise", "[convex_set]") {
  const ConvexSet p = ConvexSet::product(
      {ConvexSet::nonnegative_orthant(2), ConvexSet::ball(Vector::Zero(2), 1.0)});
  REQUIRE(p.dim() == 4);
  Vector x(4);
  x << -1.0, 2.0, 3.0, 4.0;
  const Vector px = project(p, x);
  REQUIRE(px[0] == 0.0);
  REQUIRE(px[1] == 2.0);
  Vector tail(2);
  tail << 3.0, 4.0;
  REQUIRE((px.segment(2, 2) - tail / 5.0).norm() <= 1e-14);
}

TEST_CASE("diagonal set projects to the lifted block average", "[convex_set]") {
  const ConvexSet d = ConvexSet::diagonal(3, 2);
  REQUIRE(d.dim() == 6);
  Vector x(6);
  x << 1.0, 0.0, 2.0, 3.0, 3.0, 0.0;
  const Vector px = project(d, x);
  Vector mean(2);
  mean << 2.0, 1.0;
  for (int i = 0; i < 3; ++i) REQUIRE((px.segment(2 * i, 2) - mean).norm() <= 1e-14);
  // the residual of each block sums to zero across blocks
  Vector sum = Vector::Zero(2);
  for (int i = 0; i < 3; ++i) sum += x.segment(2 * i, 2) - px.segment(2 * i, 2);
  REQUIRE(sum.norm() <= 1e-14);
}

TEST_CASE("squared-distance gradient matches finite differences", "[convex_set][oracle]") {
  GaussianSampler rng(23);
  for (const auto& set : catalog_2d()) {
    auto f = [&](const Vector& y) {
      const double dist = distance(set, y);
      return 0.5 * dist * dist;
    };
    for (int k = 0; k < 10; ++k) {
      const Vector x = rng.vector(2, 5.0);
      const Vector g = grad_half_dist_sq(set, x);
      const Vector fd = testor::fd_gradient(f, x);
      REQUIRE((g - fd).norm() <= 1e-4 * (1.0 + g.norm()));
      REQUIRE((g - (x - project(set, x))).norm() <= 1e-12);
    }
  }
}

TEST_CASE("dimension mismatches are rejected", "[convex_set][errors]") {
  const ConvexSet b = ConvexSet::ball(Vector::Zero(2), 1.0);
  Vector x3 = Vector::Zero(3);
  REQUIRE_THROWS_AS(project(b, x3), DimensionError);
  Vector lo(2), hi(2);
  lo << 1.0, 0.0;
  hi << 0.0, 1.0;  // lo > hi in the first coordinate
  REQUIRE_THROWS_AS(ConvexSet::box(lo, hi), Error);
  REQUIRE_THROWS_AS(ConvexSet::ball(Vector::Zero(2), -1.0), Error);
}
