#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fjohn/errors.hpp"
#include "fjohn/logconcave.hpp"

using namespace fjohn;

namespace {

// Closed form of the integral of (1-|x|^2)^(s/2) over the unit ball.
double ball_closed_form(int n, double s) {
  return std::pow(std::numbers::pi, 0.5 * n) * std::tgamma(0.5 * s + 1.0) / std::tgamma(0.5 * (n + s) + 1.0);
}

LogConcaveFn three_piece_2d() {
  // a_j = (1,0), (-1,1), (-1,-1) positively span the plane
  return LogConcaveFn(2, PiecewiseLogAffine{{{{1.0, 0.0}, 0.1}, {{-1.0, 1.0}, 0.0}, {{-1.0, -1.0}, -0.2}}, {}});
}

}  // namespace

TEST_CASE("evaluation of the two forms") {
  const auto one = LogConcaveFn::constant_one(2, 3.0);
  CHECK(eval_h(one, std::vector{0.3, -1.2}) == 1.0);
  CHECK(eval_h(one, std::vector{3.0, 1.0}) == 0.0);

  const auto ball = LogConcaveFn::unit_ball_power(2, 1.5);
  CHECK(eval_h(ball, std::vector{0.0, 0.0}) == doctest::Approx(1.0));
  CHECK(eval_h(ball, std::vector{1.0, 0.0}) == 0.0);

  CHECK(height_fn(EPoint::identity(2), std::vector{0.0, 0.0}) == doctest::Approx(1.0));
  CHECK(height_fn(EPoint::identity(2), std::vector{0.6, 0.8}) == 0.0);
  const EPoint e{BlockMat(2.0 * SymMatrix::identity(2), 3.0), Vec{0.0, 0.0}};
  CHECK(height_fn(e, std::vector{1.0, 0.0}) == doctest::Approx(3.0 * std::sqrt(3.0) / 2.0));
  CHECK_THROWS_AS(height_fn({BlockMat(SymMatrix(2), 1.0), Vec{0.0, 0.0}}, std::vector{0.0, 0.0}), Error);
}

TEST_CASE("properness on load") {
  // one piece and no domain: psi is not coercive
  CHECK_THROWS_AS(LogConcaveFn(1, PiecewiseLogAffine{{{{1.0}, 0.0}}, {}}), Error);
  // two pieces in the same half-line
  CHECK_THROWS_AS(LogConcaveFn(1, PiecewiseLogAffine{{{{1.0}, 0.0}, {{2.0}, 0.0}}, {}}), Error);
  // slopes that do not positively span the plane
  CHECK_THROWS_AS(LogConcaveFn(2, PiecewiseLogAffine{{{{1.0, 0.0}, 0.0}, {{0.0, 1.0}, 0.0}, {{-1.0, 0.0}, 0.0}}, {}}),
                  Error);
  CHECK_THROWS_AS(LogConcaveFn(2, PiecewiseLogAffine{{{{1.0}, 0.0}}, 1.0}), Error);
  CHECK_NOTHROW(three_piece_2d());
  CHECK(three_piece_2d().is_coercive());
}

TEST_CASE("integral of h") {
  // h = exp(-|x|) on the line integrates to 2
  const LogConcaveFn lap(1, PiecewiseLogAffine{{{{1.0}, 0.0}, {{-1.0}, 0.0}}, {}});
  CHECK(lap.integral().value == doctest::Approx(2.0).epsilon(1e-4));
  const auto one = LogConcaveFn::constant_one(1, 1.0);
  CHECK(one.integral().value == doctest::Approx(2.0).epsilon(1e-2));
}

TEST_CASE("supremum of h^(1/s)") {
  const LogConcaveFn lap(1, PiecewiseLogAffine{{{{1.0}, -0.5}, {{-2.0}, 1.0}}, {}});
  // pieces tie at x = 0.5, psi = 0
  CHECK(lap.sup_pow(1.0) == doctest::Approx(1.0));
  // pieces tie at (-0.1, -0.1) where psi = 0
  CHECK(three_piece_2d().sup_pow(2.0) == doctest::Approx(1.0));
  CHECK(LogConcaveFn::constant_one(2, 1.0).sup_pow(0.5) == doctest::Approx(1.0));
}

TEST_CASE("gradients of h^(1/s)") {
  const auto one = LogConcaveFn::constant_one(2, 5.0);
  const Vec g0 = grad_h_pow(one, std::vector{0.2, 0.1}, 1.0);
  CHECK(g0[0] == 0.0);
  CHECK(g0[1] == 0.0);

  const LogConcaveFn lap(1, PiecewiseLogAffine{{{{1.0}, 0.0}, {{-1.0}, 0.0}}, {}});
  CHECK_THROWS_AS(grad_h_pow(lap, std::vector{0.0}, 1.0), Error);
  const Vec gl = grad_h_pow(lap, std::vector{0.5}, 2.0);
  CHECK(gl[0] == doctest::Approx(-0.5 * std::exp(-0.25)));
  CHECK_THROWS_AS(grad_h_pow(one, std::vector{6.0, 0.0}, 1.0), Error);

  // central differences, away from kinks
  const auto tri = three_piece_2d();
  const auto ball = LogConcaveFn(2, EllipsoidHeightPower{{BlockMat(SymMatrix::diagonal(std::vector{1.5, 0.8}), 1.2),
                                                          Vec{0.1, -0.2}},
                                                         1.7, 0.9});
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  int checked = 0;
  while (checked < 100) {
    const Vec x{u(rng), u(rng)};
    for (const LogConcaveFn* h : {&tri, &ball}) {
      const double s = 1.3;
      if (h == &tri && tri.active_piece(x).gap < 1e-4) continue;
      if (h->eval(x) < 1e-3) continue;
      const Vec g = h->grad_pow(x, s);
      const SymMatrix hs = h->hess_pow(x, s);
      for (int i = 0; i < 2; ++i) {
        Vec xp = x, xm = x;
        xp[i] += 1e-6;
        xm[i] -= 1e-6;
        const double fd = (h->eval_pow(xp, s) - h->eval_pow(xm, s)) / 2e-6;
        REQUIRE(std::abs(fd - g[i]) <= 1e-5 * std::max(1.0, std::abs(g[i])));
        const Vec gp = h->grad_pow(xp, s), gm = h->grad_pow(xm, s);
        for (int j = 0; j < 2; ++j) REQUIRE(std::abs((gp[j] - gm[j]) / 2e-6 - hs(i, j)) <= 1e-5 * std::max(1.0, std::abs(hs(i, j))));
      }
    }
    ++checked;
  }
}

TEST_CASE("log-concavity on sampled triples") {
  const auto tri = three_piece_2d();
  const auto ball = LogConcaveFn::unit_ball_power(2, 2.0);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.5, 1.5), l(0.0, 1.0);
  for (int k = 0; k < 10000; ++k) {
    const Vec x{u(rng), u(rng)}, y{u(rng), u(rng)};
    const double t = l(rng);
    const Vec z{t * x[0] + (1 - t) * y[0], t * x[1] + (1 - t) * y[1]};
    for (const LogConcaveFn* h : {&tri, &ball}) {
      const double lhs = h->eval(z);
      const double rhs = std::pow(h->eval(x), t) * std::pow(h->eval(y), 1 - t);
      REQUIRE(lhs - rhs >= -1e-12);
    }
  }
}

TEST_CASE("s-lifting membership") {
  const auto one = LogConcaveFn::constant_one(1, 2.0);
  CHECK(s_lifting_contains(one, {{0.3}, 0.5}, 1.0));
  CHECK_FALSE(s_lifting_contains(one, {{0.3}, 1.5}, 1.0));
  CHECK(s_lifting_contains(one, {{0.3}, -1.0}, 1.0));
}

TEST_CASE("s-volumes") {
  CHECK(s_volume_unit_ball(1, 2.0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(s_volume_unit_ball(1, 0.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s_volume_unit_ball(2, 2.0) == doctest::Approx(std::numbers::pi / 2.0).epsilon(1e-12));
  for (int n = 1; n <= 3; ++n)
    for (double s : {0.0, 0.5, 1.0, 1.5, 2.0, 3.0})
      CHECK(s_volume_unit_ball(n, s) == doctest::Approx(ball_closed_form(n, s)).epsilon(1e-8));

  CHECK(s_volume_ellipsoid(EPoint::identity(2), 1.5) == doctest::Approx(s_volume_unit_ball(2, 1.5)));
  const EPoint e{BlockMat(2.0 * SymMatrix::identity(1), 1.0), Vec{0.3}};
  CHECK(s_volume_ellipsoid(e, 2.0) == doctest::Approx(8.0 / 3.0));
  const auto p = sdet1_param(SymMatrix::diagonal(std::vector{0.4, -0.1}), 1.5);
  CHECK(s_volume_ellipsoid({BlockMat(p.a, p.alpha), Vec{1.0, 2.0}}, 1.5) ==
        doctest::Approx(s_volume_unit_ball(2, 1.5)).epsilon(1e-10));
}

TEST_CASE("height function is log-concave and vanishes on the boundary") {
  const EPoint e{BlockMat(SymMatrix::diagonal(std::vector{2.0, 0.5}), 1.5), Vec{0.2, 0.0}};
  CHECK(height_fn(e, std::vector{2.2, 0.0}) == 0.0);
  CHECK(height_fn(e, std::vector{0.2, 0.5}) == 0.0);
  CHECK(height_fn(e, std::vector{0.2, 0.49}) > 0.0);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-2.5, 2.5), l(0.0, 1.0);
  for (int k = 0; k < 2000; ++k) {
    const Vec x{u(rng), u(rng)}, y{u(rng), u(rng)};
    const double t = l(rng);
    const Vec z{t * x[0] + (1 - t) * y[0], t * x[1] + (1 - t) * y[1]};
    REQUIRE(height_fn(e, z) - std::pow(height_fn(e, x), t) * std::pow(height_fn(e, y), 1 - t) >= -1e-12);
  }
}
