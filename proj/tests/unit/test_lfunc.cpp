#include <cmath>
#include <random>

#include "doctest.h"
#include "fjohn/contact.hpp"
#include "fjohn/errors.hpp"
#include "fjohn/lfunc.hpp"
#include "fjohn/oracle.hpp"

using namespace fjohn;

namespace {

const Fixture& two_level() {
  static const Fixture fx = two_level_cross_fixture(1, 1.0, 0.4, 0.8);
  return fx;
}

// h^(1/s) straight from the affine pieces
std::function<double(std::span<const double>)> raw_pow(const LogConcaveFn& h, double s) {
  const auto pieces = h.piecewise()->pieces;
  return [pieces, s](std::span<const double> x) {
    double best = -1e300;
    for (const auto& p : pieces) {
      double v = p.b;
      for (std::size_t i = 0; i < x.size(); ++i) v += p.a[i] * x[i];
      best = std::max(best, v);
    }
    return std::exp(-best / s);
  };
}

// members of the s-determinant >= 1 cone (s = 1 and s = 2 fixtures take the
// larger of the two corner bounds)
EPoint random_sE(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 0.15);
  std::uniform_real_distribution<double> u(-0.15, 0.15);
  SymMatrix S(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) S.set(i, j, g(rng));
  EPoint p = EPoint::zero(n);
  p.mat.diag = expm_sym(S);
  const double det = p.mat.diag.det();
  p.mat.corner = std::max(std::pow(det, -1.0), std::pow(det, -0.5)) * std::exp(std::abs(g(rng)));
  for (auto& v : p.shift) v = u(rng);
  return p;
}

Vec random_rescaled(int n, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  Vec c(static_cast<std::size_t>(n * (n + 1) / 2 + n));
  for (auto& v : c) v = g(rng);
  return c;
}

}  // namespace

TEST_CASE("L_r against the dense oracle") {
  const auto& fx = two_level();
  const auto pair = canonical_pair();
  const double ref = L_r_eval(fx.h, 1.0, pair, 0.8, EPoint::identity(1));
  oracle::DenseLrInput in;
  in.n = 1;
  in.r = 0.8;
  in.h_pow = raw_pow(fx.h, 1.0);
  in.f = [&](double t) { return pair.f(t); };
  in.g = [&](double t) { return pair.g(t); };
  in.a_rows = {1.0};
  in.alpha = 1.0;
  in.v = {0.0};
  in.x_radius = lr_domain_radius(fx.h, 1.0, pair, 0.8);
  in.y_max = 1.6;
  const double dense = oracle::dense_quadrature_L_r(in);
  CHECK(std::abs(dense - ref) <= 1e-4 * ref);

  // a moved point: both paths follow
  EPoint p = EPoint::identity(1);
  p.mat.diag.set(0, 0, 1.1);
  p.mat.corner = 0.95;
  p.shift[0] = 0.05;
  in.a_rows = {1.1};
  in.alpha = 0.95;
  in.v = {0.05};
  const double moved = L_r_eval(fx.h, 1.0, pair, 0.8, p);
  CHECK(std::abs(oracle::dense_quadrature_L_r(in) - moved) <= 1e-4 * moved);
  CHECK(moved != doctest::Approx(ref));
}

TEST_CASE("L_r and I_r are the same functional on the s-determinant-one set") {
  const auto& fx = two_level();
  const auto pair = canonical_pair();
  const QuadratureSpec q;
  std::mt19937_64 rng(5);
  for (double r : {0.8, 0.9}) {
    const double eps = 1.0 - r;
    CHECK(I_r_eval(fx.h, 1.0, pair, r, EPoint::zero(1), q) ==
          doctest::Approx(L_r_eval(fx.h, 1.0, pair, r, EPoint::identity(1), q)).epsilon(1e-12));
    for (int k = 0; k < 100; ++k) {
      const Vec c = random_rescaled(1, rng, 1.0);
      const EPoint p = lr_point_from_rescaled(1, 1.0, r, c);
      REQUIRE(s_det(p.mat, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
      EPoint m = p - EPoint::identity(1);
      m *= 1.0 / eps;
      REQUIRE(std::abs(I_r_eval(fx.h, 1.0, pair, r, m, q) - L_r_eval(fx.h, 1.0, pair, r, p, q)) <= 2.0 * q.tol);
    }
  }
  EPoint bad = EPoint::zero(1);
  bad.mat.diag.set(0, 0, -10.0);
  CHECK_THROWS_AS(I_r_eval(fx.h, 1.0, pair, 0.9, bad), Error);
  CHECK_THROWS_AS(L_r_eval(fx.h, 1.0, pair, 1.0, EPoint::identity(1)), Error);
  CHECK_THROWS_AS(L_r_eval(fx.h, 1.0, pair, 0.5, EPoint::identity(1)), Error);
}

TEST_CASE("positivity, convex* and the identity bound") {
  const auto pair = canonical_pair();
  const QuadratureSpec q;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> lam(0.0, 1.0);
  for (const auto& fx : {two_level(), cross_fixture(1, 2.0)}) {
    const double bound = L_r_identity_bound(fx.h, fx.s, pair);
    for (double r : {0.8, 0.9, 0.95, 0.99}) {
      CHECK(L_r_eval(fx.h, fx.s, pair, r, EPoint::identity(1), q) <= bound);
      for (int k = 0; k < 50; ++k) REQUIRE(L_r_eval(fx.h, fx.s, pair, r, random_sE(1, rng), q) > 0.0);
      for (int k = 0; k < 200; ++k) {
        const EPoint a = random_sE(1, rng), b = random_sE(1, rng);
        const double t = lam(rng);
        EPoint mix = t * a + (1.0 - t) * b;
        mix.mat.corner = std::pow(a.mat.corner, t) * std::pow(b.mat.corner, 1.0 - t);
        const double lhs = L_r_eval(fx.h, fx.s, pair, r, mix, q);
        const double rhs = t * L_r_eval(fx.h, fx.s, pair, r, a, q) + (1.0 - t) * L_r_eval(fx.h, fx.s, pair, r, b, q);
        REQUIRE(lhs <= rhs + 2.0 * q.tol);
      }
    }
  }
}

TEST_CASE("quadrature refinement stability") {
  const auto pair = canonical_pair();
  QuadratureSpec coarse, fine;
  fine.x_nodes_per_axis = 2 * coarse.x_nodes_per_axis;
  fine.t_nodes = 2 * coarse.t_nodes;
  fine.tol = coarse.tol / 100.0;
  std::mt19937_64 rng(23);
  for (const auto& fx : {two_level(), cross_fixture(1, 1.0), cross_fixture(1, 0.5)}) {
    for (double r : {0.8, 0.95}) {
      for (int k = 0; k < 5; ++k) {
        const EPoint p = random_sE(1, rng);
        const double a = L_r_eval(fx.h, fx.s, pair, r, p, coarse);
        const double b = L_r_eval(fx.h, fx.s, pair, r, p, fine);
        CHECK(std::abs(a - b) <= 5.0 * coarse.tol * std::max(1.0, b));
      }
    }
  }
}

TEST_CASE("L_r gradient") {
  const auto& fx = two_level();
  const auto pair = canonical_pair();
  QuadratureSpec q;
  q.tol = 1e-11;
  std::mt19937_64 rng(2);
  for (double r : {0.8, 0.95}) {
    for (int k = 0; k < 5; ++k) {
      const EPoint p = random_sE(1, rng);
      const EPoint g = L_r_grad(fx.h, 1.0, pair, r, p, q);
      const EPoint d = random_sE(1, rng) - EPoint::identity(1);
      const double h = 1e-5;
      const double fd = (L_r_eval(fx.h, 1.0, pair, r, p + h * d, q) - L_r_eval(fx.h, 1.0, pair, r, p - h * d, q)) / (2 * h);
      CHECK(inner(g, d) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
  // the planar star fixture goes through the nested rule
  const auto st = star_fixture(1.0, 0.4, 0.8);
  QuadratureSpec q2;
  q2.tol = 1e-5;
  q2.x_nodes_per_axis = 8;
  const EPoint p = random_sE(2, rng);
  const EPoint g = L_r_grad(st.h, 1.0, pair, 0.8, p, q2);
  const EPoint d = random_sE(2, rng) - EPoint::identity(2);
  const double h = 1e-2;
  const double fd = (L_r_eval(st.h, 1.0, pair, 0.8, p + h * d, q2) - L_r_eval(st.h, 1.0, pair, 0.8, p - h * d, q2)) / (2 * h);
  CHECK(inner(g, d) == doctest::Approx(fd).epsilon(1e-2));
}

TEST_CASE("minimize_L_r") {
  const auto& fx = two_level();
  const auto pair = canonical_pair();
  QuadratureSpec q;
  q.tol = 1e-9;
  const auto m8 = minimize_L_r(fx.h, 1.0, pair, 0.8, q);
  const auto m9 = minimize_L_r(fx.h, 1.0, pair, 0.9, q, {}, &m8.rescaled_coords);
  for (const auto* m : {&m8, &m9}) {
    CHECK(m->converged);
    CHECK(std::abs(m->s_det - 1.0) <= 1e-10);
    CHECK(std::abs(m->point.shift[0]) <= 1e-6);
    CHECK(m->lambda > 0.0);
  }
  CHECK(norm(m9.point - EPoint::identity(1)) < norm(m8.point - EPoint::identity(1)));

  // coercive uniformly in r: values blow up along rays of the s-det one set
  std::mt19937_64 rng(8);
  for (double r : {0.8, 0.9, 0.95, 0.99}) {
    const auto m = minimize_L_r(fx.h, 1.0, pair, r, q);
    for (int k = 0; k < 20; ++k) {
      Vec d = random_rescaled(1, rng, 1.0);
      const double dn = std::sqrt(d[0] * d[0] + d[1] * d[1]);
      for (auto& v : d) v *= 10.0 / dn / (1.0 - r);  // ray parameter 10 in (S, v)
      const double far = L_r_eval(fx.h, 1.0, pair, r, lr_point_from_rescaled(1, 1.0, r, d), q);
      REQUIRE(far > 10.0 * m.value);
    }
  }
}

TEST_CASE("mu_r concentrates on the contact set") {
  const auto& fx = two_level();
  const auto pair = canonical_pair();
  QuadratureSpec q;
  q.tol = 1e-9;
  const TestBump origin{"origin", {0.0}, 0.2, 0.1};
  double prev = 1e300;
  Vec start{0.0, 0.0};
  for (double r : {0.8, 0.9, 0.95, 0.99}) {
    const auto m = minimize_L_r(fx.h, 1.0, pair, r, q, {}, &start);
    start = m.rescaled_coords;
    const double v = mu_r_integrate(fx.h, 1.0, pair, r, m.point, origin, q) / std::sqrt(1.0 - r);
    CHECK((v < prev || v == 0.0));
    prev = v;
  }
  CHECK(prev < 1e-6);
  CHECK(TestBump{"b", {0.0}, 0.2, 0.1}(std::vector{0.25}) == doctest::Approx(0.5));
}

TEST_CASE("r sweep on the two-level fixture") {
  const auto& fx = two_level();
  QuadratureSpec q;
  q.tol = 1e-9;
  const std::vector<double> schedule{0.8, 0.9, 0.95, 0.99};
  const auto res = r_sweep(fx.h, 1.0, canonical_pair(), fx.contacts.points, schedule, q);
  REQUIRE(res.records.size() == 4);
  CHECK(res.dist_decreasing);
  CHECK(res.trace_decreasing);
  CHECK(res.secant_decreasing);
  CHECK(res.mu_error_decreasing);
  const auto& last = res.records.back();
  CHECK(last.dist_to_identity <= 0.05);
  CHECK(last.normalized_s_trace <= 0.05);
  CHECK(last.secant_to_M0 <= 10.0 * (1.0 - 0.99));
  CHECK(last.mu_r_max_rel_error <= 0.05);
  for (double l : res.lambda_r) CHECK(l > 0.0);
  for (const auto& rec : res.records) CHECK(std::abs(rec.s_det - 1.0) <= 1e-10);
  CHECK(res.bumps.size() == 5);

  const auto csv = sweep_csv(res);
  CHECK(csv.rfind("r,dist_to_identity,normalized_s_trace,secant_to_M0", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(sweep_csv(r_sweep(fx.h, 1.0, canonical_pair(), fx.contacts.points, schedule, q)) == csv);

  CHECK_THROWS_AS(r_sweep(fx.h, 1.0, canonical_pair(), fx.contacts.points, {0.9, 0.8}, q), Error);
}

TEST_CASE("limit reference") {
  const auto& fx = two_level();
  const auto ref = limit_reference(fx.h, 1.0, canonical_pair(), fx.contacts.points);
  CHECK(ref.minimum.converged);
  // Q_u = (1 + u^2)/(1 - u^2)^(3/2) in one dimension
  for (const auto& a : ref.nu.atoms) {
    const double u = a.x[0], hb = std::sqrt(1.0 - u * u);
    CHECK(a.m == doctest::Approx(1.0 / std::sqrt((1.0 + u * u) / (hb * hb * hb) / (2.0 * hb))).epsilon(1e-12));
  }
  CHECK(check_isotropy(ref.mu, 1.0).pass);
  CHECK(ref.minimum.point.mat.diag(0, 0) == doctest::Approx(-0.09501).epsilon(1e-3));
}
