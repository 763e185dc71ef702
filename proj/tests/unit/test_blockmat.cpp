#include <cmath>
#include <random>

#include "doctest.h"
#include "fjohn/blockmat.hpp"
#include "fjohn/errors.hpp"

using namespace fjohn;

namespace {

SymMatrix random_sym(int n, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  SymMatrix m(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) m.set(i, j, u(rng));
  return m;
}

EPoint random_point(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Vec w(static_cast<std::size_t>(n));
  for (auto& x : w) x = u(rng);
  return {BlockMat(random_sym(n, rng, 2.0), u(rng)), w};
}

}  // namespace

TEST_CASE("s-determinant and s-trace") {
  CHECK(s_det(BlockMat::id_plus(2, 1.0), 0.5) == doctest::Approx(1.0));
  CHECK(s_det(BlockMat(2.0 * SymMatrix::identity(2), 4.0), 0.5) == doctest::Approx(8.0));
  CHECK(s_det(BlockMat(SymMatrix::diagonal(std::vector{3.0}), 2.0), 2.0) == doctest::Approx(12.0));
  CHECK_THROWS_AS(s_det(BlockMat::id_plus(2, -1.0), 0.5), Error);
  // integer s tolerates a negative corner
  CHECK(s_det(BlockMat::id_plus(1, -2.0), 2.0) == doctest::Approx(4.0));

  CHECK(s_trace(BlockMat::id_plus(2, 3.0), 2.0) == doctest::Approx(8.0));
  CHECK(s_trace(BlockMat::zero(3), 1.7) == 0.0);
  CHECK(s_trace(BlockMat(SymMatrix::diagonal(std::vector{1.0}), -1.0), 1.0) == 0.0);

  // s = 1 recovers det(A (+) alpha) = alpha det A and tr(A (+) alpha) = alpha + tr A
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const SymMatrix m = random_sym(3, rng, 1.5);
    CHECK(s_det(BlockMat(m, 2.5), 1.0) == doctest::Approx(2.5 * m.det()));
    CHECK(s_trace(BlockMat(m, 2.5), 1.0) == doctest::Approx(2.5 + m.trace()));
  }
}

TEST_CASE("inner product and norm") {
  const EPoint p = EPoint::identity(1);
  CHECK(inner(p, p) == doctest::Approx(2.0));
  for (double s : {0.5, 1.0, 2.0}) {
    for (int n = 1; n <= 3; ++n) {
      const EPoint q{BlockMat::id_plus(n, s), Vec(static_cast<std::size_t>(n), 0.0)};
      CHECK(inner(q, q) == doctest::Approx(n + s * s));
    }
  }
  CHECK_THROWS_AS(inner(EPoint::zero(1), EPoint::zero(2)), Error);
}

TEST_CASE("trace-zero projection") {
  const double s = 1.0;
  const EPoint id_s{BlockMat::id_plus(1, s), Vec{0.0}};
  CHECK(norm(project_trace0(id_s, s)) < 1e-15);

  const EPoint p{BlockMat(SymMatrix::diagonal(std::vector{1.0}), 0.0), Vec{0.0}};
  const EPoint q = project_trace0(p, s);
  CHECK(q.mat.diag(0, 0) == doctest::Approx(0.5));
  CHECK(q.mat.corner == doctest::Approx(-0.5));
  CHECK(std::abs(s_trace(q.mat, s)) < 1e-15);

  std::mt19937_64 rng(11);
  for (int k = 0; k < 1000; ++k) {
    const int n = 1 + k % 3;
    const double sk = 0.5 + 0.25 * (k % 7);
    const EPoint r = random_point(n, rng);
    const EPoint pr = project_trace0(r, sk);
    const EPoint dir{BlockMat::id_plus(n, sk), Vec(static_cast<std::size_t>(n), 0.0)};
    REQUIRE(std::abs(inner(pr, dir)) < 1e-12);
    REQUIRE(norm(project_trace0(pr, sk) - pr) < 1e-12);
  }
}

TEST_CASE("contact tensor") {
  const BlockMat c0 = contact_tensor(std::vector{0.0, 0.0}, 1.0);
  CHECK(c0.diag.frobenius_norm() == 0.0);
  CHECK(c0.corner == 1.0);
  const BlockMat c1 = contact_tensor(std::vector{1.0, 0.0}, 0.0);
  CHECK(c1.diag(0, 0) == 1.0);
  CHECK(c1.diag(1, 1) == 0.0);
  const BlockMat c2 = contact_tensor(std::vector{std::sqrt(0.5)}, 0.5);
  CHECK(c2.diag(0, 0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(contact_tensor(std::vector{1.1}, 0.0), Error);
}

TEST_CASE("s-determinant-one parametrization") {
  const auto id = sdet1_param(SymMatrix(2), 1.3);
  CHECK(id.alpha == doctest::Approx(1.0));
  CHECK((id.a - SymMatrix::identity(2)).frobenius_norm() < 1e-15);

  const auto p1 = sdet1_param(SymMatrix::diagonal(std::vector{std::log(2.0)}), 1.0);
  CHECK(p1.a(0, 0) == doctest::Approx(2.0));
  CHECK(p1.alpha == doctest::Approx(0.5));

  const auto p2 = sdet1_param(SymMatrix::diagonal(std::vector{0.7, -0.7}), 2.0);
  CHECK(p2.a(0, 0) == doctest::Approx(std::exp(0.7)));
  CHECK(p2.a(1, 1) == doctest::Approx(std::exp(-0.7)));
  CHECK(p2.alpha == doctest::Approx(1.0));

  std::mt19937_64 rng(5);
  for (int k = 0; k < 200; ++k) {
    const int n = 1 + k % 3;
    const double s = 0.5 + (k % 4) * 0.5;
    SymMatrix sm = random_sym(n, rng, 1.0);
    const double f = sm.frobenius_norm();
    if (f > 5.0) sm *= 5.0 / f;
    const auto p = sdet1_param(sm, s);
    const EPoint e{BlockMat(p.a, p.alpha), Vec(static_cast<std::size_t>(n), 0.0)};
    REQUIRE(is_in_sE_plus(e, s));
    REQUIRE(s_det(e.mat, s) == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("membership in the s-determinant cone") {
  CHECK(is_in_sE_plus(EPoint::identity(2), 1.0));
  CHECK_FALSE(is_in_sE_plus({BlockMat::id_plus(2, 0.5), Vec(2, 0.0)}, 1.0));
  CHECK_FALSE(is_in_sE_plus({BlockMat(-1.0 * SymMatrix::identity(2), 2.0), Vec(2, 0.0)}, 1.0));
}

TEST_CASE("AM-GM block inequality on the cone") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> lam(0.01, 0.99);
  for (int k = 0; k < 500; ++k) {
    const int n = 1 + k % 3;
    const double s = 0.5 + (k % 3) * 0.75;
    const auto a = sdet1_param(random_sym(n, rng, 1.0), s);
    const auto b = sdet1_param(random_sym(n, rng, 1.0), s);
    const double l = lam(rng);
    const BlockMat mix(l * a.a + (1.0 - l) * b.a, l * a.alpha + (1.0 - l) * b.alpha);
    REQUIRE(s_det(mix, s) >= 1.0 - 1e-9);
  }
}

TEST_CASE("spectral helpers") {
  std::mt19937_64 rng(23);
  for (int n = 1; n <= 5; ++n) {
    SymMatrix m = random_sym(n, rng, 1.0);
    m += static_cast<double>(n) * SymMatrix::identity(n);
    const auto e = eigen_sym(m);
    double prod = 1.0;
    for (double v : e.values) prod *= v;
    CHECK(prod == doctest::Approx(m.det()).epsilon(1e-10));
    const SymMatrix inv = inverse_sym(m);
    Vec x(static_cast<std::size_t>(n), 1.0);
    const Vec y = m.apply(inv.apply(x));
    for (double v : y) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(inverse_sym(SymMatrix(2)), Error);
}

TEST_CASE("trace-zero basis is orthonormal and spans the kernel") {
  for (int n = 1; n <= 3; ++n) {
    for (double s : {0.5, 1.0, 2.0}) {
      const auto basis = trace0_basis(n, s);
      REQUIRE(static_cast<int>(basis.size()) == n * (n + 1) / 2 + n);
      for (std::size_t i = 0; i < basis.size(); ++i) {
        CHECK(std::abs(s_trace(basis[i].mat, s)) < 1e-13);
        for (std::size_t j = 0; j < basis.size(); ++j)
          CHECK(inner(basis[i], basis[j]) == doctest::Approx(i == j ? 1.0 : 0.0));
      }
      std::mt19937_64 rng(static_cast<unsigned>(n * 10 + s));
      const EPoint p = project_trace0(random_point(n, rng), s);
      const EPoint back = from_coordinates(coordinates(p, basis), basis);
      CHECK(norm(back - p) < 1e-12);
    }
  }
}
