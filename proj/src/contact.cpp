#include "fjohn/contact.hpp"

#include <algorithm>
#include <cmath>

#include "fjohn/errors.hpp"

namespace fjohn {

namespace {

constexpr double kGolden = 0.6180339887498949;

double gap_at(const LogConcaveFn& h, std::span<const double> x, double s) {
  return h.eval_pow(x, s) - hemisphere(x);
}

// Golden-section search of t -> fn(t) on [a, b].
template <class Fn>
double golden_min(Fn&& fn, double a, double b, double tol) {
  double c = b - kGolden * (b - a), d = a + kGolden * (b - a);
  double fc = fn(c), fd = fn(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = fn(d);
    }
  }
  return fc <= fd ? c : d;
}

bool is_unit_ball_power(const LogConcaveFn& h, double s) {
  const auto* e = std::get_if<EllipsoidHeightPower>(&h.form());
  if (!e) return false;
  const int n = h.n();
  return (e->ellipsoid.mat.diag - SymMatrix::identity(n)).frobenius_norm() < 1e-14 &&
         std::abs(e->ellipsoid.mat.corner - 1.0) < 1e-14 && norm2(e->ellipsoid.shift) < 1e-14 &&
         std::abs(e->power - s) < 1e-14 && std::abs(e->scale - 1.0) < 1e-14;
}

// Newton steps on phi where h^(1/s) is smooth; stops at the first failure.
void newton_polish(const LogConcaveFn& h, double s, Vec& x) {
  const int n = h.n();
  for (int it = 0; it < 20; ++it) {
    const double hb = hemisphere(x);
    if (hb <= 1e-8) return;
    Vec g;
    SymMatrix hess;
    try {
      g = h.grad_pow(x, s);
      hess = h.hess_pow(x, s);
    } catch (const Error&) {
      return;
    }
    // phi = H - hbar; grad hbar = -x/hbar, hess hbar = -I/hbar - x x^T/hbar^3
    for (int i = 0; i < n; ++i) g[i] += x[i] / hb;
    SymMatrix q = SymMatrix::identity(n);
    q *= 1.0 / hb;
    SymMatrix xx = SymMatrix::outer(x);
    xx *= 1.0 / (hb * hb * hb);
    hess += q;
    hess += xx;
    if (!is_spd(hess)) return;
    const Vec step = inverse_sym(hess).apply(g);
    Vec trial = x;
    for (int i = 0; i < n; ++i) trial[i] -= step[i];
    if (dot(trial, trial) >= 1.0 || gap_at(h, trial, s) > gap_at(h, x, s) + 1e-15) return;
    x = trial;
    if (norm2(step) < 1e-15) return;
  }
}

void refine(const LogConcaveFn& h, double s, Vec& x, double spacing) {
  const int n = h.n();
  double delta = spacing;
  for (int cycle = 0; cycle < 200; ++cycle) {
    double moved = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x0 = x[i];
      auto along = [&](double t) {
        Vec y = x;
        y[i] = t;
        return dot(y, y) >= 1.0 ? 1e300 : gap_at(h, y, s);
      };
      const double t = golden_min(along, x0 - delta, x0 + delta, 1e-12);
      if (along(t) < along(x0)) {
        moved = std::max(moved, std::abs(t - x0));
        x[i] = t;
      }
    }
    if (moved < 1e-10) break;
    delta = std::max(2.0 * moved, 1e-9);
  }
  newton_polish(h, s, x);
}

template <class Fn>
void for_each_grid_point(int n, int per_axis, Fn&& fn) {
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  Vec x(static_cast<std::size_t>(n));
  while (true) {
    for (int i = 0; i < n; ++i) x[i] = -1.0 + 2.0 * idx[i] / (per_axis - 1);
    fn(idx, x);
    int d = 0;
    while (d < n && ++idx[d] == per_axis) idx[d++] = 0;
    if (d == n) return;
  }
}

}  // namespace

LogConcaveFn make_tangent_instance(int n, const std::vector<Vec>& points, double s) {
  if (points.empty()) throw Error(ErrorKind::InvalidInput, "tangent instance needs at least one point");
  PiecewiseLogAffine psi;
  for (const auto& u : points) {
    if (static_cast<int>(u.size()) != n) throw Error(ErrorKind::DimensionMismatch, "tangent point dimension");
    const double r2 = dot(u, u);
    if (r2 >= 1.0) throw Error(ErrorKind::PointOnBoundary, "tangent points must lie in the open unit ball");
    AffinePiece p;
    p.a.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p.a[i] = s * u[i] / (1.0 - r2);
    p.b = -0.5 * s * std::log1p(-r2) - dot(p.a, u);
    psi.pieces.push_back(std::move(p));
  }
  return LogConcaveFn(n, std::move(psi));
}

ContactSet detect_contacts(const LogConcaveFn& h, double s, int grid_per_axis, double gap_tol) {
  const int n = h.n();
  if (grid_per_axis < 3) throw Error(ErrorKind::InvalidInput, "contact grid needs at least 3 points per axis");
  if (grid_per_axis % 2 == 0) ++grid_per_axis;  // keep the origin on the grid
  const double spacing = 2.0 / (grid_per_axis - 1);

  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(grid_per_axis);
  std::vector<double> phi(total, 1e300);
  std::vector<Vec> inside_points;
  double worst = 1e300;
  Vec worst_x;
  std::size_t near_zero = 0, inside = 0;
  auto flat = [&](const std::vector<int>& idx) {
    std::size_t k = 0;
    for (int i = n - 1; i >= 0; --i) k = k * grid_per_axis + idx[i];
    return k;
  };
  for_each_grid_point(n, grid_per_axis, [&](const std::vector<int>& idx, const Vec& x) {
    if (dot(x, x) >= 1.0) return;
    const double v = gap_at(h, x, s);
    phi[flat(idx)] = v;
    ++inside;
    if (v <= gap_tol) {
      ++near_zero;
      inside_points.push_back(x);
    }
    if (v < worst) {
      worst = v;
      worst_x = x;
    }
  });
  if (worst < -gap_tol) {
    std::string where;
    for (double c : worst_x) where += (where.empty() ? "" : ", ") + std::to_string(c);
    throw Error(ErrorKind::NotJohnPosition,
                "the hemisphere leaves the s-lifting of h near (" + where + "), gap " + std::to_string(worst));
  }

  ContactSet out;
  out.gap_tol = gap_tol;
  if (is_unit_ball_power(h, s) || (inside > 0 && near_zero * 2 > inside)) {
    out.continuum = true;
    out.points = std::move(inside_points);
    for (const auto& p : out.points) out.h_values.push_back(h.eval_pow(p, s));
    return out;
  }

  // Local minima of phi on the grid (all 3^n - 1 neighbours).
  std::vector<Vec> candidates;
  for_each_grid_point(n, grid_per_axis, [&](const std::vector<int>& idx, const Vec& x) {
    const double v = phi[flat(idx)];
    if (v >= 1e299 || v > 0.25) return;
    std::vector<int> off(static_cast<std::size_t>(n), -1);
    bool is_min = true;
    while (is_min) {
      bool centre = true;
      std::vector<int> nb = idx;
      bool valid = true;
      for (int i = 0; i < n; ++i) {
        if (off[i] != 0) centre = false;
        nb[i] += off[i];
        if (nb[i] < 0 || nb[i] >= grid_per_axis) valid = false;
      }
      if (!centre && valid && phi[flat(nb)] < v) is_min = false;
      int d = 0;
      while (d < n && ++off[d] == 2) off[d++] = -1;
      if (d == n) break;
    }
    if (is_min) candidates.push_back(x);
  });

  for (auto& c : candidates) {
    refine(h, s, c, spacing);
    if (gap_at(h, c, s) > gap_tol) continue;
    const bool dup = std::any_of(out.points.begin(), out.points.end(), [&](const Vec& p) {
      Vec d = p;
      for (int i = 0; i < n; ++i) d[i] -= c[i];
      return norm2(d) < 1e-6;
    });
    if (!dup) out.points.push_back(c);
  }
  std::sort(out.points.begin(), out.points.end());
  for (const auto& p : out.points) out.h_values.push_back(h.eval_pow(p, s));
  return out;
}

DecompositionReport verify_decomposition(const std::vector<Vec>& points, const Vec& weights, const LogConcaveFn& h,
                                         double s, double tol) {
  if (points.size() != weights.size()) throw Error(ErrorKind::DimensionMismatch, "one weight per point");
  const int n = h.n();
  DecompositionReport rep;
  SymMatrix iso(n);
  Vec centre(static_cast<std::size_t>(n), 0.0);
  double trace_part = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& u = points[i];
    if (static_cast<int>(u.size()) != n) throw Error(ErrorKind::DimensionMismatch, "point dimension");
    const double hp = h.eval_pow(u, s);
    rep.residual_a = std::max(rep.residual_a, std::abs(hp - hemisphere(u)));
    SymMatrix uu = SymMatrix::outer(u);
    uu *= weights[i];
    iso += uu;
    trace_part += weights[i] * hp * hp;
    for (int k = 0; k < n; ++k) centre[k] += weights[i] * u[k];
  }
  rep.residual_b = (iso - SymMatrix::identity(n)).frobenius_norm();
  rep.residual_c = std::abs(trace_part - s);
  rep.residual_d = norm2(centre);
  rep.pass_a = rep.residual_a <= tol;
  rep.pass_b = rep.residual_b <= tol;
  rep.pass_c = rep.residual_c <= tol;
  rep.pass_d = rep.residual_d <= tol;
  return rep;
}

namespace {

Fixture assemble(std::string name, int n, double s, std::vector<Vec> points, Vec weights) {
  LogConcaveFn h = make_tangent_instance(n, points, s);
  ContactSet cs;
  cs.gap_tol = 1e-10;
  cs.points = points;
  for (const auto& p : points) cs.h_values.push_back(h.eval_pow(p, s));
  DecompositionReport rep;
  if (!weights.empty()) rep = verify_decomposition(points, weights, h, s);
  return Fixture{std::move(name), s, std::move(h), std::move(cs), std::move(weights), rep};
}

Vec axis_point(int n, int j, double r) {
  Vec u(static_cast<std::size_t>(n), 0.0);
  u[j] = r;
  return u;
}

// Solves 2 c1 r1 + 2 c2 r2 = 1, k (c1 (1 - r1) + c2 (1 - r2)) = s for (c1, c2).
std::pair<double, double> two_level_weights(double k, double s, double r1, double r2) {
  if (!(r1 > 0.0 && r1 < r2 && r2 < 1.0))
    throw Error(ErrorKind::InfeasibleWeights, "need 0 < rho1^2 < rho2^2 < 1");
  const double a11 = 2.0 * r1, a12 = 2.0 * r2, a21 = k * (1.0 - r1), a22 = k * (1.0 - r2);
  const double det = a11 * a22 - a12 * a21;
  const double c1 = (a22 - a12 * s) / det;
  const double c2 = (a11 * s - a21) / det;
  if (!(c1 > 0.0) || !(c2 > 0.0))
    throw Error(ErrorKind::InfeasibleWeights, "weights solving the isotropy conditions are not positive (c1 = " +
                                                  std::to_string(c1) + ", c2 = " + std::to_string(c2) + ")");
  return {c1, c2};
}

}  // namespace

Fixture cross_fixture(int n, double s) {
  if (n < 1 || !(s > 0.0)) throw Error(ErrorKind::InvalidInput, "cross fixture needs n >= 1 and s > 0");
  const double rho = std::sqrt(n / (n + s));
  const double c = (n + s) / (2.0 * n);
  std::vector<Vec> pts;
  Vec w;
  for (int j = 0; j < n; ++j) {
    pts.push_back(axis_point(n, j, -rho));
    pts.push_back(axis_point(n, j, rho));
    w.push_back(c);
    w.push_back(c);
  }
  return assemble("cross", n, s, std::move(pts), std::move(w));
}

Fixture two_level_cross_fixture(int n, double s, double rho1_sq, double rho2_sq) {
  if (n < 1 || !(s > 0.0)) throw Error(ErrorKind::InvalidInput, "two-level fixture needs n >= 1 and s > 0");
  const auto [c1, c2] = two_level_weights(2.0 * n, s, rho1_sq, rho2_sq);
  const double r1 = std::sqrt(rho1_sq), r2 = std::sqrt(rho2_sq);
  std::vector<Vec> pts;
  Vec w;
  for (int j = 0; j < n; ++j) {
    for (const auto& [r, c] : std::initializer_list<std::pair<double, double>>{{-r2, c2}, {-r1, c1}, {r1, c1}, {r2, c2}}) {
      pts.push_back(axis_point(n, j, r));
      w.push_back(c);
    }
  }
  return assemble("two-level-cross", n, s, std::move(pts), std::move(w));
}

Fixture star_fixture(double s, double rho1_sq, double rho2_sq) {
  if (!(s > 0.0)) throw Error(ErrorKind::InvalidInput, "star fixture needs s > 0");
  // Axes and diagonals each contribute 2 c rho^2 Id to the isotropy sum.
  const auto [c1, c2] = two_level_weights(4.0, s, rho1_sq, rho2_sq);
  const double r1 = std::sqrt(rho1_sq), r2 = std::sqrt(0.5 * rho2_sq);
  std::vector<Vec> pts = {{r1, 0.0}, {-r1, 0.0}, {0.0, r1}, {0.0, -r1}, {r2, r2}, {-r2, -r2}, {r2, -r2}, {-r2, r2}};
  Vec w = {c1, c1, c1, c1, c2, c2, c2, c2};
  return assemble("star", 2, s, std::move(pts), std::move(w));
}

Fixture tangent_fixture(int n, double s, const std::vector<Vec>& points) {
  return assemble("tangent", n, s, points, {});
}

}  // namespace fjohn
