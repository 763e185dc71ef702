#include "fjohn/logconcave.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "fjohn/errors.hpp"
#include "fjohn/quadrature.hpp"

namespace fjohn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kKinkTol = 1e-9;

// Gaussian elimination with partial pivoting; returns false when singular.
bool solve_dense(std::vector<double> m, std::vector<double> rhs, int n, std::vector<double>& out) {
  auto at = [&](int i, int j) -> double& { return m[static_cast<std::size_t>(i) * n + j]; };
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(at(r, c)) > std::abs(at(piv, c))) piv = r;
    if (std::abs(at(piv, c)) < 1e-13) return false;
    if (piv != c) {
      for (int j = 0; j < n; ++j) std::swap(at(c, j), at(piv, j));
      std::swap(rhs[c], rhs[piv]);
    }
    for (int r = c + 1; r < n; ++r) {
      const double f = at(r, c) / at(c, c);
      for (int j = c; j < n; ++j) at(r, j) -= f * at(c, j);
      rhs[r] -= f * rhs[c];
    }
  }
  out.assign(static_cast<std::size_t>(n), 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double acc = rhs[r];
    for (int j = r + 1; j < n; ++j) acc -= at(r, j) * out[j];
    out[r] = acc / at(r, r);
  }
  return true;
}

// Calls fn on every k-subset of {0..m-1}, in lexicographic order.
template <class Fn>
void for_each_subset(int m, int k, Fn&& fn) {
  if (k > m) return;
  std::vector<int> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    fn(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == m - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

// Unit vector orthogonal to the given vectors (which span a hyperplane).
std::optional<Vec> normal_of(const std::vector<const Vec*>& vs, int n) {
  std::vector<Vec> ortho;
  for (const Vec* v : vs) {
    Vec u = *v;
    for (const auto& o : ortho) {
      const double c = dot(u, o);
      for (int i = 0; i < n; ++i) u[i] -= c * o[i];
    }
    const double nu = norm2(u);
    if (nu < 1e-12) return std::nullopt;
    for (auto& x : u) x /= nu;
    ortho.push_back(std::move(u));
  }
  Vec best;
  double best_norm = 0.0;
  for (int k = 0; k < n; ++k) {
    Vec e(static_cast<std::size_t>(n), 0.0);
    e[k] = 1.0;
    for (const auto& o : ortho) {
      const double c = dot(e, o);
      for (int i = 0; i < n; ++i) e[i] -= c * o[i];
    }
    const double ne = norm2(e);
    if (ne > best_norm) {
      best_norm = ne;
      best = e;
    }
  }
  if (best_norm < 1e-12) return std::nullopt;
  for (auto& x : best) x /= best_norm;
  return best;
}

int rank_of(const std::vector<AffinePiece>& pieces, int n) {
  std::vector<Vec> ortho;
  for (const auto& p : pieces) {
    Vec u = p.a;
    for (const auto& o : ortho) {
      const double c = dot(u, o);
      for (int i = 0; i < n; ++i) u[i] -= c * o[i];
    }
    const double nu = norm2(u);
    if (nu < 1e-12 * std::max(1.0, norm2(p.a))) continue;
    for (auto& x : u) x /= nu;
    ortho.push_back(std::move(u));
    if (static_cast<int>(ortho.size()) == n) break;
  }
  return static_cast<int>(ortho.size());
}

// The cone {d : <a_j, d> <= 0 for all j} is {0} iff psi is coercive. Its
// extreme rays lie on intersections of n-1 of the hyperplanes a_j^perp.
bool pieces_positively_span(const std::vector<AffinePiece>& pieces, int n) {
  if (pieces.empty() || rank_of(pieces, n) < n) return false;
  double scale = 0.0;
  for (const auto& p : pieces) scale = std::max(scale, norm2(p.a));
  const double tol = 1e-12 * scale;
  bool spans = true;
  auto test_dir = [&](const Vec& d) {
    for (double sign : {1.0, -1.0}) {
      bool all_nonpos = true;
      for (const auto& p : pieces) {
        if (sign * dot(p.a, d) > tol) {
          all_nonpos = false;
          break;
        }
      }
      if (all_nonpos) spans = false;
    }
  };
  const int m = static_cast<int>(pieces.size());
  for_each_subset(m, n - 1, [&](const std::vector<int>& idx) {
    if (!spans) return;
    std::vector<const Vec*> vs;
    for (int i : idx) vs.push_back(&pieces[i].a);
    if (auto d = normal_of(vs, n)) test_dir(*d);
  });
  return spans;
}

Vec dir_from_index(int n, int k, int total) {
  // Deterministic, roughly uniform directions on S^{n-1}.
  Vec d(static_cast<std::size_t>(n), 0.0);
  if (n == 1) {
    d[0] = (k % 2 == 0) ? 1.0 : -1.0;
  } else if (n == 2) {
    const double t = 2.0 * std::numbers::pi * k / total;
    d[0] = std::cos(t);
    d[1] = std::sin(t);
  } else {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    const double z = 1.0 - 2.0 * (k + 0.5) / total;
    const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
    d[0] = rad * std::cos(golden * k);
    d[1] = rad * std::sin(golden * k);
    d[2] = z;
    for (int i = 3; i < n; ++i) d[i] = 0.0;
  }
  return d;
}

double max_affine(const std::vector<AffinePiece>& pieces, std::span<const double> x) {
  double best = -kInf;
  for (const auto& p : pieces) best = std::max(best, dot(p.a, x) + p.b);
  return best;
}

}  // namespace

double hemisphere(std::span<const double> x) {
  const double r2 = dot(x, x);
  return r2 >= 1.0 ? 0.0 : std::sqrt(1.0 - r2);
}

LogConcaveFn::LogConcaveFn(int n, Form form) : n_(n), form_(std::move(form)) {
  if (n < 1) throw Error(ErrorKind::InvalidInput, "dimension must be positive");
  if (const auto* p = piecewise()) {
    if (p->pieces.empty()) throw Error(ErrorKind::NotProper, "psi needs at least one affine piece");
    for (const auto& piece : p->pieces)
      if (static_cast<int>(piece.a.size()) != n)
        throw Error(ErrorKind::DimensionMismatch, "affine piece slope has wrong length");
    if (p->domain_radius && !(*p->domain_radius > 0.0))
      throw Error(ErrorKind::NotProper, "domain radius must be positive");
  } else {
    const auto& e = std::get<EllipsoidHeightPower>(form_);
    if (e.ellipsoid.n() != n) throw Error(ErrorKind::DimensionMismatch, "ellipsoid dimension");
    if (!is_spd(e.ellipsoid.mat.diag) || !(e.ellipsoid.mat.corner > 0.0))
      throw Error(ErrorKind::SingularA, "ellipsoid needs SPD A and alpha > 0");
    if (!(e.power > 0.0) || !(e.scale > 0.0))
      throw Error(ErrorKind::NotProper, "ellipsoid power and scale must be positive");
  }
  check_proper();
}

LogConcaveFn LogConcaveFn::constant_one(int n, std::optional<double> domain_radius) {
  return LogConcaveFn(n, PiecewiseLogAffine{{AffinePiece{Vec(static_cast<std::size_t>(n), 0.0), 0.0}},
                                            domain_radius ? domain_radius : std::optional<double>(1.0)});
}

LogConcaveFn LogConcaveFn::unit_ball_power(int n, double power) {
  return LogConcaveFn(n, EllipsoidHeightPower{EPoint::identity(n), power, 1.0});
}

double LogConcaveFn::psi(std::span<const double> x) const {
  if (const auto* p = piecewise()) {
    if (p->domain_radius && dot(x, x) > (*p->domain_radius) * (*p->domain_radius)) return kInf;
    return max_affine(p->pieces, x);
  }
  const auto& e = std::get<EllipsoidHeightPower>(form_);
  const double hb = height_fn(e.ellipsoid, x);
  if (hb <= 0.0) return kInf;
  return -std::log(e.scale) - e.power * std::log(hb);
}

double LogConcaveFn::eval(std::span<const double> x) const {
  if (const auto* e = std::get_if<EllipsoidHeightPower>(&form_))
    return e->scale * std::pow(height_fn(e->ellipsoid, x), e->power);
  const double v = psi(x);
  return std::isinf(v) ? 0.0 : std::exp(-v);
}

double LogConcaveFn::eval_pow(std::span<const double> x, double s) const {
  if (const auto* e = std::get_if<EllipsoidHeightPower>(&form_))
    return std::pow(e->scale, 1.0 / s) * std::pow(height_fn(e->ellipsoid, x), e->power / s);
  const double v = psi(x);
  return std::isinf(v) ? 0.0 : std::exp(-v / s);
}

LogConcaveFn::ActivePiece LogConcaveFn::active_piece(std::span<const double> x) const {
  ActivePiece out;
  const auto* p = piecewise();
  if (!p) return out;
  double best = -kInf, second = -kInf;
  for (std::size_t j = 0; j < p->pieces.size(); ++j) {
    const double v = dot(p->pieces[j].a, x) + p->pieces[j].b;
    if (v > best) {
      second = best;
      best = v;
      out.index = static_cast<int>(j);
    } else if (v > second) {
      second = v;
    }
  }
  out.value = best;
  out.gap = std::isinf(second) ? kInf : (best - second) / std::max(1.0, std::abs(best));
  out.ambiguous = out.gap <= kKinkTol;
  return out;
}

Vec LogConcaveFn::grad_pow(std::span<const double> x, double s) const {
  const double hp = eval_pow(x, s);
  if (hp <= 0.0) throw Error(ErrorKind::ZeroValue, "h vanishes at the query point");
  Vec g(static_cast<std::size_t>(n_), 0.0);
  if (const auto* p = piecewise()) {
    const auto act = active_piece(x);
    if (act.ambiguous) throw Error(ErrorKind::SubgradientAmbiguous, "query point sits on a kink of psi");
    const auto& a = p->pieces[act.index].a;
    for (int i = 0; i < n_; ++i) g[i] = -a[i] / s * hp;
    return g;
  }
  const auto& e = std::get<EllipsoidHeightPower>(form_);
  const SymMatrix ainv = inverse_sym(e.ellipsoid.mat.diag);
  Vec y(x.begin(), x.end());
  for (int i = 0; i < n_; ++i) y[i] -= e.ellipsoid.shift[i];
  const Vec z = ainv.apply(y);
  const Vec by = ainv.apply(z);
  const double q = dot(z, z);
  for (int i = 0; i < n_; ++i) g[i] = hp * (e.power / s) * (-by[i] / (1.0 - q));
  return g;
}

SymMatrix LogConcaveFn::hess_pow(std::span<const double> x, double s) const {
  const double hp = eval_pow(x, s);
  if (hp <= 0.0) throw Error(ErrorKind::ZeroValue, "h vanishes at the query point");
  if (const auto* p = piecewise()) {
    const auto act = active_piece(x);
    if (act.ambiguous) throw Error(ErrorKind::SubgradientAmbiguous, "query point sits on a kink of psi");
    SymMatrix hm = SymMatrix::outer(p->pieces[act.index].a);
    hm *= hp / (s * s);
    return hm;
  }
  const auto& e = std::get<EllipsoidHeightPower>(form_);
  const SymMatrix ainv = inverse_sym(e.ellipsoid.mat.diag);
  Vec y(x.begin(), x.end());
  for (int i = 0; i < n_; ++i) y[i] -= e.ellipsoid.shift[i];
  const Vec z = ainv.apply(y);
  const Vec by = ainv.apply(z);
  const double q = dot(z, z);
  const double c = e.power / s;
  // ln H = c ln hbar + const, grad ln hbar = -B y/(1-q) with B = A^-2, and
  // hess ln hbar = -B/(1-q) - 2 (By)(By)^T/(1-q)^2.
  SymMatrix binv2(n_);
  for (int i = 0; i < n_; ++i) {
    Vec ei(static_cast<std::size_t>(n_), 0.0);
    ei[i] = 1.0;
    const Vec col = ainv.apply(ainv.apply(ei));
    for (int j = i; j < n_; ++j) binv2.set(i, j, col[j]);
  }
  SymMatrix out(n_);
  for (int i = 0; i < n_; ++i) {
    for (int j = i; j < n_; ++j) {
      const double gi = -c * by[i] / (1.0 - q);
      const double gj = -c * by[j] / (1.0 - q);
      const double hl = -c * (binv2(i, j) / (1.0 - q) + by[i] * by[j] / ((1.0 - q) * (1.0 - q)) * 2.0);
      out.set(i, j, hp * (gi * gj + hl));
    }
  }
  return out;
}

bool LogConcaveFn::is_coercive() const {
  if (const auto* p = piecewise()) return p->domain_radius.has_value() || pieces_positively_span(p->pieces, n_);
  return true;
}

double LogConcaveFn::sup_pow(double s) const {
  if (const auto* e = std::get_if<EllipsoidHeightPower>(&form_))
    return std::pow(e->scale * std::pow(e->ellipsoid.mat.corner, e->power), 1.0 / s);

  const auto& p = *piecewise();
  double best_psi = kInf;
  if (!p.domain_radius) {
    // Vertex enumeration: the minimum of a coercive max-affine function sits
    // where n+1 pieces tie.
    const int m = static_cast<int>(p.pieces.size());
    const int k = std::min(m, n_ + 1);
    for_each_subset(m, k, [&](const std::vector<int>& idx) {
      if (k < n_ + 1) return;
      std::vector<double> mat(static_cast<std::size_t>(k) * k, 0.0), rhs(static_cast<std::size_t>(k));
      for (int r = 0; r < k; ++r) {
        const auto& pc = p.pieces[idx[r]];
        for (int c = 0; c < n_; ++c) mat[static_cast<std::size_t>(r) * k + c] = pc.a[c];
        mat[static_cast<std::size_t>(r) * k + n_] = -1.0;
        rhs[r] = -pc.b;
      }
      std::vector<double> sol;
      if (!solve_dense(mat, rhs, k, sol)) return;
      std::span<const double> xs(sol.data(), static_cast<std::size_t>(n_));
      best_psi = std::min(best_psi, max_affine(p.pieces, xs));
    });
  }
  if (std::isinf(best_psi)) {
    // Bounded domain: grid scan plus shrinking coordinate search.
    const double rad = p.domain_radius.value_or(1.0);
    const int per_axis = n_ == 1 ? 401 : (n_ == 2 ? 81 : 25);
    Vec x(static_cast<std::size_t>(n_));
    Vec best_x(static_cast<std::size_t>(n_), 0.0);
    best_psi = psi(best_x);
    std::vector<int> counter(static_cast<std::size_t>(n_), 0);
    while (true) {
      for (int i = 0; i < n_; ++i) x[i] = -rad + 2.0 * rad * counter[i] / (per_axis - 1);
      const double v = psi(x);
      if (v < best_psi) {
        best_psi = v;
        best_x = x;
      }
      int d = 0;
      while (d < n_ && ++counter[d] == per_axis) counter[d++] = 0;
      if (d == n_) break;
    }
    double step = 2.0 * rad / (per_axis - 1);
    while (step > 1e-12) {
      bool improved = false;
      for (int i = 0; i < n_; ++i) {
        for (double sg : {1.0, -1.0}) {
          Vec t = best_x;
          t[i] += sg * step;
          const double v = psi(t);
          if (v < best_psi) {
            best_psi = v;
            best_x = t;
            improved = true;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
  }
  return std::exp(-best_psi / s);
}

double LogConcaveFn::support_radius() const {
  if (const auto* e = std::get_if<EllipsoidHeightPower>(&form_)) {
    const auto eig = eigen_sym(e->ellipsoid.mat.diag);
    return norm2(e->ellipsoid.shift) + eig.values.back();
  }
  const auto& p = *piecewise();
  if (p.domain_radius) return *p.domain_radius;
  // psi(x) >= c |x| + min_j b_j with c = min over directions of max_j <a_j, d>.
  const int total = n_ == 1 ? 2 : (n_ == 2 ? 3600 : 6000);
  double c = kInf;
  for (int k = 0; k < total; ++k) {
    const Vec d = dir_from_index(n_, k, total);
    double best = -kInf;
    for (const auto& pc : p.pieces) best = std::max(best, dot(pc.a, d));
    c = std::min(c, best);
  }
  c *= 0.9;
  if (!(c > 0.0)) return kInf;
  double min_b = kInf, max_b = -kInf;
  for (const auto& pc : p.pieces) {
    min_b = std::min(min_b, pc.b);
    max_b = std::max(max_b, pc.b);
  }
  return (40.0 + max_b - min_b) / c;
}

LogConcaveFn::IntegralEstimate LogConcaveFn::integral() const {
  const double rad = support_radius();
  // Composite tensor Gauss-Legendre: panels x nodes per axis.
  auto tensor = [&](int panels, int nodes) {
    const auto& rule = quad::gauss_legendre(nodes);
    const int per_axis = panels * nodes;
    const double hw = rad / panels;
    std::vector<double> xs(static_cast<std::size_t>(per_axis)), ws(xs.size());
    for (int p = 0; p < panels; ++p) {
      const double c = -rad + (2 * p + 1) * hw;
      for (int k = 0; k < nodes; ++k) {
        xs[p * nodes + k] = c + hw * rule.nodes[k];
        ws[p * nodes + k] = hw * rule.weights[k];
      }
    }
    std::vector<int> counter(static_cast<std::size_t>(n_), 0);
    Vec x(static_cast<std::size_t>(n_));
    double acc = 0.0;
    while (true) {
      double w = 1.0;
      for (int i = 0; i < n_; ++i) {
        x[i] = xs[counter[i]];
        w *= ws[counter[i]];
      }
      acc += w * eval(x);
      int d = 0;
      while (d < n_ && ++counter[d] == per_axis) counter[d++] = 0;
      if (d == n_) break;
    }
    return acc;
  };
  IntegralEstimate est;
  if (n_ == 1) {
    est.coarse = tensor(64, 8);
    est.value = tensor(256, 8);
  } else if (n_ == 2) {
    est.coarse = tensor(16, 4);
    est.value = tensor(32, 4);
  } else {
    est.coarse = tensor(8, 4);
    est.value = tensor(16, 4);
  }
  return est;
}

void LogConcaveFn::check_proper() const {
  if (!is_coercive())
    throw Error(ErrorKind::NotProper,
                "psi is not coercive: the affine slopes must positively span R^n or a domain radius must be set");
  const auto est = integral();
  if (!(est.value > 0.0) || !std::isfinite(est.value))
    throw Error(ErrorKind::NotProper, "integral of h is not finite and positive");
}

// ---------------------------------------------------------------------------

double eval_h(const LogConcaveFn& h, std::span<const double> x) { return h.eval(x); }

Vec grad_h_pow(const LogConcaveFn& h, std::span<const double> x, double s) { return h.grad_pow(x, s); }

double height_fn(const EPoint& e, std::span<const double> x) {
  const int n = e.n();
  if (static_cast<int>(x.size()) != n) throw Error(ErrorKind::DimensionMismatch, "height_fn point");
  const SymMatrix ainv = inverse_sym(e.mat.diag);
  Vec y(x.begin(), x.end());
  for (int i = 0; i < n; ++i) y[i] -= e.shift[i];
  const Vec z = ainv.apply(y);
  const double q = dot(z, z);
  if (q >= 1.0) return 0.0;
  return e.mat.corner * std::sqrt(1.0 - q);
}

bool s_lifting_contains(const LogConcaveFn& h, const SLiftingPoint& p, double s) {
  return std::abs(p.xi) <= h.eval_pow(p.x, s) + 1e-12;
}

double s_volume_unit_ball(int n, double s) {
  if (n < 1) throw Error(ErrorKind::InvalidInput, "dimension must be positive");
  // Polar coordinates, rho = sin(theta): |S^{n-1}| * int sin^{n-1} cos^{s+1}.
  const double sphere = 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
  quad::AdaptiveOptions opts;
  opts.abs_tol = 1e-15;
  opts.rel_tol = 1e-13;
  opts.initial_panels = 8;
  const auto r = quad::adaptive(
      [&](double t) { return std::pow(std::sin(t), n - 1) * std::pow(std::cos(t), s + 1.0); }, 0.0,
      0.5 * std::numbers::pi, opts);
  // For n = 1 the "sphere" S^0 is two points.
  return sphere * r.value;
}

double s_volume_ellipsoid(const EPoint& e, double s) {
  if (!is_spd(e.mat.diag) || !(e.mat.corner > 0.0))
    throw Error(ErrorKind::SingularA, "ellipsoid needs SPD A and alpha > 0");
  return s_volume_unit_ball(e.n(), s) * std::pow(e.mat.corner, s) * e.mat.diag.det();
}

}  // namespace fjohn
