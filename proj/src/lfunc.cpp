#include "fjohn/lfunc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "fjohn/errors.hpp"
#include "fjohn/quadrature.hpp"

namespace fjohn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double check_r(double r) {
  if (!(r > 0.5 && r < 1.0)) throw Error(ErrorKind::BadR, "r must lie in (1/2, 1)");
  return 1.0 - r;
}

// h^(1/s) and its gradient without the kink checks of LogConcaveFn: on a
// tie any active piece is a valid one-sided gradient, which is all the
// quadrature needs.
class PowEval {
 public:
  PowEval(const LogConcaveFn& h, double s) : h_(&h), s_(s), n_(h.n()), pw_(h.piecewise()) {}

  double value(std::span<const double> x) const {
    if (!pw_) return h_->eval_pow(x, s_);
    if (outside(x)) return 0.0;
    double best = -kInf;
    for (const auto& p : pw_->pieces) best = std::max(best, affine(p, x));
    return std::exp(-best / s_);
  }

  double value_grad(std::span<const double> x, std::span<double> g) const {
    if (!pw_) {
      const double v = h_->eval_pow(x, s_);
      if (v > 0.0) {
        const Vec gv = h_->grad_pow(x, s_);
        std::copy(gv.begin(), gv.end(), g.begin());
      } else {
        std::fill(g.begin(), g.end(), 0.0);
      }
      return v;
    }
    std::fill(g.begin(), g.end(), 0.0);
    if (outside(x)) return 0.0;
    double best = -kInf;
    const AffinePiece* arg = nullptr;
    for (const auto& p : pw_->pieces) {
      const double v = affine(p, x);
      if (v > best) {
        best = v;
        arg = &p;
      }
    }
    const double v = std::exp(-best / s_);
    for (int i = 0; i < n_; ++i) g[i] = -v * arg->a[i] / s_;
    return v;
  }

  // Points of [lo, hi] where h^(1/s) may kink (n = 1 only).
  std::vector<double> kinks_1d() const {
    std::vector<double> out;
    if (!pw_ || n_ != 1) return out;
    const auto& ps = pw_->pieces;
    for (std::size_t i = 0; i < ps.size(); ++i)
      for (std::size_t j = i + 1; j < ps.size(); ++j)
        if (ps[i].a[0] != ps[j].a[0]) out.push_back((ps[j].b - ps[i].b) / (ps[i].a[0] - ps[j].a[0]));
    if (pw_->domain_radius) {
      out.push_back(-*pw_->domain_radius);
      out.push_back(*pw_->domain_radius);
    }
    return out;
  }

 private:
  static double affine(const AffinePiece& p, std::span<const double> x) {
    double v = p.b;
    for (std::size_t i = 0; i < x.size(); ++i) v += p.a[i] * x[i];
    return v;
  }
  bool outside(std::span<const double> x) const {
    return pw_->domain_radius && dot(x, x) > *pw_->domain_radius * *pw_->domain_radius;
  }

  const LogConcaveFn* h_;
  double s_;
  int n_;
  const PiecewiseLogAffine* pw_;
};

// The inner y-integral
//   int f((cf y - 1)/eps) g((cg y^2 + dg)/eps) y^m dy      (f' with `prime`)
// over y >= 0. f and g are piecewise linear, so split at the pre-images of
// their knots the integrand is a polynomial of degree <= 3 + m and an
// n-point Gauss rule with 2n - 1 >= 3 + m is exact.
class Band {
 public:
  Band(const ProfilePair& pair, double eps, int nodes)
      : f_(pair.f), g_(pair.g), eps_(eps), rule_(quad::gauss_legendre(std::max(nodes, 3))) {
    if (g_.values().back() != 0.0 || g_.right_slope() != 0.0)
      throw Error(ErrorKind::InvalidInput, "g must vanish beyond its last knot");
    f_zero_left_ = f_.values().front() == 0.0 && f_.left_slope() == 0.0;
  }

  double eps() const noexcept { return eps_; }

  /// y_hi^2 for the g factor; <= 0 means the band is empty at this x.
  double top_sq(double cg, double dg) const { return (eps_ * g_.knots().back() - dg) / cg; }

  double integrate(double cf, double cg, double dg, int m, bool prime) const {
    const double top2 = top_sq(cg, dg);
    if (!(top2 > 0.0)) return 0.0;
    const double hi = std::sqrt(top2);
    double lo = 0.0;
    if (f_zero_left_) lo = std::max(0.0, (1.0 + eps_ * f_.knots().front()) / cf);
    if (!(hi > lo)) return 0.0;

    double cuts[32];
    int nc = 0;
    cuts[nc++] = lo;
    for (double k : f_.knots()) {
      const double y = (1.0 + eps_ * k) / cf;
      if (y > lo && y < hi && nc < 30) cuts[nc++] = y;
    }
    for (double k : g_.knots()) {
      const double v = (eps_ * k - dg) / cg;
      if (v > 0.0) {
        const double y = std::sqrt(v);
        if (y > lo && y < hi && nc < 30) cuts[nc++] = y;
      }
    }
    cuts[nc++] = hi;
    std::sort(cuts, cuts + nc);

    double acc = 0.0;
    for (int i = 0; i + 1 < nc; ++i) {
      const double a = cuts[i], b = cuts[i + 1];
      if (!(b > a)) continue;
      const double c = 0.5 * (a + b), h = 0.5 * (b - a);
      double part = 0.0;
      for (std::size_t q = 0; q < rule_.nodes.size(); ++q) {
        const double y = c + h * rule_.nodes[q];
        const double t = (cf * y - 1.0) / eps_;
        const double fv = prime ? f_.deriv(t) : f_(t);
        if (fv == 0.0) continue;
        const double gv = g_((cg * y * y + dg) / eps_);
        part += rule_.weights[q] * fv * gv * (m == 1 ? y : 1.0);
      }
      acc += part * h;
    }
    return acc;
  }

 private:
  const PiecewiseLinear& f_;
  const PiecewiseLinear& g_;
  double eps_;
  const quad::Rule& rule_;
  bool f_zero_left_ = false;
};

struct InfiniteValue {};

// The nested rule for n >= 2 is far costlier per level, so it aims at the
// declared tolerance directly instead of a twentieth of it.
quad::AdaptiveOptions outer_options(const QuadratureSpec& q, int n) {
  quad::AdaptiveOptions o;
  o.rel_tol = (n == 1 ? 0.05 : 0.5) * q.tol;
  // relative below |value| = 1 and absolute above; the nested rule for
  // n >= 2 stays purely relative (the cap makes it far more expensive)
  if (n == 1) o.abs_cap = o.rel_tol;
  o.abs_tol = 1e-15;
  o.initial_panels = std::max(1, q.x_nodes_per_axis);
  o.max_intervals = n == 1 ? 40000 : 4000;
  return o;
}

// Integrates a vector-valued integrand over the cube [-R, R]^n; in one
// dimension the given kinks are used as breakpoints.
Vec integrate_outer(const quad::VecBoxIntegrand& fn, std::size_t dim, int n, double R, const QuadratureSpec& q,
                    std::vector<double> kinks) {
  const auto opts = outer_options(q, n);
  quad::AdaptiveVecResult res;
  try {
    if (n == 1) {
      Vec x(1);
      res = quad::adaptive_vec(
          [&](double t, std::span<double> out) {
            x[0] = t;
            fn(x, out);
          },
          dim, -R, R, opts, kinks);
    } else {
      const Vec lo(static_cast<std::size_t>(n), -R), hi(static_cast<std::size_t>(n), R);
      res = quad::adaptive_box_vec(fn, dim, lo, hi, opts);
    }
  } catch (const InfiniteValue&) {
    Vec inf(dim, kInf);
    return inf;
  }
  return res.value;
}

struct LrParts {
  SymMatrix a;
  double alpha;
  Vec v;
};

LrParts split_point(const EPoint& p, int n) {
  if (p.n() != n || static_cast<int>(p.shift.size()) != n) throw Error(ErrorKind::DimensionMismatch, "L_r point");
  if (!(p.mat.corner > 0.0)) throw Error(ErrorKind::NonPositiveCorner, "alpha must be positive");
  if (!is_spd(p.mat.diag)) throw Error(ErrorKind::SingularA, "A must be symmetric positive definite");
  return {p.mat.diag, p.mat.corner, p.shift};
}

// value (and gradient) of L_r; out layout: [L, dA (n*n row-major), dalpha, dv]
Vec lr_integrate(const LogConcaveFn& h, double s, const ProfilePair& pair, double r, const EPoint& p,
                 const QuadratureSpec& q, bool with_grad) {
  const double eps = check_r(r);
  const int n = h.n();
  const LrParts P = split_point(p, n);
  const PowEval H(h, s);
  const Band band(pair, eps, q.t_nodes);
  const double R = lr_domain_radius(h, s, pair, r, q);
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  const std::size_t dim = with_grad ? 1 + nn + 1 + n : 1;

  Vec z(static_cast<std::size_t>(n)), gz(static_cast<std::size_t>(n));
  auto fn = [&](std::span<const double> x, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    const double hx = H.value(x);
    if (!(hx > 0.0)) return;
    const double cg = 1.0 / (2.0 * hx * hx);
    const double dg = (dot(x, x) - 1.0) * cg;
    if (!(band.top_sq(cg, dg) > 0.0)) return;
    const Vec ax = P.a.apply(x);
    for (int i = 0; i < n; ++i) z[i] = ax[i] + P.v[i];
    const double hz = with_grad ? H.value_grad(z, gz) : H.value(z);
    if (!(hz > 0.0)) throw InfiniteValue{};
    const double cf = P.alpha / hz;
    out[0] = band.integrate(cf, cg, dg, 0, false) / eps;
    if (!with_grad) return;
    const double J = band.integrate(cf, cg, dg, 1, true) / (eps * eps);
    if (J == 0.0) return;
    const double c = -P.alpha * J / (hz * hz);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) out[1 + static_cast<std::size_t>(i) * n + j] = c * gz[i] * x[j];
      out[1 + nn + 1 + i] = c * gz[i];
    }
    out[1 + nn] = J / hz;
  };

  std::vector<double> kinks;
  if (n == 1) {
    const auto ks = H.kinks_1d();
    kinks = ks;
    for (double k : ks) kinks.push_back((k - P.v[0]) / P.a(0, 0));
  }
  return integrate_outer(fn, dim, n, R, q, kinks);
}

}  // namespace

double lr_domain_radius(const LogConcaveFn& h, double s, const ProfilePair& pair, double r,
                        const QuadratureSpec& quad) {
  const double eps = check_r(r);
  const double kg = std::max(0.0, pair.g.knots().back());
  const double sup = h.sup_pow(s);
  double need = std::sqrt(1.0 + 2.0 * eps * kg * sup * sup);
  if (const auto* pw = h.piecewise(); pw && pw->domain_radius) need = std::min(need, *pw->domain_radius);
  if (quad.domain_radius > 0.0) {
    if (quad.domain_radius < need - 1e-12)
      throw Error(ErrorKind::InvalidInput, "quadrature radius smaller than the support of the integrand");
    return quad.domain_radius;
  }
  return need;
}

double L_r_eval(const LogConcaveFn& h, double s, const ProfilePair& pair, double r, const EPoint& p,
                const QuadratureSpec& quad) {
  return lr_integrate(h, s, pair, r, p, quad, false)[0];
}

EPoint L_r_grad(const LogConcaveFn& h, double s, const ProfilePair& pair, double r, const EPoint& p,
                const QuadratureSpec& quad) {
  const int n = h.n();
  const Vec out = lr_integrate(h, s, pair, r, p, quad, true);
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  EPoint g = EPoint::zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double gij = out[1 + static_cast<std::size_t>(i) * n + j];
      const double gji = out[1 + static_cast<std::size_t>(j) * n + i];
      g.mat.diag.set(i, j, 0.5 * (gij + gji));
    }
  g.mat.corner = out[1 + nn];
  for (int i = 0; i < n; ++i) g.shift[i] = out[2 + nn + i];
  return g;
}

double I_r_eval(const LogConcaveFn& h, double s, const ProfilePair& pair, double r, const EPoint& p,
                const QuadratureSpec& quad) {
  const double eps = check_r(r);
  const int n = h.n();
  if (p.n() != n || static_cast<int>(p.shift.size()) != n) throw Error(ErrorKind::DimensionMismatch, "I_r point");
  SymMatrix at = SymMatrix::identity(n);
  at += eps * p.mat.diag;
  const double alpha = 1.0 + eps * p.mat.corner;
  if (!(alpha > 0.0)) throw Error(ErrorKind::NotInBr, "1 + (1 - r) beta must be positive");
  const auto eig = eigen_sym(at);
  const double spectral_radius = std::max(std::abs(eig.values.front()), std::abs(eig.values.back()));
  double smallest = spectral_radius;
  for (double l : eig.values) smallest = std::min(smallest, std::abs(l));
  if (!(smallest > 1e-12 * std::max(1.0, spectral_radius))) throw Error(ErrorKind::NotInBr, "Id + (1 - r) M is singular");
  const SymMatrix ainv = inverse_sym(at);
  Vec vt = p.shift;
  for (auto& c : vt) c *= eps;

  const PowEval H(h, s);
  const Band band(pair, eps, quad.t_nodes);
  const double R0 = lr_domain_radius(h, s, pair, r, quad);
  const double R = spectral_radius * R0 + norm2(vt);
  const double pref = std::pow(alpha, s - 1.0) / eps;

  Vec y(static_cast<std::size_t>(n));
  auto fn = [&](std::span<const double> x, std::span<double> out) {
    out[0] = 0.0;
    for (int i = 0; i < n; ++i) y[i] = x[i] - vt[i];
    const Vec z = ainv.apply(y);
    const double hz = H.value(z);
    if (!(hz > 0.0)) return;
    const double cg = 1.0 / (2.0 * alpha * alpha * hz * hz);
    const double dg = (dot(z, z) - 1.0) / (2.0 * hz * hz);
    if (!(band.top_sq(cg, dg) > 0.0)) return;
    const double hx = H.value(x);
    if (!(hx > 0.0)) throw InfiniteValue{};
    out[0] = pref * band.integrate(1.0 / hx, cg, dg, 0, false);
  };
  std::vector<double> kinks;
  if (n == 1) {
    const auto ks = H.kinks_1d();
    kinks = ks;
    for (double k : ks) kinks.push_back(at(0, 0) * k + vt[0]);
  }
  return integrate_outer(fn, 1, n, R, quad, kinks)[0];
}

double L_r_identity_bound(const LogConcaveFn& h, double s, const ProfilePair& pair) {
  const int n = h.n();
  const double sup = h.sup_pow(s);
  const double ball = std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
  const auto fint = quad::piecewise_gauss([&](double t) { return pair.f(t); }, -1.0, 0.0, pair.f.knots(), 3);
  return 2.0 * std::pow(sup, n + 1) * ball * fint;
}

EPoint lr_point_from_rescaled(int n, double s, double r, std::span<const double> c) {
  const double eps = check_r(r);
  const auto sb = sym_basis(n);
  if (c.size() != sb.size() + static_cast<std::size_t>(n))
    throw Error(ErrorKind::DimensionMismatch, "rescaled coordinates");
  SymMatrix S(n);
  for (std::size_t k = 0; k < sb.size(); ++k) S += (eps * c[k]) * sb[k];
  EPoint p = EPoint::zero(n);
  p.mat.diag = expm_sym(S);
  p.mat.corner = std::exp(-S.trace() / s);
  for (int i = 0; i < n; ++i) p.shift[i] = eps * c[sb.size() + i];
  return p;
}

namespace {

// Rescaled objective eps^(-n/2) L_r over (Sigma, omega) with its gradient.
struct RescaledObjective {
  const LogConcaveFn& h;
  double s;
  const ProfilePair& pair;
  double r;
  QuadratureSpec quad;
  int n;
  std::vector<SymMatrix> sb;

  double eps() const { return 1.0 - r; }
  double scale() const { return std::pow(eps(), -0.5 * n); }

  double value(const Vec& c) const {
    return scale() * L_r_eval(h, s, pair, r, lr_point_from_rescaled(n, s, r, c), quad);
  }

  double value_grad(const Vec& c, Vec& g, EPoint* ambient = nullptr) const {
    const EPoint p = lr_point_from_rescaled(n, s, r, c);
    const Vec raw = lr_integrate(h, s, pair, r, p, quad, true);
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    g.assign(c.size(), 0.0);
    if (!std::isfinite(raw[0])) return kInf;
    // Daleckii-Krein: the adjoint of dA at S = eps Sigma.
    SymMatrix S(n);
    for (std::size_t k = 0; k < sb.size(); ++k) S += (eps() * c[k]) * sb[k];
    const auto es = eigen_sym(S);
    SymMatrix GA(n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        GA.set(i, j, 0.5 * (raw[1 + static_cast<std::size_t>(i) * n + j] + raw[1 + static_cast<std::size_t>(j) * n + i]));
    std::vector<double> tmp(nn, 0.0), inner(nn, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) acc += es.vec(a, i) * GA(a, b) * es.vec(b, j);
        const double li = es.values[i], lj = es.values[j];
        const double d = li - lj;
        const double gamma = std::abs(d) < 1e-12 ? std::exp(0.5 * (li + lj)) : std::exp(lj) * std::expm1(d) / d;
        inner[static_cast<std::size_t>(i) * n + j] = gamma * acc;
      }
    SymMatrix GS(n);
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) acc += es.vec(a, i) * inner[static_cast<std::size_t>(i) * n + j] * es.vec(b, j);
        GS.set(a, b, acc);
      }
    const double galpha = raw[1 + nn];
    const double f = scale() * eps();
    for (std::size_t k = 0; k < sb.size(); ++k)
      g[k] = f * (GS.frobenius_inner(sb[k]) - galpha * p.mat.corner * sb[k].trace() / s);
    for (int i = 0; i < n; ++i) g[sb.size() + i] = f * raw[2 + nn + i];
    if (ambient) {
      *ambient = EPoint::zero(n);
      ambient->mat.diag = GA;
      ambient->mat.corner = galpha;
      for (int i = 0; i < n; ++i) ambient->shift[i] = raw[2 + nn + i];
    }
    return scale() * raw[0];
  }
};

double vnorm(const Vec& v) { return std::sqrt(dot(v, v)); }

}  // namespace

LrMinimum minimize_L_r(const LogConcaveFn& h, double s, const ProfilePair& pair, double r,
                       const QuadratureSpec& quad, const LrMinimizerOptions& opts, const Vec* start) {
  check_r(r);
  const int n = h.n();
  RescaledObjective obj{h, s, pair, r, quad, n, sym_basis(n)};
  const std::size_t dim = obj.sb.size() + static_cast<std::size_t>(n);
  Vec c = start ? *start : Vec(dim, 0.0);
  if (c.size() != dim) throw Error(ErrorKind::DimensionMismatch, "warm start");

  LrMinimum out;
  out.r = r;

  // Hooke-Jeeves pattern search.
  double fc = obj.value(c);
  double step = opts.pattern_step;
  int it = 0;
  auto explore = [&](Vec base, double fb) {
    for (std::size_t k = 0; k < dim; ++k) {
      for (double sign : {1.0, -1.0}) {
        Vec t = base;
        t[k] += sign * step;
        const double ft = obj.value(t);
        if (ft < fb) {
          base = std::move(t);
          fb = ft;
          break;
        }
      }
    }
    return std::make_pair(base, fb);
  };
  while (step >= opts.pattern_min_step && it < opts.pattern_max_iter) {
    ++it;
    auto [x1, f1] = explore(c, fc);
    if (f1 < fc) {
      // pattern move along x1 - c
      Vec pat(dim);
      for (std::size_t k = 0; k < dim; ++k) pat[k] = 2.0 * x1[k] - c[k];
      c = x1;
      fc = f1;
      auto [x2, f2] = explore(pat, obj.value(pat));
      if (f2 < fc) {
        c = x2;
        fc = f2;
      }
    } else {
      step *= 0.5;
    }
  }

  // BFGS polish with the analytic gradient.
  Vec g;
  fc = obj.value_grad(c, g);
  std::vector<double> Hinv(dim * dim, 0.0);
  auto reset = [&] {
    std::fill(Hinv.begin(), Hinv.end(), 0.0);
    for (std::size_t k = 0; k < dim; ++k) Hinv[k * dim + k] = 1.0;
  };
  reset();
  bool fresh = true;
  int bfgs = 0;
  for (; bfgs < opts.max_iter && vnorm(g) > opts.grad_tol; ++bfgs) {
    Vec d(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) d[i] -= Hinv[i * dim + j] * g[j];
    double slope = dot(d, g);
    if (!(slope < 0.0)) {
      reset();
      d = g;
      for (auto& v : d) v = -v;
      slope = -dot(g, g);
      fresh = true;
    }
    double t = 1.0;
    Vec ct(dim), gt;
    double ft = kInf;
    bool ok = false;
    for (int ls = 0; ls < 50; ++ls, t *= 0.5) {
      for (std::size_t k = 0; k < dim; ++k) ct[k] = c[k] + t * d[k];
      ft = obj.value_grad(ct, gt);
      if (ft <= fc + 1e-4 * t * slope) {
        ok = true;
        break;
      }
      // value differences below quadrature noise: trust the gradient
      if (std::abs(ft - fc) <= 1e-12 * std::max(1.0, std::abs(fc)) && vnorm(gt) < vnorm(g)) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      if (fresh) break;
      reset();
      fresh = true;
      --bfgs;
      continue;
    }
    Vec sk(dim), yk(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      sk[k] = ct[k] - c[k];
      yk[k] = gt[k] - g[k];
    }
    const double sy = dot(sk, yk);
    if (sy > 1e-16) {
      std::vector<double> hy(dim, 0.0);
      for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) hy[i] += Hinv[i * dim + j] * yk[j];
      const double yhy = dot(yk, hy);
      for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j)
          Hinv[i * dim + j] +=
              ((sy + yhy) * sk[i] * sk[j]) / (sy * sy) - (hy[i] * sk[j] + sk[i] * hy[j]) / sy;
      fresh = false;
    }
    c = ct;
    fc = ft;
    g = gt;
  }

  EPoint G;
  fc = obj.value_grad(c, g, &G);
  out.rescaled_coords = c;
  out.point = lr_point_from_rescaled(n, s, r, c);
  out.scaled_value = fc;
  out.value = fc / obj.scale();
  out.grad_norm = vnorm(g);
  out.iterations = it + bfgs;
  out.converged = std::isfinite(fc) && out.grad_norm <= opts.grad_tol;
  out.s_det = s_det(out.point.mat, s);
  out.lambda = (G.mat.diag.frobenius_inner(out.point.mat.diag) + G.mat.corner * out.point.mat.corner) / (n + s);
  return out;
}

double TestBump::operator()(std::span<const double> x) const {
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - center[i]) * (x[i] - center[i]);
  const double d = std::sqrt(d2);
  if (d <= radius) return 1.0;
  if (d >= radius + taper) return 0.0;
  const double c = std::cos(0.5 * std::numbers::pi * (d - radius) / taper);
  return c * c;
}

double mu_r_integrate(const LogConcaveFn& h, double s, const ProfilePair& pair, double r, const EPoint& minimizer,
                      const TestBump& delta, const QuadratureSpec& quad) {
  const double eps = check_r(r);
  const int n = h.n();
  const LrParts P = split_point(minimizer, n);
  if (static_cast<int>(delta.center.size()) != n) throw Error(ErrorKind::DimensionMismatch, "test bump");
  const SymMatrix ainv = inverse_sym(P.a);
  const PowEval H(h, s);
  const Band band(pair, eps, quad.t_nodes);
  const auto eig = eigen_sym(P.a);
  const double R = eig.values.back() * lr_domain_radius(h, s, pair, r, quad) + norm2(P.v);
  const double pref = std::pow(P.alpha, s - 1.0) / eps;

  Vec y(static_cast<std::size_t>(n));
  auto fn = [&](std::span<const double> x, std::span<double> out) {
    out[0] = 0.0;
    const double dv = delta(x);
    if (dv == 0.0) return;
    for (int i = 0; i < n; ++i) y[i] = x[i] - P.v[i];
    const Vec z = ainv.apply(y);
    const double hz = H.value(z);
    if (!(hz > 0.0)) return;
    const double cg = 1.0 / (2.0 * P.alpha * P.alpha * hz * hz);
    const double dg = (dot(z, z) - 1.0) / (2.0 * hz * hz);
    if (!(band.top_sq(cg, dg) > 0.0)) return;
    const double hx = H.value(x);
    if (!(hx > 0.0)) throw InfiniteValue{};
    out[0] = dv * pref * band.integrate(1.0 / hx, cg, dg, 1, true) / (hx * hx * hx);
  };
  std::vector<double> kinks;
  if (n == 1) {
    const auto ks = H.kinks_1d();
    kinks = ks;
    for (double k : ks) kinks.push_back(P.a(0, 0) * k + P.v[0]);
    for (double e : {delta.radius, delta.radius + delta.taper}) {
      kinks.push_back(delta.center[0] - e);
      kinks.push_back(delta.center[0] + e);
    }
  }
  return integrate_outer(fn, 1, n, R, quad, kinks)[0];
}

LimitReference limit_reference(const LogConcaveFn& h, double s, const ProfilePair& pair,
                               const std::vector<Vec>& contacts) {
  const int n = h.n();
  if (contacts.empty()) throw Error(ErrorKind::InvalidInput, "no contact points");
  LimitReference ref;
  for (const auto& u : contacts) {
    const double hb = hemisphere(u);
    if (!(hb > 0.0)) throw Error(ErrorKind::PointOnBoundary, "contact point on the unit sphere");
    SymMatrix q = h.hess_pow(u, s);
    // minus the Hessian of sqrt(1 - |x|^2)
    SymMatrix uu = SymMatrix::outer(u);
    uu *= 1.0 / (hb * hb * hb);
    q += uu;
    q += (1.0 / hb) * SymMatrix::identity(n);
    q *= 1.0 / (2.0 * hb);
    const double d = q.det();
    if (!(d > 0.0)) throw Error(ErrorKind::InvalidInput, "contact point is not isolated (degenerate band)");
    ref.nu.atoms.push_back({u, 1.0 / std::sqrt(d)});
  }
  ref.profile = smeared_profile(make_F(pair), n);
  const INuProblem prob(h, s, ref.nu, ref.profile);
  ref.minimum = minimize_I_report(prob);
  if (!ref.minimum.converged)
    throw Error(ErrorKind::NotConverged, std::string("limit functional: ") +
                                             std::string(to_string(ref.minimum.status)));
  ref.mu = extract_measure(ref.minimum, prob);
  return ref;
}

std::vector<TestBump> default_bumps(const std::vector<Vec>& contacts) {
  std::vector<TestBump> out;
  if (contacts.empty()) return out;
  const std::size_t n = contacts.front().size();
  out.push_back({"all", Vec(n, 0.0), 1.5, 0.05});
  if (n == 1) {
    std::vector<double> xs;
    for (const auto& u : contacts) xs.push_back(u[0]);
    std::sort(xs.begin(), xs.end());
    const double taper = 0.02;
    // Voronoi cells of the contact points, shrunk by the taper
    auto cell = [&](std::size_t i) {
      const double lo = i == 0 ? -1.5 : 0.5 * (xs[i - 1] + xs[i]);
      const double hi = i + 1 == xs.size() ? 1.5 : 0.5 * (xs[i] + xs[i + 1]);
      char buf[32];
      std::snprintf(buf, sizeof buf, "cell%zu", i);
      return TestBump{buf, Vec{0.5 * (lo + hi)}, 0.5 * (hi - lo) - taper, taper};
    };
    std::vector<std::size_t> order;
    for (std::size_t i = xs.size(); i-- > 0;) order.push_back(i);
    if (xs.size() > 1) {
      // positive half-line
      out.push_back({"positive", Vec{0.75}, 0.75 - taper, taper});
    }
    for (std::size_t i : order) {
      if (out.size() >= 5) break;
      out.push_back(cell(i));
    }
  } else {
    double gap = kInf;
    for (std::size_t i = 0; i < contacts.size(); ++i)
      for (std::size_t j = i + 1; j < contacts.size(); ++j) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < n; ++k) d2 += (contacts[i][k] - contacts[j][k]) * (contacts[i][k] - contacts[j][k]);
        gap = std::min(gap, std::sqrt(d2));
      }
    for (std::size_t i = 0; i < contacts.size() && out.size() < 5; ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "point%zu", i);
      out.push_back({buf, contacts[i], 0.25 * gap, 0.2 * gap});
    }
  }
  return out;
}

namespace {

bool strictly_decreasing(const std::vector<SweepRecord>& recs, double SweepRecord::*field) {
  if (recs.size() < 2) return false;
  for (std::size_t i = 0; i < recs.size(); ++i)
    if (recs[i].error) return false;
  for (std::size_t i = 1; i < recs.size(); ++i)
    if (!(recs[i].*field < recs[i - 1].*field)) return false;
  return true;
}

}  // namespace

RSweepResult r_sweep(const LogConcaveFn& h, double s, const ProfilePair& pair, const std::vector<Vec>& contacts,
                     const std::vector<double>& schedule, const QuadratureSpec& quad, const LrMinimizerOptions& opts,
                     std::vector<TestBump> bumps) {
  if (schedule.empty()) throw Error(ErrorKind::BadR, "empty r schedule");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    check_r(schedule[i]);
    if (i > 0 && !(schedule[i] > schedule[i - 1])) throw Error(ErrorKind::BadR, "r schedule must increase strictly");
  }
  const int n = h.n();
  RSweepResult res;
  res.schedule = schedule;
  res.bumps = bumps.empty() ? default_bumps(contacts) : std::move(bumps);

  const LimitReference ref = limit_reference(h, s, pair, contacts);
  res.reference = ref.minimum.point;
  {
    const INuProblem counting(h, s, DiscreteMeasure::counting(contacts), make_F(pair));
    const auto cm = minimize_I_report(counting);
    res.counting_reference = cm.converged ? cm.point : EPoint::zero(n);
  }
  Vec ref_integrals;
  for (const auto& b : res.bumps) {
    double acc = 0.0;
    for (const auto& a : ref.mu.atoms) acc += a.m * b(a.x);
    ref_integrals.push_back(acc);
  }

  const auto sb = sym_basis(n);
  Vec start(sb.size() + static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < sb.size(); ++k) start[k] = sb[k].frobenius_inner(res.reference.mat.diag);
  for (int i = 0; i < n; ++i) start[sb.size() + i] = res.reference.shift[i];

  for (double r : schedule) {
    SweepRecord rec;
    rec.r = r;
    const double eps = 1.0 - r;
    try {
      const LrMinimum m = minimize_L_r(h, s, pair, r, quad, opts, &start);
      start = m.rescaled_coords;
      EPoint resc = m.point - EPoint::identity(n);
      resc *= 1.0 / eps;
      res.minimizers.push_back(m.point);
      res.rescaled.push_back(resc);
      res.lambda_r.push_back(m.lambda);
      rec.dist_to_identity = norm(m.point - EPoint::identity(n));
      const double fn = resc.mat.frobenius_norm();
      rec.normalized_s_trace = fn > 0.0 ? std::abs(s_trace(resc.mat, s)) / fn : 0.0;
      rec.secant_to_M0 = norm(resc - res.reference);
      rec.secant_counting = norm(resc - res.counting_reference);
      rec.lambda = m.lambda;
      rec.scaled_value = m.scaled_value;
      rec.grad_norm = m.grad_norm;
      rec.s_det = m.s_det;
      rec.converged = m.converged;
      const double scale = std::pow(eps, -0.5 * n);
      for (std::size_t k = 0; k < res.bumps.size(); ++k) {
        const double v = scale * mu_r_integrate(h, s, pair, r, m.point, res.bumps[k], quad);
        rec.mu_r_test_integrals.push_back(v);
        rec.mu_r_reference.push_back(ref_integrals[k]);
        const double err = ref_integrals[k] != 0.0 ? std::abs(v - ref_integrals[k]) / std::abs(ref_integrals[k])
                                                   : std::abs(v);
        rec.mu_r_max_rel_error = std::max(rec.mu_r_max_rel_error, err);
      }
      if (!m.converged) rec.error = "not converged (gradient norm " + std::to_string(m.grad_norm) + ")";
    } catch (const Error& e) {
      rec.error = e.what();
    }
    res.records.push_back(std::move(rec));
  }
  res.dist_decreasing = strictly_decreasing(res.records, &SweepRecord::dist_to_identity);
  res.trace_decreasing = strictly_decreasing(res.records, &SweepRecord::normalized_s_trace);
  res.secant_decreasing = strictly_decreasing(res.records, &SweepRecord::secant_to_M0);
  res.mu_error_decreasing = strictly_decreasing(res.records, &SweepRecord::mu_r_max_rel_error);
  return res;
}

std::string sweep_csv(const RSweepResult& res) {
  std::string out = "r,dist_to_identity,normalized_s_trace,secant_to_M0,secant_counting,lambda";
  for (const auto& b : res.bumps) out += ",mu_" + b.label;
  out += ",mu_max_rel_error\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.12g", v);
    out += buf;
  };
  for (const auto& rec : res.records) {
    std::snprintf(buf, sizeof buf, "%.12g", rec.r);
    out += buf;
    if (rec.error && rec.mu_r_test_integrals.empty()) {
      out += std::string(5 + res.bumps.size() + 1, ',');
      out += '\n';
      continue;
    }
    put(rec.dist_to_identity);
    put(rec.normalized_s_trace);
    put(rec.secant_to_M0);
    put(rec.secant_counting);
    put(rec.lambda);
    for (double v : rec.mu_r_test_integrals) put(v);
    put(rec.mu_r_max_rel_error);
    out += '\n';
  }
  return out;
}

}  // namespace fjohn
