#include "fjohn/blockmat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "fjohn/errors.hpp"

namespace fjohn {

namespace {

void require_same_n(int a, int b, const char* what) {
  if (a != b) throw Error(ErrorKind::DimensionMismatch, what);
}

bool is_integer(double s) { return std::floor(s) == s; }

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_n(static_cast<int>(a.size()), static_cast<int>(b.size()), "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// ---------------------------------------------------------------------------
// SymMatrix

SymMatrix SymMatrix::identity(int n) {
  SymMatrix m(n);
  for (int i = 0; i < n; ++i) m.set(i, i, 1.0);
  return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> d) {
  SymMatrix m(static_cast<int>(d.size()));
  for (int i = 0; i < m.n(); ++i) m.set(i, i, d[i]);
  return m;
}

SymMatrix SymMatrix::outer(std::span<const double> u) {
  SymMatrix m(static_cast<int>(u.size()));
  for (int i = 0; i < m.n(); ++i)
    for (int j = i; j < m.n(); ++j) m.set(i, j, u[i] * u[j]);
  return m;
}

SymMatrix SymMatrix::from_rows(int n, std::span<const double> rows) {
  if (rows.size() != static_cast<std::size_t>(n) * n)
    throw Error(ErrorKind::DimensionMismatch, "SymMatrix::from_rows expects n*n entries");
  SymMatrix m(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) m.set(i, j, rows[static_cast<std::size_t>(i) * n + j]);
  return m;
}

double SymMatrix::trace() const {
  double t = 0.0;
  for (int i = 0; i < n_; ++i) t += (*this)(i, i);
  return t;
}

double SymMatrix::frobenius_inner(const SymMatrix& other) const {
  require_same_n(n_, other.n_, "frobenius_inner");
  double acc = 0.0;
  for (std::size_t k = 0; k < a_.size(); ++k) acc += a_[k] * other.a_[k];
  return acc;
}

double SymMatrix::frobenius_norm() const { return std::sqrt(frobenius_inner(*this)); }

double SymMatrix::max_asymmetry() const {
  double worst = 0.0;
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j) worst = std::max(worst, std::abs(a_[idx(i, j)] - a_[idx(j, i)]));
  return worst;
}

double SymMatrix::det() const {
  const auto& m = *this;
  switch (n_) {
    case 0:
      return 1.0;
    case 1:
      return m(0, 0);
    case 2:
      return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    case 3:
      return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
             m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
             m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    default: {
      const auto e = eigen_sym(m);
      return std::accumulate(e.values.begin(), e.values.end(), 1.0, std::multiplies<>());
    }
  }
}

Vec SymMatrix::apply(std::span<const double> x) const {
  require_same_n(n_, static_cast<int>(x.size()), "SymMatrix::apply");
  Vec y(static_cast<std::size_t>(n_), 0.0);
  for (int i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n_; ++j) acc += a_[idx(i, j)] * x[j];
    y[i] = acc;
  }
  return y;
}

double SymMatrix::quad_form(std::span<const double> x) const {
  const Vec y = apply(x);
  return dot(x, y);
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
  require_same_n(n_, o.n_, "SymMatrix +=");
  for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& o) {
  require_same_n(n_, o.n_, "SymMatrix -=");
  for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
  return *this;
}

SymMatrix& SymMatrix::operator*=(double c) {
  for (auto& v : a_) v *= c;
  return *this;
}

SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
SymMatrix operator*(double c, SymMatrix a) { return a *= c; }

// ---------------------------------------------------------------------------
// Eigen / spectral functions

SymEigen eigen_sym(const SymMatrix& a) {
  const int n = a.n();
  std::vector<double> m(a.data().begin(), a.data().end());
  std::vector<double> v(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i) * n + i] = 1.0;
  auto at = [n](std::vector<double>& x, int i, int j) -> double& {
    return x[static_cast<std::size_t>(i) * n + j];
  };

  const double scale = std::max(a.frobenius_norm(), 1e-300);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += at(m, p, q) * at(m, p, q);
    if (std::sqrt(off) <= 1e-16 * scale) break;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(m, p, q);
        if (apq == 0.0) continue;
        const double theta = (at(m, q, q) - at(m, p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (int k = 0; k < n; ++k) {
          const double mkp = at(m, k, p);
          const double mkq = at(m, k, q);
          at(m, k, p) = c * mkp - sn * mkq;
          at(m, k, q) = sn * mkp + c * mkq;
        }
        for (int k = 0; k < n; ++k) {
          const double mpk = at(m, p, k);
          const double mqk = at(m, q, k);
          at(m, p, k) = c * mpk - sn * mqk;
          at(m, q, k) = sn * mpk + c * mqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = at(v, k, p);
          const double vkq = at(v, k, q);
          at(v, k, p) = c * vkp - sn * vkq;
          at(v, k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return at(m, i, i) < at(m, j, j); });

  SymEigen out;
  out.n = n;
  out.values.resize(static_cast<std::size_t>(n));
  out.vectors.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int c = 0; c < n; ++c) {
    out.values[c] = at(m, order[c], order[c]);
    for (int r = 0; r < n; ++r) out.vectors[static_cast<std::size_t>(r) * n + c] = at(v, r, order[c]);
  }
  return out;
}

double min_eigenvalue(const SymMatrix& a) {
  if (a.n() == 1) return a(0, 0);
  return eigen_sym(a).values.front();
}

bool is_spd(const SymMatrix& a) {
  if (a.n() == 0) return true;
  return min_eigenvalue(a) > 1e-10 * a.frobenius_norm();
}

SymMatrix spectral_apply(const SymEigen& e, double (*fn)(double)) {
  const int n = e.n;
  SymMatrix out(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += e.vec(i, k) * fn(e.values[k]) * e.vec(j, k);
      out.set(i, j, acc);
    }
  }
  return out;
}

SymMatrix expm_sym(const SymMatrix& s) {
  return spectral_apply(eigen_sym(s), [](double x) { return std::exp(x); });
}

SymMatrix inverse_sym(const SymMatrix& a) {
  const auto e = eigen_sym(a);
  double big = 0.0;
  for (double v : e.values) big = std::max(big, std::abs(v));
  for (double v : e.values)
    if (std::abs(v) <= 1e-14 * big || big == 0.0) throw Error(ErrorKind::SingularA, "matrix is singular");
  return spectral_apply(e, [](double x) { return 1.0 / x; });
}

// ---------------------------------------------------------------------------
// BlockMat / EPoint

double BlockMat::frobenius_inner(const BlockMat& o) const {
  return diag.frobenius_inner(o.diag) + corner * o.corner;
}

double BlockMat::frobenius_norm() const { return std::sqrt(frobenius_inner(*this)); }

BlockMat& BlockMat::operator+=(const BlockMat& o) {
  diag += o.diag;
  corner += o.corner;
  return *this;
}

BlockMat& BlockMat::operator-=(const BlockMat& o) {
  diag -= o.diag;
  corner -= o.corner;
  return *this;
}

BlockMat& BlockMat::operator*=(double c) {
  diag *= c;
  corner *= c;
  return *this;
}

BlockMat operator+(BlockMat a, const BlockMat& b) { return a += b; }
BlockMat operator-(BlockMat a, const BlockMat& b) { return a -= b; }
BlockMat operator*(double c, BlockMat a) { return a *= c; }

EPoint& EPoint::operator+=(const EPoint& o) {
  require_same_n(n(), o.n(), "EPoint +=");
  mat += o.mat;
  for (std::size_t i = 0; i < shift.size(); ++i) shift[i] += o.shift[i];
  return *this;
}

EPoint& EPoint::operator-=(const EPoint& o) {
  require_same_n(n(), o.n(), "EPoint -=");
  mat -= o.mat;
  for (std::size_t i = 0; i < shift.size(); ++i) shift[i] -= o.shift[i];
  return *this;
}

EPoint& EPoint::operator*=(double c) {
  mat *= c;
  for (auto& v : shift) v *= c;
  return *this;
}

EPoint operator+(EPoint a, const EPoint& b) { return a += b; }
EPoint operator-(EPoint a, const EPoint& b) { return a -= b; }
EPoint operator*(double c, EPoint a) { return a *= c; }

// ---------------------------------------------------------------------------
// s-determinant, s-trace and friends

double s_det(const BlockMat& b, double s) {
  if (b.corner <= 0.0 && !is_integer(s))
    throw Error(ErrorKind::NonPositiveCorner, "s_det needs corner > 0 for non-integer s");
  return std::pow(b.corner, s) * b.diag.det();
}

double s_trace(const BlockMat& b, double s) { return s * b.corner + b.diag.trace(); }

double inner(const EPoint& p, const EPoint& q) {
  require_same_n(p.n(), q.n(), "inner");
  require_same_n(static_cast<int>(p.shift.size()), static_cast<int>(q.shift.size()), "inner shift");
  return p.mat.frobenius_inner(q.mat) + dot(p.shift, q.shift);
}

double norm(const EPoint& p) { return std::sqrt(inner(p, p)); }

EPoint project_trace0(const EPoint& p, double s) {
  const int n = p.n();
  const double coef = s_trace(p.mat, s) / (n + s * s);
  EPoint out = p;
  out.mat -= coef * BlockMat::id_plus(n, s);
  return out;
}

BlockMat contact_tensor(std::span<const double> u, double gamma) {
  if (dot(u, u) > 1.0 + 1e-15) throw Error(ErrorKind::PointOutsideBall, "contact_tensor needs |u| <= 1");
  return {SymMatrix::outer(u), gamma};
}

SDet1Point sdet1_param(const SymMatrix& s_mat, double s) {
  return {expm_sym(s_mat), std::exp(-s_mat.trace() / s)};
}

bool is_in_sE_plus(const EPoint& p, double s) {
  if (p.mat.corner <= 0.0) return false;
  if (!is_spd(p.mat.diag)) return false;
  return s_det(p.mat, s) >= 1.0 - 1e-12;
}

std::vector<SymMatrix> sym_basis(int n) {
  std::vector<SymMatrix> out;
  const double r = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    SymMatrix e(n);
    e.set(i, i, 1.0);
    out.push_back(std::move(e));
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      SymMatrix e(n);
      e.set(i, j, r);
      out.push_back(std::move(e));
    }
  }
  return out;
}

std::vector<EPoint> trace0_basis(int n, double s) {
  std::vector<EPoint> candidates;
  for (auto& e : sym_basis(n)) candidates.push_back({BlockMat(std::move(e), 0.0), Vec(static_cast<std::size_t>(n), 0.0)});
  candidates.push_back({BlockMat(SymMatrix(n), 1.0), Vec(static_cast<std::size_t>(n), 0.0)});
  for (int k = 0; k < n; ++k) {
    EPoint e = EPoint::zero(n);
    e.shift[k] = 1.0;
    candidates.push_back(std::move(e));
  }

  std::vector<EPoint> basis;
  for (auto& c : candidates) {
    EPoint v = project_trace0(c, s);
    for (const auto& b : basis) v -= inner(v, b) * b;
    const double nv = norm(v);
    if (nv < 1e-12) continue;
    v *= 1.0 / nv;
    basis.push_back(std::move(v));
  }
  return basis;
}

Vec coordinates(const EPoint& p, const std::vector<EPoint>& basis) {
  Vec c(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) c[i] = inner(p, basis[i]);
  return c;
}

EPoint from_coordinates(std::span<const double> c, const std::vector<EPoint>& basis) {
  if (basis.empty()) throw Error(ErrorKind::DimensionMismatch, "empty basis");
  if (c.size() != basis.size()) throw Error(ErrorKind::DimensionMismatch, "coordinate count");
  EPoint p = EPoint::zero(basis.front().n());
  for (std::size_t i = 0; i < c.size(); ++i) p += c[i] * basis[i];
  return p;
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonPositiveCorner: return "NonPositiveCorner";
    case ErrorKind::PointOutsideBall: return "PointOutsideBall";
    case ErrorKind::SingularA: return "SingularA";
    case ErrorKind::ZeroValue: return "ZeroValue";
    case ErrorKind::SubgradientAmbiguous: return "SubgradientAmbiguous";
    case ErrorKind::NotProper: return "NotProper";
    case ErrorKind::NotJohnPosition: return "NotJohnPosition";
    case ErrorKind::PointOnBoundary: return "PointOnBoundary";
    case ErrorKind::InfeasibleWeights: return "InfeasibleWeights";
    case ErrorKind::BadR: return "BadR";
    case ErrorKind::AtomOffContactSet: return "AtomOffContactSet";
    case ErrorKind::ZeroValueAtom: return "ZeroValueAtom";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::DivergingIterates: return "DivergingIterates";
    case ErrorKind::AllWeightsZero: return "AllWeightsZero";
    case ErrorKind::NotInBr: return "NotInBr";
    case ErrorKind::InvalidInput: return "InvalidInput";
  }
  return "Unknown";
}

}  // namespace fjohn
