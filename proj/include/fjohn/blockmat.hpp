#pragma once

// Block matrices M (+) beta, the pairs (M (+) beta, w) and the small dense
// symmetric linear algebra they need. Problem sizes are tiny (n <= 8), so
// everything is dense and allocation-light.

#include <cstddef>
#include <span>
#include <vector>

namespace fjohn {

using Vec = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

/// Dense symmetric n x n matrix. Both triangles are stored and kept equal;
/// `set` writes the mirrored entry too.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * n, 0.0) {}

  static SymMatrix identity(int n);
  static SymMatrix diagonal(std::span<const double> d);
  /// Rank-one u u^T.
  static SymMatrix outer(std::span<const double> u);
  /// Builds from row-major data; the upper triangle is authoritative.
  static SymMatrix from_rows(int n, std::span<const double> rows);

  int n() const noexcept { return n_; }
  double operator()(int i, int j) const { return a_[idx(i, j)]; }
  void set(int i, int j, double v) {
    a_[idx(i, j)] = v;
    a_[idx(j, i)] = v;
  }
  std::span<const double> data() const noexcept { return a_; }

  double trace() const;
  double frobenius_inner(const SymMatrix& other) const;
  double frobenius_norm() const;
  double max_asymmetry() const;

  /// Direct formulas for n <= 3, eigenvalue product otherwise.
  double det() const;
  Vec apply(std::span<const double> x) const;
  double quad_form(std::span<const double> x) const;

  SymMatrix& operator+=(const SymMatrix& o);
  SymMatrix& operator-=(const SymMatrix& o);
  SymMatrix& operator*=(double c);

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * n_ + j; }

  int n_ = 0;
  std::vector<double> a_;
};

SymMatrix operator+(SymMatrix a, const SymMatrix& b);
SymMatrix operator-(SymMatrix a, const SymMatrix& b);
SymMatrix operator*(double c, SymMatrix a);

/// Symmetric eigendecomposition A = V diag(values) V^T; `vectors` holds the
/// eigenvectors as columns, row-major n x n. Values are ascending.
struct SymEigen {
  Vec values;
  std::vector<double> vectors;
  int n = 0;
  double vec(int row, int col) const { return vectors[static_cast<std::size_t>(row) * n + col]; }
};

/// Cyclic Jacobi rotations; deterministic sweep order.
SymEigen eigen_sym(const SymMatrix& a);
double min_eigenvalue(const SymMatrix& a);
/// Smallest eigenvalue > 1e-10 * ||A||_F.
bool is_spd(const SymMatrix& a);
/// Rebuilds V diag(fn(values)) V^T.
SymMatrix spectral_apply(const SymEigen& e, double (*fn)(double));
SymMatrix expm_sym(const SymMatrix& s);
/// Throws SingularA when A is numerically singular.
SymMatrix inverse_sym(const SymMatrix& a);

/// (n+1) x (n+1) matrix M (+) beta with zero off-diagonal blocks.
struct BlockMat {
  SymMatrix diag;
  double corner = 0.0;

  BlockMat() = default;
  BlockMat(SymMatrix m, double beta) : diag(std::move(m)), corner(beta) {}

  int n() const noexcept { return diag.n(); }
  static BlockMat zero(int n) { return {SymMatrix(n), 0.0}; }
  /// Id (+) c; Id (+) 1 is the unit ball's block.
  static BlockMat id_plus(int n, double c) { return {SymMatrix::identity(n), c}; }

  double frobenius_inner(const BlockMat& o) const;
  double frobenius_norm() const;

  BlockMat& operator+=(const BlockMat& o);
  BlockMat& operator-=(const BlockMat& o);
  BlockMat& operator*=(double c);
};

BlockMat operator+(BlockMat a, const BlockMat& b);
BlockMat operator-(BlockMat a, const BlockMat& b);
BlockMat operator*(double c, BlockMat a);

/// Element (A (+) alpha, a) of the space of block pairs.
struct EPoint {
  BlockMat mat;
  Vec shift;

  EPoint() = default;
  EPoint(BlockMat m, Vec w) : mat(std::move(m)), shift(std::move(w)) {}

  int n() const noexcept { return mat.n(); }
  static EPoint zero(int n) { return {BlockMat::zero(n), Vec(static_cast<std::size_t>(n), 0.0)}; }
  static EPoint identity(int n) { return {BlockMat::id_plus(n, 1.0), Vec(static_cast<std::size_t>(n), 0.0)}; }

  EPoint& operator+=(const EPoint& o);
  EPoint& operator-=(const EPoint& o);
  EPoint& operator*=(double c);
};

EPoint operator+(EPoint a, const EPoint& b);
EPoint operator-(EPoint a, const EPoint& b);
EPoint operator*(double c, EPoint a);

/// beta^s det(M). Throws NonPositiveCorner for beta <= 0 with non-integer s.
double s_det(const BlockMat& b, double s);
/// s beta + tr(M).
double s_trace(const BlockMat& b, double s);
/// Frobenius product of the blocks plus the dot product of the shifts.
double inner(const EPoint& p, const EPoint& q);
double norm(const EPoint& p);
/// Orthogonal projection onto the kernel of the s-trace (shift untouched).
EPoint project_trace0(const EPoint& p, double s);
/// u u^T (+) gamma. Throws PointOutsideBall when |u| > 1.
BlockMat contact_tensor(std::span<const double> u, double gamma);

struct SDet1Point {
  SymMatrix a;
  double alpha = 1.0;
};
/// A = exp(S), alpha = exp(-tr S / s): always on the s-determinant-one manifold.
SDet1Point sdet1_param(const SymMatrix& s_mat, double s);
bool is_in_sE_plus(const EPoint& p, double s);

/// Orthonormal basis (w.r.t. `inner`) of the trace-zero subspace
/// {(M (+) beta, w) : s beta + tr M = 0}; dimension n(n+1)/2 + n.
std::vector<EPoint> trace0_basis(int n, double s);
/// Coordinates of p in an orthonormal basis (p assumed in its span).
Vec coordinates(const EPoint& p, const std::vector<EPoint>& basis);
EPoint from_coordinates(std::span<const double> c, const std::vector<EPoint>& basis);

/// Orthonormal basis of symmetric n x n matrices under the Frobenius product.
std::vector<SymMatrix> sym_basis(int n);

}  // namespace fjohn
