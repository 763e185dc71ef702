#include "fjohn/oracle.hpp"

#include <cmath>
#include <limits>

namespace fjohn::oracle {

GridResult grid_minimize(const std::function<double(const EPoint&)>& objective, const std::vector<EPoint>& basis,
                         GridSpec grid) {
  const std::size_t dim = basis.size();
  if (grid.points_per_axis % 2 == 0) ++grid.points_per_axis;
  if (grid.center.size() != dim) grid.center.assign(dim, 0.0);

  auto build = [&](const Vec& c) {
    EPoint p = 0.0 * basis.front();
    for (std::size_t k = 0; k < dim; ++k) p += c[k] * basis[k];
    return p;
  };

  GridResult best;
  best.value = std::numeric_limits<double>::infinity();
  Vec centre = grid.center;
  double hw = grid.half_width;
  for (int level = 0; level <= grid.refinements; ++level) {
    const int m = grid.points_per_axis;
    std::vector<int> idx(dim, 0);
    Vec c(dim);
    Vec level_best = centre;
    double level_val = std::numeric_limits<double>::infinity();
    while (true) {
      for (std::size_t k = 0; k < dim; ++k) c[k] = centre[k] - hw + 2.0 * hw * idx[k] / (m - 1);
      const double v = objective(build(c));
      if (v < level_val) {
        level_val = v;
        level_best = c;
      }
      std::size_t d = 0;
      while (d < dim && ++idx[d] == m) idx[d++] = 0;
      if (d == dim) break;
    }
    if (level_val < best.value) {
      best.value = level_val;
      best.coords = level_best;
    }
    centre = best.coords;
    hw /= 10.0;
  }
  best.point = build(best.coords);
  return best;
}

double convolve_numeric(const std::function<double(double)>& f, const std::function<double(double)>& g_bar, double x,
                        double step) {
  const double lo = -1.0, hi = x + 1.0;
  if (!(hi > lo)) return 0.0;
  const long cells = std::max(1L, static_cast<long>(std::ceil((hi - lo) / step)));
  const double h = (hi - lo) / cells;
  auto integrand = [&](double t) { return f(t) * g_bar(x - t); };
  double acc = 0.5 * (integrand(lo) + integrand(hi));
  for (long k = 1; k < cells; ++k) acc += integrand(lo + k * h);
  return acc * h;
}

double counting_functional(const std::vector<Vec>& atoms, const Vec& masses, const Vec& h_pow,
                           const std::function<double(double)>& F, const EPoint& p) {
  const std::size_t n = p.shift.size();
  const auto m = p.mat.diag.data();  // row-major n x n
  double total = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const Vec& x = atoms[i];
    double q = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      double row = p.shift[a];
      for (std::size_t b = 0; b < n; ++b) row += m[a * n + b] * x[b];
      q += x[a] * row;
    }
    const double hi = h_pow[i];
    total += masses[i] * hi * F(q / (hi * hi) + p.mat.corner);
  }
  return total;
}

double dense_quadrature_L_r(const DenseLrInput& in) {
  const int n = in.n;
  const double eps = 1.0 - in.r;
  const double hx = 2.0 * in.x_radius / in.x_nodes;
  const double hy = in.y_max / in.y_nodes;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  std::vector<double> x(static_cast<std::size_t>(n)), z(static_cast<std::size_t>(n));
  double total = 0.0;
  while (true) {
    double r2 = 0.0;
    for (int i = 0; i < n; ++i) {
      x[i] = -in.x_radius + (idx[i] + 0.5) * hx;
      r2 += x[i] * x[i];
    }
    for (int a = 0; a < n; ++a) {
      z[a] = in.v[a];
      for (int b = 0; b < n; ++b) z[a] += in.a_rows[static_cast<std::size_t>(a) * n + b] * x[b];
    }
    const double hxv = in.h_pow(x);
    const double hz = in.h_pow(z);
    if (hxv > 0.0) {
      double col = 0.0;
      for (int k = 0; k < in.y_nodes; ++k) {
        const double y = (k + 0.5) * hy;
        const double gv = in.g(((r2 + y * y - 1.0) / (2.0 * hxv * hxv)) / eps);
        if (gv == 0.0) continue;
        double fv;
        if (hz > 0.0) {
          fv = in.f((in.alpha * y / hz - 1.0) / eps);
        } else {
          fv = std::numeric_limits<double>::infinity();
        }
        col += fv * gv;
      }
      total += col * hy;
    }
    int d = 0;
    while (d < n && ++idx[d] == in.x_nodes) idx[d++] = 0;
    if (d == n) break;
  }
  double vol = 1.0;
  for (int i = 0; i < n; ++i) vol *= hx;
  return total * vol / eps;
}

}  // namespace fjohn::oracle
