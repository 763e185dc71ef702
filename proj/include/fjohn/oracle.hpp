#pragma once

// Brute-force references. Nothing here calls into the modules it is used to
// check: evaluation paths, matrix arithmetic and quadrature are re-done by
// hand, slowly.

#include <functional>
#include <span>
#include <vector>

#include "fjohn/blockmat.hpp"

namespace fjohn::oracle {

struct GridSpec {
  Vec center;  // in basis coordinates
  double half_width = 4.0;
  int points_per_axis = 401;  // odd, so the centre is on the grid
  int refinements = 2;
};

struct GridResult {
  EPoint point;
  Vec coords;
  double value = 0.0;
};

/// Exhaustive evaluation on a tensor grid in basis coordinates; each
/// refinement re-centres on the best point and shrinks the half-width 10x.
GridResult grid_minimize(const std::function<double(const EPoint&)>& objective, const std::vector<EPoint>& basis,
                         GridSpec grid);

/// Trapezoid rule for f * g_bar at x over [-1, x + 1].
double convolve_numeric(const std::function<double(double)>& f, const std::function<double(double)>& g_bar, double x,
                        double step);

/// sum_i h_i F(<x_i, M x_i + w>/h_i^2 + beta), written out directly with
/// the plain-array data of `p` (h_i = h(x_i)^(1/s)).
double counting_functional(const std::vector<Vec>& atoms, const Vec& masses, const Vec& h_pow,
                           const std::function<double(double)>& F, const EPoint& p);

struct DenseLrInput {
  int n = 1;
  double r = 0.8;
  std::function<double(std::span<const double>)> h_pow;  // h^(1/s)
  std::function<double(double)> f, g;
  std::vector<double> a_rows;  // A, n x n row-major
  double alpha = 1.0;
  Vec v;
  double x_radius = 1.5;
  double y_max = 1.5;
  int x_nodes = 4000;  // per axis
  int y_nodes = 4000;
};

/// Raw midpoint rule on the (x, y) box for
/// (1/(1-r)) int int f_r(alpha y / h^(1/s)(Ax+v)) g_r((|x|^2+y^2-1)/(2 h^(2/s)(x)) + 1) dy dx.
double dense_quadrature_L_r(const DenseLrInput& in);

}  // namespace fjohn::oracle
