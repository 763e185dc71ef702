#pragma once

// Contact sets with the unit-ball John s-function, tangent fixtures in John
// s-position, and checks of the decomposition-of-the-identity conditions.

#include <optional>
#include <string>
#include <vector>

#include "fjohn/blockmat.hpp"
#include "fjohn/logconcave.hpp"

namespace fjohn {

struct ContactSet {
  std::vector<Vec> points;
  double gap_tol = 1e-9;
  Vec h_values;  // h(u_i)^(1/s)
  /// The contact set is not finite (h coincides with the hemisphere on an
  /// open set); `points` then holds the detection grid.
  bool continuum = false;
};

struct DecompositionReport {
  double residual_a = 0.0;  // max_i |h(u_i)^(1/s) - sqrt(1 - |u_i|^2)|
  double residual_b = 0.0;  // ||sum c_i u_i u_i^T - Id||_F
  double residual_c = 0.0;  // |sum c_i h(u_i)^(2/s) - s|
  double residual_d = 0.0;  // |sum c_i u_i|
  bool pass_a = false, pass_b = false, pass_c = false, pass_d = false;
  bool all_pass() const { return pass_a && pass_b && pass_c && pass_d; }
};

struct Fixture {
  std::string name;
  double s = 1.0;
  LogConcaveFn h;
  ContactSet contacts;
  Vec weights;  // construction weights c_i (empty when unknown)
  DecompositionReport report;
};

/// psi = max_i of the tangents of -(s/2) ln(1 - |x|^2) at the u_i; throws
/// PointOnBoundary when some |u_i| >= 1.
LogConcaveFn make_tangent_instance(int n, const std::vector<Vec>& points, double s);

/// Grid scan of phi = h^(1/s) - hbar over the unit ball, local refinement and
/// de-duplication. Throws NotJohnPosition when phi < -gap_tol somewhere.
ContactSet detect_contacts(const LogConcaveFn& h, double s, int grid_per_axis = 201, double gap_tol = 1e-9);

DecompositionReport verify_decomposition(const std::vector<Vec>& points, const Vec& weights, const LogConcaveFn& h,
                                         double s, double tol = 1e-8);

/// Points +-rho e_j, rho^2 = n/(n+s), weights (n+s)/(2n).
Fixture cross_fixture(int n, double s);
/// Points +-rho1 e_j and +-rho2 e_j with weights (c1, c2) solving the
/// per-axis isotropy and the s-trace conditions. Throws InfeasibleWeights.
Fixture two_level_cross_fixture(int n, double s, double rho1_sq, double rho2_sq);
/// Planar variant with +-rho1 on the axes and +-rho2 on the diagonals; unlike
/// the two-level cross it is coercive for the functional on the plane.
Fixture star_fixture(double s, double rho1_sq, double rho2_sq);
/// Tangent instance at the given points; weights left empty.
Fixture tangent_fixture(int n, double s, const std::vector<Vec>& points);

}  // namespace fjohn
