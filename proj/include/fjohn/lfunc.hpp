#pragma once

// The r-family of functionals
//   L_r(A (+) alpha, v) = (1/eps) int int f_r(alpha y / H(Ax + v)) g_r(...) dy dx,
// eps = 1 - r, H = h^(1/s), its recentred form I_r, the measures mu_r and
// the r -> 1 sweep diagnostics.

#include <optional>
#include <string>
#include <vector>

#include "fjohn/blockmat.hpp"
#include "fjohn/ifunc.hpp"
#include "fjohn/logconcave.hpp"
#include "fjohn/profiles.hpp"

namespace fjohn {

struct QuadratureSpec {
  int x_nodes_per_axis = 16;   // initial panels of the outer adaptive rule
  int t_nodes = 3;             // Gauss nodes per smooth piece of the inner integral
  double domain_radius = 0.0;  // 0: derived from sup h^(1/s) and r
  double tol = 1e-6;           // outer target: relative (n = 1: absolute once the value exceeds 1)
};

/// Smallest admissible x-radius: sqrt(1 + 2 (1 - r) k_g sup h^(2/s)), k_g the
/// last knot of g. An explicit radius below it throws InvalidInput.
double lr_domain_radius(const LogConcaveFn& h, double s, const ProfilePair& pair, double r,
                        const QuadratureSpec& quad = {});

/// p = (A (+) alpha, v) with A SPD and alpha > 0. Returns +inf when
/// h(Ax + v) vanishes on a set that matters. Throws SingularA, BadR.
double L_r_eval(const LogConcaveFn& h, double s, const ProfilePair& pair, double r, const EPoint& p,
                const QuadratureSpec& quad = {});
/// Gradient of L_r in the ambient coordinates (A (+) alpha, v), by
/// differentiating under the integral.
EPoint L_r_grad(const LogConcaveFn& h, double s, const ProfilePair& pair, double r, const EPoint& p,
                const QuadratureSpec& quad = {});

/// I_r(M (+) beta, w) over (Id + eps M) (+) (1 + eps beta), shift eps w,
/// integrated in the recentred variables. Throws NotInBr when Id + eps M
/// is singular or 1 + eps beta <= 0.
double I_r_eval(const LogConcaveFn& h, double s, const ProfilePair& pair, double r, const EPoint& p,
                const QuadratureSpec& quad = {});

/// The explicit constant 2 (sup h^(1/s))^(n+1) vol(B^n) int_{-1}^0 f that
/// bounds L_r(Id, 0) for every r.
double L_r_identity_bound(const LogConcaveFn& h, double s, const ProfilePair& pair);

/// (exp(eps Sigma) (+) exp(-eps tr Sigma / s), eps omega) from the rescaled
/// coordinates c = (Sigma in sym_basis, omega); s_det is 1 by construction.
EPoint lr_point_from_rescaled(int n, double s, double r, std::span<const double> c);

struct LrMinimizerOptions {
  double grad_tol = 1e-7;  // on the rescaled objective eps^(-n/2) L_r
  int max_iter = 500;
  double pattern_step = 0.05;
  double pattern_min_step = 1e-3;
  int pattern_max_iter = 200;
};

struct LrMinimum {
  double r = 0.0;
  EPoint point;          // (A_r (+) alpha_r, v_r)
  Vec rescaled_coords;   // (Sigma, omega)
  double value = 0.0;    // L_r at the point
  double scaled_value = 0.0;
  double grad_norm = 0.0;  // rescaled gradient
  double lambda = 0.0;     // tr(G (A (+) alpha)) / (n + s)
  double s_det = 1.0;
  int iterations = 0;
  bool converged = false;
};

/// Pattern search followed by BFGS on the rescaled objective; `start` is a
/// rescaled-coordinate warm start (origin when null). Never throws for
/// optimisation failures (see `converged`).
LrMinimum minimize_L_r(const LogConcaveFn& h, double s, const ProfilePair& pair, double r,
                       const QuadratureSpec& quad = {}, const LrMinimizerOptions& opts = {},
                       const Vec* start = nullptr);

/// C^1 plateau: 1 on the ball |x - c| <= radius, cos^2 taper to 0 over the
/// next `taper`.
struct TestBump {
  std::string label;
  Vec center;
  double radius = 0.0;
  double taper = 0.05;
  double operator()(std::span<const double> x) const;
};

/// int delta dmu_r, mu_r the measure attached to (A (+) alpha, v).
double mu_r_integrate(const LogConcaveFn& h, double s, const ProfilePair& pair, double r, const EPoint& minimizer,
                      const TestBump& delta, const QuadratureSpec& quad = {});

/// The r -> 1 limit for a finite contact set: the band around each contact
/// point u integrates out to kappa_u G_n(.) with
/// kappa_u = det(Q_u / (2 hbar(u)))^(-1/2), Q_u the Hessian of h^(1/s) - hbar.
struct LimitReference {
  DiscreteMeasure nu;   // sum kappa_u delta_u
  FProfile profile;     // G_n
  MinimizerResult minimum;
  DiscreteMeasure mu;   // limit of eps^(-n/2) mu_r
};
LimitReference limit_reference(const LogConcaveFn& h, double s, const ProfilePair& pair,
                               const std::vector<Vec>& contacts);

struct SweepRecord {
  double r = 0.0;
  double dist_to_identity = 0.0;
  double normalized_s_trace = 0.0;
  double secant_to_M0 = 0.0;
  double secant_counting = 0.0;  // against the counting-measure I_nu minimiser
  Vec mu_r_test_integrals;       // eps^(-n/2) int delta_k dmu_r
  Vec mu_r_reference;            // int delta_k dmu
  double mu_r_max_rel_error = 0.0;
  double lambda = 0.0;
  double scaled_value = 0.0;
  double grad_norm = 0.0;
  double s_det = 1.0;
  bool converged = false;
  std::optional<std::string> error;
};

struct RSweepResult {
  std::vector<double> schedule;
  std::vector<EPoint> minimizers;
  std::vector<EPoint> rescaled;
  std::vector<double> lambda_r;
  std::vector<SweepRecord> records;
  std::vector<TestBump> bumps;
  EPoint reference;           // (M0 (+) beta0, w0) of the limit problem
  EPoint counting_reference;  // minimiser of I_nu for counting nu and F
  bool dist_decreasing = false;
  bool trace_decreasing = false;
  bool secant_decreasing = false;
  bool mu_error_decreasing = false;
};

/// Default bumps for a finite contact set in R^1: all of the band, the
/// positive half-line, and one bump per point of the positive half plus the
/// first point (capped at five).
std::vector<TestBump> default_bumps(const std::vector<Vec>& contacts);

/// Minimises L_r along the (strictly increasing) schedule with warm starts.
/// Failures at one r are recorded and the sweep continues.
RSweepResult r_sweep(const LogConcaveFn& h, double s, const ProfilePair& pair, const std::vector<Vec>& contacts,
                     const std::vector<double>& schedule, const QuadratureSpec& quad = {},
                     const LrMinimizerOptions& opts = {}, std::vector<TestBump> bumps = {});

/// r, dist_to_identity, normalized_s_trace, secant_to_M0, mu_k... columns.
std::string sweep_csv(const RSweepResult& res);

}  // namespace fjohn
