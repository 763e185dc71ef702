#pragma once

// Profile functions f, g, the r-scaling and the convolution F = f * g(-.).

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fjohn {

/// Continuous piecewise-linear function: linear interpolation between knots,
/// affine extension beyond the first/last knot with the given slopes.
class PiecewiseLinear {
 public:
  PiecewiseLinear() = default;
  PiecewiseLinear(std::vector<double> knots, std::vector<double> values, double left_slope, double right_slope);

  double operator()(double x) const;
  /// Right-hand derivative.
  double deriv(double x) const;
  const std::vector<double>& knots() const noexcept { return knots_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double left_slope() const noexcept { return left_slope_; }
  double right_slope() const noexcept { return right_slope_; }

 private:
  std::vector<double> knots_, values_;
  double left_slope_ = 0.0, right_slope_ = 0.0;
};

/// F and F' behind a value-semantics interface.
struct FProfile {
  std::string name;
  std::function<double(double)> eval;
  std::function<double(double)> deriv;
  /// Points where F'' may jump (kept as quadrature breakpoints).
  std::vector<double> kinks;
};

struct ProfilePair {
  std::string name;
  PiecewiseLinear f;
  PiecewiseLinear g;
  bool has_closed_form = false;
};

ProfilePair canonical_pair();
/// "custom" pair from knot lists. f continues with slope `f_right_slope`
/// after its last knot and is 0 before -1; g is 1 before its first knot and
/// 0 after its last.
ProfilePair custom_pair(std::vector<double> f_knots, std::vector<double> f_values, double f_right_slope,
                        std::vector<double> g_knots, std::vector<double> g_values);

struct PropertyCheck {
  std::string name;
  bool pass = true;
  std::optional<double> counterexample;
};

struct ProfileReport {
  std::vector<PropertyCheck> checks;
  bool all_pass() const;
};

/// Sampled checks of f1..f4 and g1..g5 on [-3, 3].
ProfileReport validate_profiles(const ProfilePair& p, int samples = 601);

/// gamma((t - 1)/(1 - r)); throws BadR outside (1/2, 1).
double r_scale(const std::function<double(double)>& gamma, double r, double t);

/// F(x) = int f(tau) g(tau - x) dtau, supported in tau in [-1, x + 1].
double F_eval(const ProfilePair& p, double x);
double F_prime(const ProfilePair& p, double x);
FProfile make_F(const ProfilePair& p);

/// Checks of the F-class: F >= 0, non-decreasing, convex, strictly convex on
/// [0, inf), F'(0) > 0 (sampled on [-3, 3]).
ProfileReport validate_F(const FProfile& F, int samples = 601);

/// G_n(a) = int_{R^n} F(a - |z|^2) dz, the profile that appears when the
/// band around an isolated contact point is integrated out as r -> 1.
FProfile smeared_profile(const FProfile& F, int n);

}  // namespace fjohn
