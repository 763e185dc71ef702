#pragma once

// Proper log-concave functions h = exp(-psi) in the two forms the library
// works with: psi a finite max of affine pieces, or a power of an ellipsoid
// height function.

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "fjohn/blockmat.hpp"

namespace fjohn {

struct AffinePiece {
  Vec a;
  double b = 0.0;
};

/// psi(x) = max_j <a_j, x> + b_j on the ball of radius `domain_radius`
/// (everywhere when unset); psi = +inf outside.
struct PiecewiseLogAffine {
  std::vector<AffinePiece> pieces;
  std::optional<double> domain_radius;
};

/// h = scale * hbar_E^power.
struct EllipsoidHeightPower {
  EPoint ellipsoid;
  double power = 1.0;
  double scale = 1.0;
};

class LogConcaveFn {
 public:
  using Form = std::variant<PiecewiseLogAffine, EllipsoidHeightPower>;

  /// Validates dimensions and properness; throws NotProper / DimensionMismatch.
  LogConcaveFn(int n, Form form);

  static LogConcaveFn constant_one(int n, std::optional<double> domain_radius = std::nullopt);
  static LogConcaveFn unit_ball_power(int n, double power);

  int n() const noexcept { return n_; }
  const Form& form() const noexcept { return form_; }
  const PiecewiseLogAffine* piecewise() const { return std::get_if<PiecewiseLogAffine>(&form_); }

  /// +inf where h = 0.
  double psi(std::span<const double> x) const;
  double eval(std::span<const double> x) const;
  /// h(x)^(1/s).
  double eval_pow(std::span<const double> x, double s) const;

  struct ActivePiece {
    int index = -1;
    double value = 0.0;
    double gap = 0.0;  // relative gap to the runner-up piece
    bool ambiguous = false;
  };
  /// Only meaningful for the piecewise form inside the domain.
  ActivePiece active_piece(std::span<const double> x) const;

  /// grad of h^(1/s); throws ZeroValue where h = 0 and SubgradientAmbiguous
  /// when two affine pieces are within 1e-9 (relative) of the max.
  Vec grad_pow(std::span<const double> x, double s) const;
  /// Hessian of h^(1/s) where it is smooth (same failure modes as grad_pow).
  SymMatrix hess_pow(std::span<const double> x, double s) const;

  /// sup_x h(x)^(1/s).
  double sup_pow(double s) const;
  /// psi -> +inf at infinity (the piecewise form without a domain needs the
  /// a_j to positively span R^n).
  bool is_coercive() const;
  /// Radius of a ball outside of which h is negligible (or zero).
  double support_radius() const;
  /// integral of h over R^n by composite tensor Gauss-Legendre at two
  /// resolutions (the finer one is `value`).
  struct IntegralEstimate {
    double value = 0.0;
    double coarse = 0.0;
  };
  IntegralEstimate integral() const;

 private:
  void check_proper() const;

  int n_;
  Form form_;
};

struct SLiftingPoint {
  Vec x;
  double xi = 0.0;
};

double eval_h(const LogConcaveFn& h, std::span<const double> x);
Vec grad_h_pow(const LogConcaveFn& h, std::span<const double> x, double s);
/// hbar_E(x) = alpha sqrt(1 - |A^-1 (x - a)|^2) on A B^n + a, else 0.
double height_fn(const EPoint& e, std::span<const double> x);
bool s_lifting_contains(const LogConcaveFn& h, const SLiftingPoint& p, double s);
/// s-volume of the unit ball B^{n+1}: integral over B^n of (1-|x|^2)^(s/2).
double s_volume_unit_ball(int n, double s);
/// s_volume_unit_ball(n, s) * alpha^s * det(A).
double s_volume_ellipsoid(const EPoint& e, double s);
/// sqrt(1 - |x|^2) on the unit ball, 0 outside.
double hemisphere(std::span<const double> x);

}  // namespace fjohn
