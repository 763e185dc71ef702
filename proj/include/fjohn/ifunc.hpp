#pragma once

// The functional I_nu(M (+) beta, w) = sum_i m_i H_i F(<x_i, M x_i + w>/H_i^2 + beta),
// H_i = h(x_i)^(1/s), over discrete measures nu supported on the contact set;
// its minimisation on the trace-zero subspace and the measure it produces.

#include <cstdint>
#include <string>
#include <vector>

#include "fjohn/blockmat.hpp"
#include "fjohn/logconcave.hpp"
#include "fjohn/profiles.hpp"

namespace fjohn {

struct Atom {
  Vec x;
  double m = 0.0;
};

struct DiscreteMeasure {
  std::vector<Atom> atoms;

  /// Positive masses, distinct points (gap 1e-9), consistent dimensions.
  void validate(int n) const;
  double total_mass() const;
  static DiscreteMeasure counting(const std::vector<Vec>& points);
};

/// Precomputed evaluation data for I_nu; cheap to copy.
class INuProblem {
 public:
  /// Throws ZeroValueAtom (h(x_i) = 0) and AtomOffContactSet when
  /// |H_i - sqrt(1 - |x_i|^2)| > contact_tol.
  INuProblem(const LogConcaveFn& h, double s, DiscreteMeasure nu, FProfile F, double contact_tol = 1e-8);

  int n() const noexcept { return n_; }
  double s() const noexcept { return s_; }
  const DiscreteMeasure& nu() const noexcept { return nu_; }
  const Vec& h_pow() const noexcept { return hp_; }
  const FProfile& profile() const noexcept { return F_; }

  /// <x_i, M x_i + w>/H_i^2 + beta.
  double arg(std::size_t i, const EPoint& p) const;
  double value(const EPoint& p) const;
  EPoint grad(const EPoint& p) const;
  /// lambda_b = (1/(n+s)) sum_i m_i F'(arg_i)/H_i.
  double lambda_trace(const EPoint& p) const;
  /// max over atoms of arg_i(d): the coercivity expression for direction d.
  double direction_max(const EPoint& d) const;

 private:
  int n_;
  double s_;
  DiscreteMeasure nu_;
  FProfile F_;
  Vec hp_;
};

double I_nu_eval(const LogConcaveFn& h, double s, const DiscreteMeasure& nu, const FProfile& F, const EPoint& p);
EPoint I_nu_grad(const LogConcaveFn& h, double s, const DiscreteMeasure& nu, const FProfile& F, const EPoint& p);

enum class MinimizerStatus { Converged, Flat, Diverging, NotConverged };
std::string_view to_string(MinimizerStatus s);

struct MinimizerOptions {
  double tol = 1e-10;
  int max_iter = 200000;
  double armijo_c = 1e-4;
  double shrink = 0.5;
  double initial_step = 1.0;
  double divergence_radius = 1e6;
};

struct MinimizerResult {
  EPoint point;
  double value = 0.0;
  double projected_grad_norm = 0.0;
  double lambda = 0.0;    // trace-contraction form
  double lambda_a = 0.0;  // gradient projected on (Id (+) s, 0)
  double lambda_b = 0.0;
  int iterations = 0;
  bool converged = false;
  MinimizerStatus status = MinimizerStatus::NotConverged;
  /// Directions along which I_nu does not increase (coercivity failures).
  std::vector<EPoint> flat_directions;
};

/// Projected gradient descent with Armijo backtracking, kept in the
/// trace-zero subspace. Never throws for optimisation failures; inspect
/// `status`.
MinimizerResult minimize_I_report(const INuProblem& prob, const MinimizerOptions& opts = {},
                                  const EPoint* start = nullptr);
/// Same, throwing DivergingIterates (flat or escaping) / NotConverged.
MinimizerResult minimize_I(const LogConcaveFn& h, double s, const DiscreteMeasure& nu, const FProfile& F,
                           const MinimizerOptions& opts = {});

/// Atoms (x_i, m_i F'(arg_i)/H_i) with zero weights dropped; throws
/// AllWeightsZero.
DiscreteMeasure extract_measure(const MinimizerResult& res, const INuProblem& prob);
DiscreteMeasure extract_measure(const MinimizerResult& res, const LogConcaveFn& h, double s, const DiscreteMeasure& nu,
                                const FProfile& F);

struct IsotropyReport {
  double lambda = 0.0;
  double residual_iso = 0.0;
  double residual_center = 0.0;
  bool nonneg = true;
  bool nonzero = false;
  bool pass = false;
};

/// Fits lambda in sum m_i (u_i u_i^T (+) (1 - |u_i|^2)) = lambda (Id (+) s).
IsotropyReport check_isotropy(const DiscreteMeasure& mu, double s, double tol = 1e-8);

struct WitnessDirection {
  std::string label;
  EPoint direction;
  double max_expr = 0.0;
};

struct CoercivityReport {
  bool pass = true;
  double margin = 0.0;  // min over tested directions of the max expression
  int directions_tested = 0;
  WitnessDirection worst;
  std::vector<WitnessDirection> failures;
};

/// Samples n_dirs unit directions of the trace-zero subspace (seeded) plus
/// the analytic candidates +-(Id (+) (-n/s), 0), +-w-axes and +-basis
/// vectors; a direction fails when its max expression is <= 1e-12.
CoercivityReport coercivity_witness(const INuProblem& prob, int n_dirs, std::uint64_t seed);

}  // namespace fjohn
