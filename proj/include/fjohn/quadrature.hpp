#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace fjohn::quad {

struct Rule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule (cached, thread-safe after first use).
const Rule& gauss_legendre(int n);

/// Fixed-rule integral of fn over [a, b].
double gauss(const std::function<double(double)>& fn, double a, double b, int nodes);

struct AdaptiveOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  /// Upper bound on the target regardless of |value| (large integrals are
  /// then held to an absolute accuracy).
  double abs_cap = std::numeric_limits<double>::infinity();
  int initial_panels = 16;
  int max_intervals = 20000;
};

struct AdaptiveResult {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
  bool converged = true;
};

/// Globally adaptive Gauss-Kronrod (7/15): bisects the panel with the largest
/// error estimate until the total estimate drops below
/// min(abs_cap, rel_tol * |value|), floored at max(abs_tol, 1e-13 |value|).
/// Starts from `initial_panels` equal panels plus any `breakpoints` inside
/// (a, b), so narrow features are not skipped.
AdaptiveResult adaptive(const std::function<double(double)>& fn, double a, double b,
                        const AdaptiveOptions& opts = {}, std::span<const double> breakpoints = {});

/// Nested adaptive integration over the box [lo, hi] (iterated 1-D rules).
AdaptiveResult adaptive_box(const std::function<double(std::span<const double>)>& fn,
                            std::span<const double> lo, std::span<const double> hi,
                            const AdaptiveOptions& opts = {});

struct AdaptiveVecResult {
  std::vector<double> value;
  double error = 0.0;
  int evaluations = 0;
  bool converged = true;
};

/// Vector-valued `adaptive`: all components share one subdivision, steered by
/// the summed component errors against the same target with max |value_k|.
/// fn(t, out) writes `dim` values.
using VecIntegrand = std::function<void(double, std::span<double>)>;
AdaptiveVecResult adaptive_vec(const VecIntegrand& fn, std::size_t dim, double a, double b,
                               const AdaptiveOptions& opts = {}, std::span<const double> breakpoints = {});

/// Nested `adaptive_vec` over a box.
using VecBoxIntegrand = std::function<void(std::span<const double>, std::span<double>)>;
AdaptiveVecResult adaptive_box_vec(const VecBoxIntegrand& fn, std::size_t dim, std::span<const double> lo,
                                   std::span<const double> hi, const AdaptiveOptions& opts = {});

/// Integral of a piecewise-smooth fn over [a, b] split at `cuts`, using an
/// n-point Gauss rule per piece. Exact for piecewise polynomials of degree
/// <= 2n-1 whose pieces are delimited by `cuts`.
double piecewise_gauss(const std::function<double(double)>& fn, double a, double b,
                       std::vector<double> cuts, int nodes);

}  // namespace fjohn::quad
