#include "fjohn/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fjohn/errors.hpp"
#include "fjohn/quadrature.hpp"

namespace fjohn {

PiecewiseLinear::PiecewiseLinear(std::vector<double> knots, std::vector<double> values, double left_slope,
                                 double right_slope)
    : knots_(std::move(knots)), values_(std::move(values)), left_slope_(left_slope), right_slope_(right_slope) {
  if (knots_.empty() || knots_.size() != values_.size())
    throw Error(ErrorKind::InvalidInput, "piecewise-linear profile needs matching, non-empty knot/value lists");
  for (std::size_t i = 1; i < knots_.size(); ++i)
    if (!(knots_[i] > knots_[i - 1])) throw Error(ErrorKind::InvalidInput, "profile knots must be increasing");
}

double PiecewiseLinear::operator()(double x) const {
  if (x <= knots_.front()) return values_.front() + left_slope_ * (x - knots_.front());
  if (x >= knots_.back()) return values_.back() + right_slope_ * (x - knots_.back());
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - knots_.begin());
  const double t = (x - knots_[i - 1]) / (knots_[i] - knots_[i - 1]);
  return values_[i - 1] + t * (values_[i] - values_[i - 1]);
}

double PiecewiseLinear::deriv(double x) const {
  if (x < knots_.front()) return left_slope_;
  if (x >= knots_.back()) return right_slope_;
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - knots_.begin());
  return (values_[i] - values_[i - 1]) / (knots_[i] - knots_[i - 1]);
}

ProfilePair canonical_pair() {
  ProfilePair p;
  p.name = "canonical";
  p.f = PiecewiseLinear({-1.0}, {0.0}, 0.0, 1.0);
  p.g = PiecewiseLinear({-1.0, 1.0}, {1.0, 0.0}, 0.0, 0.0);
  p.has_closed_form = true;
  return p;
}

ProfilePair custom_pair(std::vector<double> f_knots, std::vector<double> f_values, double f_right_slope,
                        std::vector<double> g_knots, std::vector<double> g_values) {
  ProfilePair p;
  p.name = "custom";
  p.f = PiecewiseLinear(std::move(f_knots), std::move(f_values), 0.0, f_right_slope);
  p.g = PiecewiseLinear(std::move(g_knots), std::move(g_values), 0.0, 0.0);
  return p;
}

bool ProfileReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const PropertyCheck& c) { return c.pass; });
}

namespace {

std::vector<double> sample_grid(int samples) {
  samples = std::max(samples, 3);
  std::vector<double> xs(static_cast<std::size_t>(samples));
  for (int k = 0; k < samples; ++k) xs[k] = -3.0 + 6.0 * k / (samples - 1);
  return xs;
}

template <class Pred>
PropertyCheck first_failure(std::string name, const std::vector<double>& xs, Pred&& ok) {
  PropertyCheck c{std::move(name), true, std::nullopt};
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (!ok(k)) {
      c.pass = false;
      c.counterexample = xs[k];
      break;
    }
  }
  return c;
}

template <class Fn>
PropertyCheck lipschitz_check(std::string name, const std::vector<double>& xs, Fn&& fn) {
  return first_failure(std::move(name), xs, [&](std::size_t k) {
    if (k + 1 >= xs.size()) return true;
    const double q = std::abs(fn(xs[k + 1]) - fn(xs[k])) / (xs[k + 1] - xs[k]);
    return std::isfinite(q) && q < 1e8;
  });
}

template <class Fn>
PropertyCheck convex_check(std::string name, const std::vector<double>& xs, Fn&& fn, double margin) {
  return first_failure(std::move(name), xs, [&](std::size_t k) {
    for (std::size_t j : {2ul, 10ul, 50ul}) {
      if (k + j >= xs.size()) continue;
      const double a = xs[k], b = xs[k + j];
      if (fn(0.5 * (a + b)) > 0.5 * (fn(a) + fn(b)) - margin + 1e-12) return false;
    }
    return true;
  });
}

// Sums of knot pairs where the convolution's second derivative may jump.
std::vector<double> convolution_kinks(const ProfilePair& p) {
  std::vector<double> out;
  for (double a : p.f.knots())
    for (double b : p.g.knots()) out.push_back(a - b);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

template <class Integrand>
double knot_exact_integral(const ProfilePair& p, double x, Integrand&& fn) {
  const double lo = -1.0, hi = x + 1.0;
  if (!(hi > lo)) return 0.0;
  std::vector<double> cuts = p.f.knots();
  for (double k : p.g.knots()) cuts.push_back(k + x);
  // The integrand is a polynomial of degree <= 2 between cuts.
  return quad::piecewise_gauss(fn, lo, hi, std::move(cuts), 3);
}

}  // namespace

ProfileReport validate_profiles(const ProfilePair& p, int samples) {
  const auto xs = sample_grid(samples);
  const auto& f = p.f;
  const auto& g = p.g;
  ProfileReport rep;
  rep.checks.push_back(lipschitz_check("f1", xs, f));
  rep.checks.push_back(convex_check("f2", xs, f, 0.0));
  rep.checks.push_back(first_failure("f3", xs, [&](std::size_t k) { return xs[k] > -1.0 || std::abs(f(xs[k])) <= 1e-14; }));
  rep.checks.push_back(first_failure("f4", xs, [&](std::size_t k) {
    return xs[k] < -1.0 || k + 1 >= xs.size() || f(xs[k + 1]) > f(xs[k]);
  }));
  rep.checks.push_back(lipschitz_check("g1", xs, g));
  rep.checks.push_back(first_failure("g2", xs, [&](std::size_t k) { return k + 1 >= xs.size() || g(xs[k + 1]) <= g(xs[k]) + 1e-15; }));
  rep.checks.push_back(first_failure("g3", xs, [&](std::size_t k) { return xs[k] > -1.0 || std::abs(g(xs[k]) - 1.0) <= 1e-14; }));
  rep.checks.push_back(first_failure("g4", xs, [&](std::size_t k) { return xs[k] <= -1.0 || xs[k] >= 1.0 || g(xs[k]) > 0.0; }));
  rep.checks.push_back(first_failure("g5", xs, [&](std::size_t k) { return xs[k] < 1.0 || std::abs(g(xs[k])) <= 1e-14; }));
  return rep;
}

double r_scale(const std::function<double(double)>& gamma, double r, double t) {
  if (!(r > 0.5 && r < 1.0)) throw Error(ErrorKind::BadR, "r must lie in (1/2, 1)");
  return gamma((t - 1.0) / (1.0 - r));
}

double F_eval(const ProfilePair& p, double x) {
  if (p.has_closed_form) {
    if (x <= -2.0) return 0.0;
    if (x <= 0.0) return (x + 2.0) * (x + 2.0) * (x + 2.0) / 12.0;
    return 0.5 * x * x + x + 2.0 / 3.0;
  }
  return knot_exact_integral(p, x, [&](double tau) { return p.f(tau) * p.g(tau - x); });
}

double F_prime(const ProfilePair& p, double x) {
  if (p.has_closed_form) {
    if (x <= -2.0) return 0.0;
    if (x <= 0.0) return 0.25 * (x + 2.0) * (x + 2.0);
    return x + 1.0;
  }
  return knot_exact_integral(p, x, [&](double tau) { return p.f.deriv(tau) * p.g(tau - x); });
}

FProfile make_F(const ProfilePair& p) {
  FProfile F;
  F.name = p.name;
  F.eval = [p](double x) { return F_eval(p, x); };
  F.deriv = [p](double x) { return F_prime(p, x); };
  F.kinks = p.has_closed_form ? std::vector<double>{-2.0, 0.0} : convolution_kinks(p);
  return F;
}

ProfileReport validate_F(const FProfile& F, int samples) {
  const auto xs = sample_grid(samples);
  ProfileReport rep;
  rep.checks.push_back(first_failure("nonnegative", xs, [&](std::size_t k) { return F.eval(xs[k]) >= -1e-15; }));
  rep.checks.push_back(first_failure("nondecreasing", xs, [&](std::size_t k) {
    return k + 1 >= xs.size() || F.eval(xs[k + 1]) >= F.eval(xs[k]) - 1e-15;
  }));
  rep.checks.push_back(convex_check("convex", xs, F.eval, 0.0));
  std::vector<double> pos;
  for (double x : xs)
    if (x >= 0.0) pos.push_back(x);
  // strict: the midpoint gap must be bounded away from zero
  rep.checks.push_back(convex_check("strictly_convex_on_nonneg", pos, F.eval, 1e-9));
  rep.checks.push_back({"positive_slope_at_zero", F.deriv(0.0) > 0.0, std::nullopt});
  return rep;
}

FProfile smeared_profile(const FProfile& F, int n) {
  if (n < 1) throw Error(ErrorKind::InvalidInput, "dimension must be positive");
  const double sphere = 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
  auto radial = [sphere, n, kinks = F.kinks](const std::function<double(double)>& fn, double a) {
    // F vanishes below -2, so the radial integral stops at sqrt(a + 2).
    if (a <= -2.0) return 0.0;
    const double top = std::sqrt(a + 2.0);
    std::vector<double> bps;
    for (double k : kinks)
      if (k < a && k > -2.0) bps.push_back(std::sqrt(a - k));
    quad::AdaptiveOptions opts;
    opts.abs_tol = 1e-14;
    opts.rel_tol = 1e-12;
    opts.initial_panels = 4;
    const auto r = quad::adaptive([&](double rho) { return fn(a - rho * rho) * std::pow(rho, n - 1); }, 0.0, top,
                                  opts, bps);
    return sphere * r.value;
  };
  FProfile G;
  G.name = F.name + "_smeared" + std::to_string(n);
  G.eval = [radial, f = F.eval](double a) { return radial(f, a); };
  G.deriv = [radial, d = F.deriv](double a) { return radial(d, a); };
  return G;
}

}  // namespace fjohn
