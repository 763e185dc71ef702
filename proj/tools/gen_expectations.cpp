// Freezes reference numbers for the test-suite. Every value is produced here
// from hand arithmetic and the brute-force routines in fjohn::oracle; none of
// the evaluation code under test is called.
//
//   gen_expectations OUT.json

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <span>
#include <stdexcept>
#include <tuple>

#include "fjohn/oracle.hpp"
#include "json.hpp"

using nlohmann::json;
using fjohn::EPoint;
using fjohn::Vec;
namespace oracle = fjohn::oracle;

namespace {

// canonical profiles, written out directly
double f_can(double t) { return t <= -1.0 ? 0.0 : t + 1.0; }
double g_can(double t) { return t <= -1.0 ? 1.0 : (t >= 1.0 ? 0.0 : 0.5 * (1.0 - t)); }

// hand integration of f * g(. - x); checked against the trapezoid oracle below
double F_hand(double x) {
  if (x <= -2.0) return 0.0;
  if (x <= 0.0) return (x + 2.0) * (x + 2.0) * (x + 2.0) / 12.0;
  return 0.5 * x * x + x + 2.0 / 3.0;
}
double dF_hand(double x) {
  if (x <= -2.0) return 0.0;
  if (x <= 0.0) return 0.25 * (x + 2.0) * (x + 2.0);
  return x + 1.0;
}

double g_bar(double t) { return g_can(-t); }

double F_numeric(double x) { return oracle::convolve_numeric(f_can, g_bar, x, 1e-5); }

// G(a) = int_R F(a - z^2) dz; on each side of z^2 = a the integrand is a
// polynomial in z of degree <= 6, so 4-point Gauss-Legendre is exact.
template <class Fn>
double smear_1d(Fn&& F, double a) {
  if (a <= -2.0) return 0.0;
  static const std::array<double, 4> x = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                          0.8611363115940526};
  static const std::array<double, 4> w = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                          0.3478548451374538};
  auto piece = [&](double lo, double hi) {
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double z = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x[k];
      acc += w[k] * F(a - z * z);
    }
    return 0.5 * (hi - lo) * acc;
  };
  const double outer = std::sqrt(a + 2.0);
  if (a <= 0.0) return 2.0 * piece(0.0, outer);
  const double inner = std::sqrt(a);
  return 2.0 * (piece(0.0, inner) + piece(inner, outer));
}

struct Line {
  double a, b;
};

// tangents of -(s/2) ln(1 - x^2) at the points (n = 1)
std::vector<Line> tangents(const Vec& pts, double s) {
  std::vector<Line> out;
  for (double u : pts) {
    const double slope = s * u / (1.0 - u * u);
    out.push_back({slope, -0.5 * s * std::log(1.0 - u * u) - slope * u});
  }
  return out;
}

double h_pow_1d(const std::vector<Line>& lines, double s, double x) {
  double psi = -INFINITY;
  for (const auto& l : lines) psi = std::max(psi, l.a * x + l.b);
  return std::exp(-psi / s);
}

// orthonormal basis of {(m (+) beta, w) : s beta + m = 0} for n = 1
std::vector<EPoint> basis_1d(double s) {
  const double nm = std::sqrt(1.0 + 1.0 / (s * s));
  EPoint e1 = EPoint::zero(1), e2 = EPoint::zero(1);
  e1.mat.diag.set(0, 0, 1.0 / nm);
  e1.mat.corner = -1.0 / (s * nm);
  e2.shift[0] = 1.0;
  return {e1, e2};
}

// 2x2 system for the two-level weights: per-axis isotropy and the s-trace
std::array<double, 2> two_level_weights(int n, double s, double r1, double r2) {
  const double a11 = 2.0 * r1, a12 = 2.0 * r2, b1 = 1.0;
  const double a21 = 2.0 * n * (1.0 - r1), a22 = 2.0 * n * (1.0 - r2), b2 = s;
  const double det = a11 * a22 - a12 * a21;
  return {(b1 * a22 - a12 * b2) / det, (a11 * b2 - a21 * b1) / det};
}

json entry(json value, double tol, const std::string& oracle_name, json params) {
  return {{"value", std::move(value)}, {"tol", tol}, {"oracle", oracle_name}, {"params", std::move(params)}};
}

json vec_json(const Vec& v) {
  json out = json::array();
  for (double x : v) out.push_back(x);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: gen_expectations OUT.json\n";
    return 1;
  }
  json out = json::object();

  // --- tangency arithmetic
  {
    const auto l = tangents({0.5}, 1.0).front();
    const json p = {{"n", 1}, {"s", 1.0}, {"u", 0.5}};
    out["tangent_u05_slope"] = entry(l.a, 1e-12, "direct-arithmetic", p);
    out["tangent_u05_offset"] = entry(l.b, 1e-12, "direct-arithmetic", p);
    out["tangent_u05_h"] = entry(h_pow_1d({l}, 1.0, 0.5), 1e-12, "direct-evaluation", p);
  }

  // --- crosses: rho^2 = n/(n+s), c = (n+s)/(2n)
  for (int n : {1, 2, 3})
    for (double s : {0.5, 1.0, 2.0}) {
      char key[64];
      std::snprintf(key, sizeof key, "cross_n%d_s%g", n, s);
      const double rho = std::sqrt(n / (n + s));
      const double c = (n + s) / (2.0 * n);
      // sum c_i u_i u_i^T per axis, sum c_i (1 - rho^2), sum c_i (isotropy constant)
      const json v = {{"rho", rho},
                      {"weight", c},
                      {"axis_moment", 2.0 * c * rho * rho},
                      {"s_trace", 2.0 * n * c * (1.0 - rho * rho)},
                      {"lambda", 1.0}};
      out[key] = entry(v, 1e-12, "direct-arithmetic", {{"n", n}, {"s", s}});
    }

  // --- two-level crosses
  for (auto [n, s, r1, r2] : {std::tuple{1, 1.0, 0.4, 0.8}, std::tuple{1, 2.0, 0.2, 0.5}, std::tuple{2, 1.0, 0.4, 0.8}}) {
    char key[96];
    std::snprintf(key, sizeof key, "two_level_weights_n%d_s%g_%g_%g", n, s, r1, r2);
    const auto c = two_level_weights(n, s, r1, r2);
    out[key] = entry(vec_json({c[0], c[1]}), 1e-12, "cramer-2x2",
                     {{"n", n}, {"s", s}, {"rho1sq", r1}, {"rho2sq", r2}});
  }

  // --- the convolution F
  {
    double worst = 0.0;
    json table = json::array();
    for (int k = 0; k <= 600; ++k) {
      const double x = -3.0 + 0.01 * k;
      const double v = F_numeric(x);
      worst = std::max(worst, std::abs(v - F_hand(x)));
      table.push_back(v);
    }
    if (worst > 1e-7) throw std::runtime_error("hand-integrated F disagrees with the trapezoid oracle");
    out["F_table_601"] = entry(table, 1e-6, "convolve_numeric",
                               {{"x_min", -3.0}, {"x_step", 0.01}, {"points", 601}, {"step", 1e-5}});
    out["F_at_minus3"] = entry(F_numeric(-3.0), 1e-12, "convolve_numeric", {{"x", -3.0}});
    out["F_at_minus2"] = entry(F_numeric(-2.0), 1e-12, "convolve_numeric", {{"x", -2.0}});
    out["F_at_0"] = entry(oracle::convolve_numeric(f_can, g_bar, 0.0, 1e-4), 1e-7, "convolve_numeric",
                          {{"x", 0.0}, {"step", 1e-4}});
    out["F_at_1"] = entry(F_numeric(1.0), 1e-7, "convolve_numeric", {{"x", 1.0}});
    const double d = 1e-3;
    out["F_prime_at_0"] = entry((F_numeric(d) - F_numeric(-d)) / (2.0 * d), 1e-6, "convolve_numeric+central-difference",
                                {{"x", 0.0}, {"h", d}});
  }

  // --- I_nu on the two-level cross (n = 1, s = 1, 0.4, 0.8)
  const double s = 1.0;
  const Vec pts = {-std::sqrt(0.8), -std::sqrt(0.4), std::sqrt(0.4), std::sqrt(0.8)};
  std::vector<Vec> atoms;
  Vec hp;
  for (double u : pts) {
    atoms.push_back({u});
    hp.push_back(std::sqrt(1.0 - u * u));
  }
  const auto cw = two_level_weights(1, s, 0.4, 0.8);
  const Vec calibrated_w = {cw[1], cw[0], cw[0], cw[1]};
  const json tl = {{"fixture", "two-level-cross"}, {"n", 1}, {"s", s}, {"rho1sq", 0.4}, {"rho2sq", 0.8}};
  {
    const Vec ones(4, 1.0);
    out["I_nu_two_level_counting_at_0"] =
        entry(oracle::counting_functional(atoms, ones, hp, F_numeric, EPoint::zero(1)), 1e-7,
              "counting_functional+convolve_numeric", tl);

    const auto basis = basis_1d(s);
    const auto counting = oracle::grid_minimize(
        [&](const EPoint& p) { return oracle::counting_functional(atoms, ones, hp, F_hand, p); }, basis,
        {{}, 4.0, 401, 2});
    out["I_nu_two_level_counting_min"] = entry(counting.value, 1e-6, "grid_minimize", tl);

    Vec masses;
    for (int i = 0; i < 4; ++i) masses.push_back(calibrated_w[i] * hp[i]);
    const auto cal = oracle::grid_minimize(
        [&](const EPoint& p) { return oracle::counting_functional(atoms, masses, hp, F_hand, p); }, basis,
        {{}, 4.0, 401, 2});
    out["I_nu_two_level_calibrated_min"] =
        entry({{"value", cal.value}, {"coords", vec_json(cal.coords)}, {"lambda", 1.0}}, 1e-6, "grid_minimize",
              tl);
    out["calibrated_weights_two_level"] = entry(vec_json(calibrated_w), 1e-8, "construction-arithmetic", tl);
  }

  // --- the r -> 1 limit: nu = sum kappa_u delta_u with the smeared profile
  {
    Vec kappa;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double u = pts[i], H = hp[i];
      // Hessian of h^(1/s) at a tangent point plus minus that of the hemisphere
      const double q = 2.0 * u * u / (H * H * H) + 1.0 / H;
      kappa.push_back(1.0 / std::sqrt(q / (2.0 * H)));
    }
    auto G = [](double a) { return smear_1d(F_hand, a); };
    const auto basis = basis_1d(s);
    const auto lim = oracle::grid_minimize(
        [&](const EPoint& p) { return oracle::counting_functional(atoms, kappa, hp, G, p); }, basis,
        {{}, 2.0, 401, 5});
    Vec mu;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double arg = pts[i] * pts[i] * lim.point.mat.diag(0, 0) / (hp[i] * hp[i]) +
                         pts[i] * lim.point.shift[0] / (hp[i] * hp[i]) + lim.point.mat.corner;
      mu.push_back(kappa[i] * smear_1d(dF_hand, arg) / hp[i]);
    }
    out["limit_two_level"] = entry({{"kappa", vec_json(kappa)},
                                    {"M0", lim.point.mat.diag(0, 0)},
                                    {"beta0", lim.point.mat.corner},
                                    {"w0", lim.point.shift[0]},
                                    {"value", lim.value},
                                    {"mu_weights", vec_json(mu)}},
                                   1e-6, "grid_minimize+gauss-exact-smearing", tl);
  }

  // --- L_r by raw midpoint quadrature
  {
    const auto lines = tangents(pts, s);
    oracle::DenseLrInput in;
    in.n = 1;
    in.r = 0.8;
    in.h_pow = [&](std::span<const double> x) { return h_pow_1d(lines, s, x[0]); };
    in.f = f_can;
    in.g = g_can;
    in.x_radius = 1.5;
    in.y_max = 1.6;
    in.a_rows = {1.0};
    in.alpha = 1.0;
    in.v = {0.0};
    const double at_id = oracle::dense_quadrature_L_r(in);
    in.a_rows = {1.1};
    in.alpha = 0.95;
    in.v = {0.05};
    const double moved = oracle::dense_quadrature_L_r(in);
    json p = tl;
    p["r"] = 0.8;
    out["dense_L_r_two_level_identity"] = entry(at_id, 1e-4, "dense_quadrature_L_r (relative tol)", p);
    p["A"] = 1.1;
    p["alpha"] = 0.95;
    p["v"] = 0.05;
    out["dense_L_r_two_level_moved"] = entry(moved, 1e-4, "dense_quadrature_L_r (relative tol)", p);
  }

  std::ofstream f(argv[1], std::ios::binary | std::ios::trunc);
  if (!f) {
    std::cerr << "cannot write " << argv[1] << "\n";
    return 1;
  }
  f << out.dump(2) << "\n";
  return 0;
}
