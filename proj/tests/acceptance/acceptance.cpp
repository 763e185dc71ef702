// Acceptance run: one PASS/FAIL line per criterion, non-zero exit when any
// criterion fails.
//
//   acceptance FJOHN_CLI INSTANCES_DIR WORK_DIR

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fjohn/contact.hpp"
#include "fjohn/errors.hpp"
#include "fjohn/ifunc.hpp"
#include "fjohn/instance.hpp"
#include "fjohn/lfunc.hpp"
#include "fjohn/oracle.hpp"
#include "fjohn/profiles.hpp"

using namespace fjohn;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  const char* id;
  const char* title;
  double budget_s;  // runtime bound (0: none)
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

void require(Outcome& o, bool cond, const std::string& what) {
  if (!cond) {
    o.pass = false;
    o.detail += (o.detail.empty() ? "" : "; ") + what;
  }
}

const FProfile& canonical_F() {
  static const FProfile F = make_F(canonical_pair());
  return F;
}

EPoint random_trace0(int n, double s, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  const auto basis = trace0_basis(n, s);
  Vec c(basis.size());
  for (auto& v : c) v = g(rng);
  return from_coordinates(c, basis);
}

EPoint random_sE(int n, double s, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 0.15);
  std::uniform_real_distribution<double> u(-0.15, 0.15);
  SymMatrix S(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) S.set(i, j, g(rng));
  EPoint p = EPoint::zero(n);
  p.mat.diag = expm_sym(S);
  // alpha^s det(A) >= 1
  p.mat.corner = std::pow(p.mat.diag.det(), -1.0 / s) * std::exp(std::abs(g(rng)));
  for (auto& v : p.shift) v = u(rng);
  return p;
}

Fixture tangent_three() { return tangent_fixture(1, 1.0, {{-0.8}, {0.3}, {0.85}}); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------

Outcome ac1() {
  Outcome o;
  double worst = 0.0;
  for (int n : {1, 2, 3})
    for (double s : {0.5, 1.0, 2.0}) {
      const auto fx = cross_fixture(n, s);
      const auto r = verify_decomposition(fx.contacts.points, fx.weights, fx.h, fx.s, 1e-12);
      worst = std::max({worst, r.residual_a, r.residual_b, r.residual_c, r.residual_d});
      require(o, r.all_pass(), "cross(" + std::to_string(n) + ", " + fmt("%g", s) + ") fails");
    }
  o.detail = "max residual " + fmt("%.2e", worst) + (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

Outcome ac2() {
  Outcome o;
  const auto fx = two_level_cross_fixture(1, 1.0, 0.4, 0.8);
  DiscreteMeasure cal;
  for (std::size_t i = 0; i < fx.weights.size(); ++i)
    cal.atoms.push_back({fx.contacts.points[i], fx.weights[i] * fx.contacts.h_values[i]});
  const auto res = minimize_I(fx.h, 1.0, cal, canonical_F());
  require(o, res.converged, "calibrated run did not converge");
  require(o, norm(res.point) <= 1e-8, "calibrated minimiser " + fmt("%.2e", norm(res.point)) + " from 0");
  require(o, std::abs(res.lambda - 1.0) <= 1e-8, "lambda " + fmt("%.12f", res.lambda));
  const auto mu = extract_measure(res, fx.h, 1.0, cal, canonical_F());
  Vec got;
  for (const auto& a : mu.atoms) got.push_back(a.m);
  std::sort(got.begin(), got.end());
  const Vec want = {0.25, 0.25, 0.75, 0.75};
  require(o, got.size() == 4, "extracted " + std::to_string(got.size()) + " atoms");
  for (std::size_t i = 0; i < std::min<std::size_t>(4, got.size()); ++i)
    require(o, std::abs(got[i] - want[i]) <= 1e-8, "weight " + fmt("%.12f", got[i]));

  const auto nu = DiscreteMeasure::counting(fx.contacts.points);
  const auto rc = minimize_I(fx.h, 1.0, nu, canonical_F());
  const auto iso = check_isotropy(extract_measure(rc, fx.h, 1.0, nu, canonical_F()), 1.0);
  require(o, iso.residual_iso <= 1e-8, "counting residual_iso " + fmt("%.2e", iso.residual_iso));
  require(o, iso.residual_center <= 1e-10, "counting residual_center " + fmt("%.2e", iso.residual_center));
  require(o, iso.lambda > 0.0, "counting lambda <= 0");
  if (o.pass)
    o.detail = "calibrated |p| " + fmt("%.1e", norm(res.point)) + ", counting residual_iso " +
               fmt("%.1e", iso.residual_iso) + ", residual_center " + fmt("%.1e", iso.residual_center) +
               ", lambda " + fmt("%.6f", iso.lambda);
  return o;
}

Outcome ac3() {
  Outcome o;
  std::mt19937_64 rng(2024);
  const std::vector<Fixture> fixtures = {two_level_cross_fixture(1, 1.0, 0.4, 0.8), star_fixture(1.0, 0.4, 0.8),
                                         cross_fixture(3, 2.0)};
  double worst = 0.0;
  int cases = 0;
  for (int k = 0; k < 100; ++k) {
    const auto& fx = fixtures[k % 3];
    const int n = fx.h.n();
    const auto nu = DiscreteMeasure::counting(fx.contacts.points);
    const EPoint p = random_trace0(n, fx.s, rng, 0.8);
    const EPoint g = I_nu_grad(fx.h, fx.s, nu, canonical_F(), p);
    // central differences along every ambient coordinate
    const double h = 1e-6;
    double err2 = 0.0, ref2 = 0.0;
    auto probe = [&](const EPoint& e, double scale, double analytic) {
      const double fd = (I_nu_eval(fx.h, fx.s, nu, canonical_F(), p + h * e) -
                         I_nu_eval(fx.h, fx.s, nu, canonical_F(), p - h * e)) /
                        (2.0 * h) * scale;
      err2 += (fd - analytic) * (fd - analytic);
      ref2 += analytic * analytic;
    };
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        EPoint e = EPoint::zero(n);
        e.mat.diag.set(i, j, 1.0);
        // the symmetric unit moves both M_ij and M_ji
        probe(e, i == j ? 1.0 : 0.5, g.mat.diag(i, j));
      }
    {
      EPoint e = EPoint::zero(n);
      e.mat.corner = 1.0;
      probe(e, 1.0, g.mat.corner);
    }
    for (int i = 0; i < n; ++i) {
      EPoint e = EPoint::zero(n);
      e.shift[i] = 1.0;
      probe(e, 1.0, g.shift[i]);
    }
    const double rel = std::sqrt(err2) / std::max(std::sqrt(ref2), 1e-12);
    worst = std::max(worst, rel);
    ++cases;
  }
  require(o, worst <= 1e-5, "relative error " + fmt("%.2e", worst));
  if (o.pass) o.detail = std::to_string(cases) + " states, max relative error " + fmt("%.2e", worst);
  return o;
}

Outcome ac4() {
  Outcome o;
  const std::vector<Fixture> fixtures = {two_level_cross_fixture(1, 1.0, 0.4, 0.8),
                                         two_level_cross_fixture(1, 2.0, 0.2, 0.5), tangent_three()};
  double worst = 0.0;
  for (const auto& fx : fixtures) {
    const INuProblem prob(fx.h, fx.s, DiscreteMeasure::counting(fx.contacts.points), canonical_F());
    const auto res = minimize_I_report(prob);
    require(o, res.converged, fx.name + ": minimiser did not converge");
    const auto F = [](double x) { return canonical_F().eval(x); };
    const Vec ones(fx.contacts.points.size(), 1.0);
    const auto grid = oracle::grid_minimize(
        [&](const EPoint& p) { return oracle::counting_functional(fx.contacts.points, ones, prob.h_pow(), F, p); },
        trace0_basis(1, fx.s), {{}, 4.0, 401, 2});
    const double gap = std::abs(grid.value - res.value);
    worst = std::max(worst, gap);
    require(o, gap <= 1e-6, fx.name + ": gap " + fmt("%.2e", gap));
  }
  if (o.pass) o.detail = "3 fixtures, max |grid - minimiser| " + fmt("%.2e", worst);
  return o;
}

Outcome ac5() {
  Outcome o;
  const int n = 1;
  const double s = 1.0;
  const auto fx = cross_fixture(n, s);
  const INuProblem prob(fx.h, s, DiscreteMeasure::counting(fx.contacts.points), canonical_F());
  EPoint d0{BlockMat::id_plus(n, -n / s), Vec(n, 0.0)};
  d0 *= 1.0 / norm(d0);
  const double flat_max = prob.direction_max(d0);
  require(o, std::abs(flat_max) <= 1e-12, "max expression on the analytic direction " + fmt("%.2e", flat_max));
  const auto wit = coercivity_witness(prob, 1000, 42);
  require(o, !wit.pass, "cross fixture passes the witness");
  bool analytic_found = false;
  for (const auto& f : wit.failures) {
    const double c = inner(f.direction, d0) / norm(f.direction);
    require(o, std::abs(std::abs(c) - 1.0) <= 1e-9, "failure '" + f.label + "' off the analytic line");
    analytic_found |= c > 0.0;
  }
  require(o, analytic_found, "the analytic direction is not among the failures");
  const auto mr = minimize_I_report(prob);
  require(o, mr.status == MinimizerStatus::Flat || mr.status == MinimizerStatus::Diverging,
          "minimize_I on the cross reports " + std::string(to_string(mr.status)));

  const auto tl = two_level_cross_fixture(1, 1.0, 0.4, 0.8);
  const INuProblem pt(tl.h, 1.0, DiscreteMeasure::counting(tl.contacts.points), canonical_F());
  const auto wt = coercivity_witness(pt, 1000, 42);
  require(o, wt.pass && wt.margin >= 0.05, "two-level margin " + fmt("%.4f", wt.margin));
  require(o, wt.directions_tested >= 1000, "too few directions");
  require(o, minimize_I_report(pt).converged, "two-level minimiser did not converge");
  if (o.pass)
    o.detail = "cross fails on " + std::to_string(wit.failures.size()) + " direction(s), all +-(Id+(-n/s),0); " +
               "two-level margin " + fmt("%.4f", wt.margin) + " over " + std::to_string(wt.directions_tested);
  return o;
}

Outcome ac6() {
  Outcome o;
  const auto pair = canonical_pair();
  const auto& F = canonical_F();
  auto fv = [&](double t) { return pair.f(t); };
  auto gb = [&](double t) { return pair.g(-t); };
  double worst = 0.0;
  for (int k = 0; k <= 600; ++k) {
    const double x = -3.0 + 0.01 * k;
    worst = std::max(worst, std::abs(F.eval(x) - oracle::convolve_numeric(fv, gb, x, 1e-4)));
  }
  require(o, worst <= 1e-6, "closed form vs numeric " + fmt("%.2e", worst));
  require(o, std::abs(F.eval(0.0) - 2.0 / 3.0) <= 1e-7, "F(0)");
  require(o, std::abs(F.deriv(0.0) - 1.0) <= 1e-7, "F'(0)");
  require(o, std::abs(F.eval(1.0) - 13.0 / 6.0) <= 1e-7, "F(1)");
  require(o, validate_profiles(pair).all_pass(), "profile properties");
  require(o, validate_F(F).all_pass(), "F-class properties");
  if (o.pass) o.detail = "601 points, max deviation " + fmt("%.2e", worst);
  return o;
}

Outcome ac7() {
  Outcome o;
  const auto fx = two_level_cross_fixture(1, 1.0, 0.4, 0.8);
  const auto pair = canonical_pair();
  const QuadratureSpec q;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  for (double r : {0.8, 0.9}) {
    const double eps = 1.0 - r;
    for (int k = 0; k < 100; ++k) {
      const Vec c = {g(rng), g(rng)};
      const EPoint p = lr_point_from_rescaled(1, 1.0, r, c);
      EPoint m = p - EPoint::identity(1);
      m *= 1.0 / eps;
      const double gap = std::abs(I_r_eval(fx.h, 1.0, pair, r, m, q) - L_r_eval(fx.h, 1.0, pair, r, p, q));
      worst = std::max(worst, gap);
    }
  }
  require(o, worst <= 2.0 * q.tol, "max gap " + fmt("%.2e", worst));
  if (o.pass) o.detail = "200 points, max gap " + fmt("%.2e", worst) + " (bound " + fmt("%.0e", 2.0 * q.tol) + ")";
  return o;
}

Outcome ac8() {
  Outcome o;
  const auto pair = canonical_pair();
  const QuadratureSpec q;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> lam(0.0, 1.0);
  double worst_convex = -INFINITY, min_value = INFINITY, worst_bound = -INFINITY;
  for (const auto& fx : {two_level_cross_fixture(1, 1.0, 0.4, 0.8), cross_fixture(1, 2.0)}) {
    const double bound = L_r_identity_bound(fx.h, fx.s, pair);
    for (double r : {0.8, 0.9, 0.95, 0.99}) {
      worst_bound = std::max(worst_bound, L_r_eval(fx.h, fx.s, pair, r, EPoint::identity(1), q) - bound);
      for (int k = 0; k < 50; ++k) {
        const EPoint p = random_sE(1, fx.s, rng);
        if (!is_in_sE_plus(p, fx.s)) {
          require(o, false, "sample outside the cone");
          continue;
        }
        min_value = std::min(min_value, L_r_eval(fx.h, fx.s, pair, r, p, q));
      }
      for (int k = 0; k < 200; ++k) {
        const EPoint a = random_sE(1, fx.s, rng), b = random_sE(1, fx.s, rng);
        const double t = lam(rng);
        EPoint mix = t * a + (1.0 - t) * b;
        mix.mat.corner = std::pow(a.mat.corner, t) * std::pow(b.mat.corner, 1.0 - t);
        const double lhs = L_r_eval(fx.h, fx.s, pair, r, mix, q);
        const double rhs =
            t * L_r_eval(fx.h, fx.s, pair, r, a, q) + (1.0 - t) * L_r_eval(fx.h, fx.s, pair, r, b, q);
        worst_convex = std::max(worst_convex, lhs - rhs);
      }
    }
  }
  require(o, min_value > 0.0, "non-positive value " + fmt("%.3e", min_value));
  require(o, worst_convex <= 2.0 * q.tol, "convex* violated by " + fmt("%.2e", worst_convex));
  require(o, worst_bound <= 0.0, "identity bound exceeded by " + fmt("%.3e", worst_bound));
  if (o.pass)
    o.detail = "min value " + fmt("%.3e", min_value) + ", max convex* excess " + fmt("%.2e", worst_convex) +
               ", bound slack " + fmt("%.3e", -worst_bound);
  return o;
}

Outcome ac9() {
  Outcome o;
  const auto fx = two_level_cross_fixture(1, 1.0, 0.4, 0.8);
  QuadratureSpec q;
  q.tol = 1e-9;
  const std::vector<double> schedule = {0.8, 0.9, 0.95, 0.99};
  const auto res = r_sweep(fx.h, 1.0, canonical_pair(), fx.contacts.points, schedule, q);
  for (const auto& rec : res.records)
    require(o, rec.converged, "r = " + fmt("%g", rec.r) + " did not converge");
  const auto& last = res.records.back();
  require(o, res.dist_decreasing, "dist_to_identity not strictly decreasing");
  require(o, last.dist_to_identity <= 0.05, "final dist " + fmt("%.4f", last.dist_to_identity));
  require(o, res.trace_decreasing, "normalized_s_trace not decreasing");
  require(o, last.normalized_s_trace <= 0.05, "final trace " + fmt("%.4f", last.normalized_s_trace));
  require(o, res.secant_decreasing, "secant_to_M0 not decreasing");
  require(o, last.secant_to_M0 <= 10.0 * (1.0 - schedule.back()), "final secant " + fmt("%.4f", last.secant_to_M0));
  require(o, res.bumps.size() == 5, std::to_string(res.bumps.size()) + " test bumps");
  require(o, last.mu_r_max_rel_error <= 0.05, "mu_r relative error " + fmt("%.4f", last.mu_r_max_rel_error));
  if (o.pass)
    o.detail = "at r = 0.99: dist " + fmt("%.2e", last.dist_to_identity) + ", trace " +
               fmt("%.2e", last.normalized_s_trace) + ", secant " + fmt("%.2e", last.secant_to_M0) +
               ", mu error " + fmt("%.2e", last.mu_r_max_rel_error);
  return o;
}

Outcome ac10(const std::string& cli, const std::string& instances, const std::string& work) {
  Outcome o;
  int compared = 0;
  for (const char* inst : {"two_level_cross_n1.json", "cross_n1.json", "tangent_pieces_n1.json"})
    for (const char* cmd : {"verify", "contacts", "minimize-i1", "coercivity", "sweep-r", "profiles-check"}) {
      std::string outs[2];
      for (int k = 0; k < 2; ++k) {
        const std::string file = work + "/ac10_" + std::to_string(k) + ".json";
        const std::string line = "\"" + cli + "\" " + cmd + " --instance \"" + instances + "/" + inst +
                                 "\" --seed 42 > \"" + file + "\" 2>/dev/null";
        const int rc = std::system(line.c_str());
        (void)rc;  // failing commands still emit a report
        outs[k] = read_file(file);
      }
      require(o, !outs[0].empty(), std::string(cmd) + " on " + inst + " wrote nothing");
      require(o, outs[0] == outs[1], std::string(cmd) + " on " + inst + " differs between runs");
      ++compared;
    }
  if (o.pass) o.detail = std::to_string(compared) + " command/instance pairs byte-identical";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 4) {
    std::fprintf(stderr, "usage: acceptance FJOHN_CLI INSTANCES_DIR WORK_DIR\n");
    return 2;
  }
  const std::string cli = argv[1], instances = argv[2], work = argv[3];
  const std::vector<Criterion> criteria = {
      {"AC1", "decomposition identities on the crosses", 1.0, ac1},
      {"AC2", "constructive isotropy on the two-level cross", 5.0, ac2},
      {"AC3", "I_nu gradient vs central differences", 0.0, ac3},
      {"AC4", "grid oracle vs minimiser (n = 1)", 30.0, ac4},
      {"AC5", "coercivity equivalence", 0.0, ac5},
      {"AC6", "closed form of F", 0.0, ac6},
      {"AC7", "I_r / L_r relation on the s-determinant-one set", 0.0, ac7},
      {"AC8", "positivity, convex* and the identity bound", 0.0, ac8},
      {"AC9", "r -> 1 trends on the two-level cross", 600.0, ac9},
      {"AC10", "byte-identical CLI reports", 0.0, [&] { return ac10(cli, instances, work); }},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0.0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += "; runtime " + fmt("%.2f", secs) + " s over budget " + fmt("%.0f", c.budget_s) + " s";
    }
    std::printf("%-4s %s  %s (%.2f s): %s\n", c.id, o.pass ? "PASS" : "FAIL", c.title, secs, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
