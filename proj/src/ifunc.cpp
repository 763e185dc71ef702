#include "fjohn/ifunc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "fjohn/errors.hpp"

namespace fjohn {

void DiscreteMeasure::validate(int n) const {
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (static_cast<int>(atoms[i].x.size()) != n) throw Error(ErrorKind::DimensionMismatch, "atom dimension");
    if (!(atoms[i].m > 0.0) || !std::isfinite(atoms[i].m))
      throw Error(ErrorKind::InvalidInput, "atom masses must be positive and finite");
    for (std::size_t j = 0; j < i; ++j) {
      double d = 0.0;
      for (int k = 0; k < n; ++k) d += (atoms[i].x[k] - atoms[j].x[k]) * (atoms[i].x[k] - atoms[j].x[k]);
      if (std::sqrt(d) < 1e-9) throw Error(ErrorKind::InvalidInput, "atoms must be pairwise distinct");
    }
  }
}

double DiscreteMeasure::total_mass() const {
  double t = 0.0;
  for (const auto& a : atoms) t += a.m;
  return t;
}

DiscreteMeasure DiscreteMeasure::counting(const std::vector<Vec>& points) {
  DiscreteMeasure nu;
  for (const auto& p : points) nu.atoms.push_back({p, 1.0});
  return nu;
}

INuProblem::INuProblem(const LogConcaveFn& h, double s, DiscreteMeasure nu, FProfile F, double contact_tol)
    : n_(h.n()), s_(s), nu_(std::move(nu)), F_(std::move(F)) {
  if (nu_.atoms.empty()) throw Error(ErrorKind::InvalidInput, "nu needs at least one atom");
  nu_.validate(n_);
  for (const auto& a : nu_.atoms) {
    const double hp = h.eval_pow(a.x, s);
    if (!(hp > 0.0)) throw Error(ErrorKind::ZeroValueAtom, "h vanishes at an atom of nu");
    if (std::abs(hp - hemisphere(a.x)) > contact_tol)
      throw Error(ErrorKind::AtomOffContactSet,
                  "atom is not a contact point (gap " + std::to_string(hp - hemisphere(a.x)) + ")");
    hp_.push_back(hp);
  }
}

double INuProblem::arg(std::size_t i, const EPoint& p) const {
  const Vec& x = nu_.atoms[i].x;
  const Vec mx = p.mat.diag.apply(x);
  double q = 0.0;
  for (int k = 0; k < n_; ++k) q += x[k] * (mx[k] + p.shift[k]);
  return q / (hp_[i] * hp_[i]) + p.mat.corner;
}

double INuProblem::value(const EPoint& p) const {
  double total = 0.0;
  for (std::size_t i = 0; i < nu_.atoms.size(); ++i) total += nu_.atoms[i].m * hp_[i] * F_.eval(arg(i, p));
  return total;
}

EPoint INuProblem::grad(const EPoint& p) const {
  EPoint g = EPoint::zero(n_);
  for (std::size_t i = 0; i < nu_.atoms.size(); ++i) {
    const double c = nu_.atoms[i].m * F_.deriv(arg(i, p)) / hp_[i];
    if (c == 0.0) continue;
    const Vec& x = nu_.atoms[i].x;
    SymMatrix xx = SymMatrix::outer(x);
    xx *= c;
    g.mat.diag += xx;
    g.mat.corner += c * hp_[i] * hp_[i];
    for (int k = 0; k < n_; ++k) g.shift[k] += c * x[k];
  }
  return g;
}

double INuProblem::lambda_trace(const EPoint& p) const {
  double total = 0.0;
  for (std::size_t i = 0; i < nu_.atoms.size(); ++i) total += nu_.atoms[i].m * F_.deriv(arg(i, p)) / hp_[i];
  return total / (n_ + s_);
}

double INuProblem::direction_max(const EPoint& d) const {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nu_.atoms.size(); ++i) best = std::max(best, arg(i, d));
  return best;
}

double I_nu_eval(const LogConcaveFn& h, double s, const DiscreteMeasure& nu, const FProfile& F, const EPoint& p) {
  return INuProblem(h, s, nu, F).value(p);
}

EPoint I_nu_grad(const LogConcaveFn& h, double s, const DiscreteMeasure& nu, const FProfile& F, const EPoint& p) {
  return INuProblem(h, s, nu, F).grad(p);
}

std::string_view to_string(MinimizerStatus s) {
  switch (s) {
    case MinimizerStatus::Converged: return "converged";
    case MinimizerStatus::Flat: return "flat";
    case MinimizerStatus::Diverging: return "diverging";
    case MinimizerStatus::NotConverged: return "not_converged";
  }
  return "unknown";
}

namespace {

double sq_norm(const Vec& v) { return dot(v, v); }

// Directions d in the subspace along which the functional cannot increase,
// searched among the near-null eigenvectors of a finite-difference Hessian.
std::vector<EPoint> non_increasing_directions(const INuProblem& prob, const std::vector<EPoint>& basis, const Vec& c) {
  const std::size_t dim = basis.size();
  const double h = 1e-5;
  std::vector<Vec> cols(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    Vec cp = c, cm = c;
    cp[k] += h;
    cm[k] -= h;
    const Vec gp = coordinates(prob.grad(from_coordinates(cp, basis)), basis);
    const Vec gm = coordinates(prob.grad(from_coordinates(cm, basis)), basis);
    cols[k].resize(dim);
    for (std::size_t j = 0; j < dim; ++j) cols[k][j] = (gp[j] - gm[j]) / (2.0 * h);
  }
  SymMatrix hess(static_cast<int>(dim));
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = i; j < dim; ++j) hess.set(static_cast<int>(i), static_cast<int>(j), 0.5 * (cols[i][j] + cols[j][i]));
  const auto eig = eigen_sym(hess);
  const double scale = std::max(1.0, std::abs(eig.values.back()));
  std::vector<EPoint> out;
  for (std::size_t k = 0; k < dim; ++k) {
    if (eig.values[k] > 1e-7 * scale) break;
    Vec v(dim);
    for (std::size_t j = 0; j < dim; ++j) v[j] = eig.vec(static_cast<int>(j), static_cast<int>(k));
    EPoint d = from_coordinates(v, basis);
    d *= 1.0 / norm(d);
    for (double sign : {1.0, -1.0}) {
      EPoint ds = sign * d;
      if (prob.direction_max(ds) <= 1e-10) out.push_back(ds);
    }
  }
  return out;
}

}  // namespace

MinimizerResult minimize_I_report(const INuProblem& prob, const MinimizerOptions& opts, const EPoint* start) {
  const int n = prob.n();
  const double s = prob.s();
  const auto basis = trace0_basis(n, s);
  Vec c = start ? coordinates(project_trace0(*start, s), basis) : Vec(basis.size(), 0.0);
  const Vec c0 = c;

  auto point = [&](const Vec& cc) { return from_coordinates(cc, basis); };
  auto grad_coords = [&](const Vec& cc) { return coordinates(prob.grad(point(cc)), basis); };

  MinimizerResult res;
  double f = prob.value(point(c));
  Vec g = grad_coords(c);
  double gn2 = sq_norm(g);
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    if (std::sqrt(gn2) <= opts.tol) {
      res.status = MinimizerStatus::Converged;
      break;
    }
    double t = opts.initial_step;
    bool accepted = false;
    Vec trial(c.size());
    double ft = 0.0;
    Vec gt;
    while (t > 1e-30) {
      for (std::size_t k = 0; k < c.size(); ++k) trial[k] = c[k] - t * g[k];
      ft = prob.value(point(trial));
      // Below roundoff the value test is blind (a one-ulp "decrease" would
      // pass it); decide on the gradient instead.
      if (std::abs(ft - f) <= 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f))) {
        gt = grad_coords(trial);
        if (sq_norm(gt) < gn2) {
          accepted = true;
          break;
        }
      } else if (ft <= f - opts.armijo_c * t * gn2) {
        accepted = true;
        gt = grad_coords(trial);
        break;
      }
      t *= opts.shrink;
    }
    if (!accepted) break;
    c = trial;
    f = ft;
    g = gt;
    gn2 = sq_norm(g);
    Vec travel = c;
    for (std::size_t k = 0; k < c.size(); ++k) travel[k] -= c0[k];
    if (std::sqrt(sq_norm(travel)) > opts.divergence_radius) {
      res.status = MinimizerStatus::Diverging;
      EPoint d = point(travel);
      d *= 1.0 / norm(d);
      res.flat_directions.push_back(d);
      break;
    }
  }
  res.iterations = it;
  res.point = point(c);
  res.value = f;
  res.projected_grad_norm = std::sqrt(gn2);

  if (res.status == MinimizerStatus::Converged || res.status == MinimizerStatus::NotConverged) {
    auto flats = non_increasing_directions(prob, basis, c);
    if (!flats.empty()) {
      res.status = MinimizerStatus::Flat;
      res.flat_directions = std::move(flats);
    }
  }
  res.converged = res.status == MinimizerStatus::Converged;

  const EPoint full_grad = prob.grad(res.point);
  const EPoint id_s{BlockMat::id_plus(n, s), Vec(static_cast<std::size_t>(n), 0.0)};
  res.lambda_a = inner(full_grad, id_s) / (n + s * s);
  res.lambda_b = prob.lambda_trace(res.point);
  res.lambda = res.lambda_b;
  return res;
}

MinimizerResult minimize_I(const LogConcaveFn& h, double s, const DiscreteMeasure& nu, const FProfile& F,
                           const MinimizerOptions& opts) {
  const INuProblem prob(h, s, nu, F);
  auto res = minimize_I_report(prob, opts);
  switch (res.status) {
    case MinimizerStatus::Converged: return res;
    case MinimizerStatus::Flat:
    case MinimizerStatus::Diverging:
      throw Error(ErrorKind::DivergingIterates, std::string("the functional is not coercive (") +
                                                    std::string(to_string(res.status)) + " direction found)");
    case MinimizerStatus::NotConverged:
      throw Error(ErrorKind::NotConverged,
                  "projected gradient norm " + std::to_string(res.projected_grad_norm) + " after " +
                      std::to_string(res.iterations) + " iterations");
  }
  return res;
}

DiscreteMeasure extract_measure(const MinimizerResult& res, const INuProblem& prob) {
  DiscreteMeasure mu;
  const auto& atoms = prob.nu().atoms;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const double w = atoms[i].m * prob.profile().deriv(prob.arg(i, res.point)) / prob.h_pow()[i];
    if (w > 0.0) mu.atoms.push_back({atoms[i].x, w});
  }
  if (mu.atoms.empty()) throw Error(ErrorKind::AllWeightsZero, "F' vanishes at every atom");
  return mu;
}

DiscreteMeasure extract_measure(const MinimizerResult& res, const LogConcaveFn& h, double s, const DiscreteMeasure& nu,
                                const FProfile& F) {
  return extract_measure(res, INuProblem(h, s, nu, F));
}

IsotropyReport check_isotropy(const DiscreteMeasure& mu, double s, double tol) {
  IsotropyReport rep;
  if (mu.atoms.empty()) return rep;
  const int n = static_cast<int>(mu.atoms.front().x.size());
  BlockMat sum = BlockMat::zero(n);
  Vec centre(static_cast<std::size_t>(n), 0.0);
  double total = 0.0;
  for (const auto& a : mu.atoms) {
    if (a.m < 0.0) rep.nonneg = false;
    total += a.m;
    const double r2 = dot(a.x, a.x);
    BlockMat t = contact_tensor(a.x, std::max(0.0, 1.0 - r2));
    t *= a.m;
    sum += t;
    for (int k = 0; k < n; ++k) centre[k] += a.m * a.x[k];
  }
  const BlockMat id_s = BlockMat::id_plus(n, s);
  rep.lambda = sum.frobenius_inner(id_s) / (n + s * s);
  rep.residual_iso = (sum - rep.lambda * id_s).frobenius_norm();
  rep.residual_center = norm2(centre);
  rep.nonzero = total > 0.0;
  rep.pass = rep.nonneg && rep.nonzero && rep.residual_iso <= tol && rep.residual_center <= tol;
  return rep;
}

CoercivityReport coercivity_witness(const INuProblem& prob, int n_dirs, std::uint64_t seed) {
  const int n = prob.n();
  const double s = prob.s();
  const auto basis = trace0_basis(n, s);
  CoercivityReport rep;
  rep.margin = std::numeric_limits<double>::infinity();

  auto test = [&](std::string label, EPoint d) {
    const double nd = norm(d);
    if (nd == 0.0) return;
    d *= 1.0 / nd;
    const double mx = prob.direction_max(d);
    ++rep.directions_tested;
    if (mx < rep.margin) {
      rep.margin = mx;
      rep.worst = {label, d, mx};
    }
    if (mx <= 1e-12) {
      rep.pass = false;
      rep.failures.push_back({std::move(label), std::move(d), mx});
    }
  };

  // analytic candidates first
  const EPoint flat{BlockMat::id_plus(n, -n / s), Vec(static_cast<std::size_t>(n), 0.0)};
  test("+(Id+(-n/s),0)", flat);
  test("-(Id+(-n/s),0)", -1.0 * flat);
  for (int k = 0; k < n; ++k) {
    EPoint w = EPoint::zero(n);
    w.shift[k] = 1.0;
    test("+w" + std::to_string(k), w);
    test("-w" + std::to_string(k), -1.0 * w);
  }
  for (std::size_t k = 0; k < basis.size(); ++k) {
    test("+basis" + std::to_string(k), basis[k]);
    test("-basis" + std::to_string(k), -1.0 * basis[k]);
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec c(basis.size());
  for (int k = 0; k < n_dirs; ++k) {
    for (auto& v : c) v = gauss(rng);
    test("sample" + std::to_string(k), from_coordinates(c, basis));
  }
  return rep;
}

}  // namespace fjohn
