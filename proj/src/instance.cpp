#include "fjohn/instance.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace fjohn {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::InvalidInput, what); }

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) bad(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) bad("unknown key '" + it.key() + "' in " + where);
}

double number(const json& v, const std::string& what) {
  if (!v.is_number()) bad(what + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad(what + " must be finite");
  return x;
}

int integer(const json& v, const std::string& what) {
  if (!v.is_number_integer()) bad(what + " must be an integer");
  return v.get<int>();
}

Vec vec_of(const json& v, const std::string& what, std::optional<int> dim = std::nullopt) {
  if (!v.is_array()) bad(what + " must be an array of numbers");
  Vec out;
  for (const auto& e : v) out.push_back(number(e, what));
  if (dim && static_cast<int>(out.size()) != *dim)
    throw Error(ErrorKind::DimensionMismatch, what + " has length " + std::to_string(out.size()) + ", expected " +
                                                  std::to_string(*dim));
  return out;
}

std::vector<Vec> points_of(const json& v, const std::string& what, int n) {
  if (!v.is_array()) bad(what + " must be an array of points");
  std::vector<Vec> out;
  for (const auto& p : v) out.push_back(vec_of(p, what, n));
  return out;
}

SymMatrix matrix_of(const json& v, const std::string& what, int n) {
  if (!v.is_array() || static_cast<int>(v.size()) != n) bad(what + " must be an n x n array");
  std::vector<double> rows;
  for (const auto& r : v) {
    const Vec row = vec_of(r, what, n);
    rows.insert(rows.end(), row.begin(), row.end());
  }
  const auto m = SymMatrix::from_rows(n, rows);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j)
      if (std::abs(rows[static_cast<std::size_t>(i) * n + j] - m(i, j)) > 1e-12) bad(what + " must be symmetric");
  return m;
}

struct HSpec {
  std::string label;
  LogConcaveFn h;
  std::optional<Fixture> fixture;
};

FixtureParams fixture_params(const std::string& name, const json* params, int n, double s) {
  FixtureParams fp;
  fp.n = n;
  fp.s = s;
  if (params) {
    check_keys(*params, {"rho1sq", "rho2sq", "points"}, "h.params");
    if (auto* v = find(*params, "rho1sq")) fp.rho1_sq = number(*v, "h.params.rho1sq");
    if (auto* v = find(*params, "rho2sq")) fp.rho2_sq = number(*v, "h.params.rho2sq");
    if (auto* v = find(*params, "points")) fp.points = points_of(*v, "h.params.points", n);
  }
  if (name == "tangent" && fp.points.empty()) bad("the tangent fixture needs h.params.points");
  return fp;
}

Fixture build_fixture(const std::string& name, const FixtureParams& fp) {
  if (!(fp.s > 0.0)) bad("s must be positive");
  if (fp.n < 1 || fp.n > 8) bad("n must lie in 1..8");
  if (name == "cross") return cross_fixture(fp.n, fp.s);
  if (name == "two-level-cross") return two_level_cross_fixture(fp.n, fp.s, fp.rho1_sq, fp.rho2_sq);
  if (name == "star") {
    if (fp.n != 2) throw Error(ErrorKind::DimensionMismatch, "the star fixture lives in the plane (n = 2)");
    return star_fixture(fp.s, fp.rho1_sq, fp.rho2_sq);
  }
  if (name == "tangent") return tangent_fixture(fp.n, fp.s, fp.points);
  bad("unknown fixture '" + name + "' (cross, two-level-cross, star, tangent)");
}

HSpec parse_h(const json& h, int n, double s) {
  if (!h.is_object()) bad("h must be an object");
  if (auto* f = find(h, "fixture")) {
    check_keys(h, {"fixture", "params"}, "h");
    if (!f->is_string()) bad("h.fixture must be a string");
    const auto name = f->get<std::string>();
    auto fx = build_fixture(name, fixture_params(name, find(h, "params"), n, s));
    return {name, fx.h, fx};
  }
  if (auto* pcs = find(h, "pieces")) {
    check_keys(h, {"pieces", "domain_radius"}, "h");
    if (!pcs->is_array() || pcs->empty()) bad("h.pieces must be a non-empty array");
    PiecewiseLogAffine form;
    for (const auto& p : *pcs) {
      check_keys(p, {"a", "b"}, "h.pieces[]");
      if (!find(p, "a") || !find(p, "b")) bad("every piece needs 'a' and 'b'");
      form.pieces.push_back({vec_of(p["a"], "h.pieces[].a", n), number(p["b"], "h.pieces[].b")});
    }
    if (auto* r = find(h, "domain_radius")) {
      const double rad = number(*r, "h.domain_radius");
      if (!(rad > 0.0)) bad("h.domain_radius must be positive");
      form.domain_radius = rad;
    }
    return {"pieces", LogConcaveFn(n, std::move(form)), std::nullopt};
  }
  if (auto* e = find(h, "ellipsoid")) {
    check_keys(h, {"ellipsoid", "power", "scale"}, "h");
    check_keys(*e, {"A", "alpha", "center"}, "h.ellipsoid");
    EllipsoidHeightPower form;
    form.ellipsoid = EPoint::identity(n);
    if (auto* a = find(*e, "A")) form.ellipsoid.mat.diag = matrix_of(*a, "h.ellipsoid.A", n);
    if (auto* a = find(*e, "alpha")) form.ellipsoid.mat.corner = number(*a, "h.ellipsoid.alpha");
    if (auto* c = find(*e, "center")) form.ellipsoid.shift = vec_of(*c, "h.ellipsoid.center", n);
    if (auto* p = find(h, "power")) form.power = number(*p, "h.power");
    if (auto* p = find(h, "scale")) form.scale = number(*p, "h.scale");
    if (!is_spd(form.ellipsoid.mat.diag)) throw Error(ErrorKind::SingularA, "h.ellipsoid.A must be positive definite");
    if (!(form.ellipsoid.mat.corner > 0.0)) throw Error(ErrorKind::NonPositiveCorner, "h.ellipsoid.alpha must be > 0");
    return {"ellipsoid", LogConcaveFn(n, std::move(form)), std::nullopt};
  }
  bad("h needs one of 'fixture', 'pieces', 'ellipsoid'");
}

ProfilePair parse_profile(const json& p) {
  if (p.is_string()) {
    if (p.get<std::string>() != "canonical") bad("profile must be \"canonical\" or a custom object");
    return canonical_pair();
  }
  check_keys(p, {"f", "g"}, "profile");
  if (!find(p, "f") || !find(p, "g")) bad("custom profile needs 'f' and 'g'");
  const auto& f = p["f"];
  const auto& g = p["g"];
  check_keys(f, {"knots", "values", "right_slope"}, "profile.f");
  check_keys(g, {"knots", "values"}, "profile.g");
  if (!find(f, "knots") || !find(f, "values") || !find(g, "knots") || !find(g, "values"))
    bad("profile knots and values are required");
  auto fk = vec_of(f["knots"], "profile.f.knots");
  auto fv = vec_of(f["values"], "profile.f.values", static_cast<int>(fk.size()));
  auto gk = vec_of(g["knots"], "profile.g.knots");
  auto gv = vec_of(g["values"], "profile.g.values", static_cast<int>(gk.size()));
  const double slope = find(f, "right_slope") ? number(f["right_slope"], "profile.f.right_slope") : 0.0;
  try {
    return custom_pair(std::move(fk), std::move(fv), slope, std::move(gk), std::move(gv));
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    bad(std::string("profile: ") + e.what());
  }
}

double hausdorff(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  auto one_sided = [](const std::vector<Vec>& p, const std::vector<Vec>& q) {
    double worst = 0.0;
    for (const auto& x : p) {
      double best = INFINITY;
      for (const auto& y : q) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) d2 += (x[k] - y[k]) * (x[k] - y[k]);
        best = std::min(best, std::sqrt(d2));
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  if (a.empty() || b.empty()) return a.empty() && b.empty() ? 0.0 : INFINITY;
  return std::max(one_sided(a, b), one_sided(b, a));
}

json points_json(const std::vector<Vec>& pts) {
  json out = json::array();
  for (const auto& p : pts) out.push_back(to_json(p));
  return out;
}

json error_json(const Error& e) { return {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}}; }

MinimizerOptions minimizer_options(const Instance& inst) {
  MinimizerOptions o;
  o.tol = inst.tol.minimizer;
  return o;
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch:
    case ErrorKind::NonPositiveCorner:
    case ErrorKind::PointOutsideBall:
    case ErrorKind::PointOnBoundary:
    case ErrorKind::InfeasibleWeights:
    case ErrorKind::BadR:
    case ErrorKind::InvalidInput:
    case ErrorKind::NotProper:
    case ErrorKind::AtomOffContactSet:
    case ErrorKind::ZeroValueAtom:
      return ExitInput;
    case ErrorKind::NotConverged:
      return ExitNotConverged;
    case ErrorKind::SingularA:
    case ErrorKind::ZeroValue:
    case ErrorKind::SubgradientAmbiguous:
    case ErrorKind::NotJohnPosition:
    case ErrorKind::DivergingIterates:
    case ErrorKind::AllWeightsZero:
    case ErrorKind::NotInBr:
      return ExitMath;
  }
  return ExitMath;
}

// ---------------------------------------------------------------------------
// instances

std::vector<Vec> Instance::contact_points() const {
  if (!contacts.empty()) return contacts;
  const auto cs = detect_contacts(h, s, contact_grid, tol.gap);
  if (cs.continuum)
    bad("the contact set of h is a continuum; list finitely many contact points under 'contacts'");
  return cs.points;
}

DiscreteMeasure Instance::nu() const {
  switch (nu_kind) {
    case NuKind::Atoms:
      return nu_atoms;
    case NuKind::Counting:
      return DiscreteMeasure::counting(contact_points());
    case NuKind::Calibrated: {
      const auto pts = contact_points();
      if (weights.size() != pts.size()) bad("nu \"calibrated\" needs one weight per contact point");
      DiscreteMeasure m;
      for (std::size_t i = 0; i < pts.size(); ++i) m.atoms.push_back({pts[i], weights[i] * h.eval_pow(pts[i], s)});
      return m;
    }
  }
  return {};
}

json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    bad(std::string("malformed JSON: ") + e.what());
  }
}

Instance parse_instance(const json& doc) {
  try {
    check_keys(doc,
               {"version", "n", "s", "h", "contacts", "weights", "nu", "profile", "tolerances", "schedule",
                "quadrature", "seed", "coercivity_dirs", "contact_grid", "description"},
               "instance");
    if (auto* v = find(doc, "version"); v && integer(*v, "version") != 1) bad("unsupported instance version");
    if (!find(doc, "n") || !find(doc, "s") || !find(doc, "h")) bad("instance needs 'n', 's' and 'h'");
    if (auto* d = find(doc, "description"); d && !d->is_string()) bad("description must be a string");

    Instance inst;
    inst.source = doc;
    inst.n = integer(doc["n"], "n");
    if (inst.n < 1 || inst.n > 8) bad("n must lie in 1..8");
    inst.s = number(doc["s"], "s");
    if (!(inst.s > 0.0)) bad("s must be positive");

    auto hs = parse_h(doc["h"], inst.n, inst.s);
    inst.h_label = hs.label;
    inst.h = std::move(hs.h);
    if (hs.fixture) {
      inst.contacts = hs.fixture->contacts.points;
      inst.weights = hs.fixture->weights;
    }
    if (auto* c = find(doc, "contacts")) inst.contacts = points_of(*c, "contacts", inst.n);
    if (auto* w = find(doc, "weights")) inst.weights = vec_of(*w, "weights");
    if (!inst.weights.empty() && inst.weights.size() != inst.contacts.size())
      throw Error(ErrorKind::DimensionMismatch, "weights and contacts differ in length");
    for (const auto& u : inst.contacts)
      if (dot(u, u) >= 1.0) throw Error(ErrorKind::PointOnBoundary, "contact points must lie in the open unit ball");

    if (auto* nu = find(doc, "nu")) {
      if (nu->is_string()) {
        const auto k = nu->get<std::string>();
        if (k == "counting")
          inst.nu_kind = NuKind::Counting;
        else if (k == "calibrated")
          inst.nu_kind = NuKind::Calibrated;
        else
          bad("nu must be \"counting\", \"calibrated\" or {\"atoms\": [...]}");
      } else {
        check_keys(*nu, {"atoms"}, "nu");
        if (!find(*nu, "atoms") || !(*nu)["atoms"].is_array()) bad("nu.atoms must be an array");
        inst.nu_kind = NuKind::Atoms;
        for (const auto& a : (*nu)["atoms"]) {
          check_keys(a, {"x", "m"}, "nu.atoms[]");
          if (!find(a, "x") || !find(a, "m")) bad("every atom needs 'x' and 'm'");
          inst.nu_atoms.atoms.push_back({vec_of(a["x"], "nu.atoms[].x", inst.n), number(a["m"], "nu.atoms[].m")});
        }
        inst.nu_atoms.validate(inst.n);
      }
    }
    if (auto* p = find(doc, "profile")) inst.profile = parse_profile(*p);

    if (auto* t = find(doc, "tolerances")) {
      check_keys(*t, {"contact", "decomposition", "gap", "minimizer", "lr_grad"}, "tolerances");
      auto positive = [&](const char* key, double& dst) {
        if (auto* v = find(*t, key)) {
          dst = number(*v, std::string("tolerances.") + key);
          if (!(dst > 0.0)) bad(std::string("tolerances.") + key + " must be positive");
        }
      };
      positive("contact", inst.tol.contact);
      positive("decomposition", inst.tol.decomposition);
      positive("gap", inst.tol.gap);
      positive("minimizer", inst.tol.minimizer);
      positive("lr_grad", inst.tol.lr_grad);
    }
    if (auto* sch = find(doc, "schedule")) {
      inst.schedule = vec_of(*sch, "schedule");
      if (inst.schedule.empty()) throw Error(ErrorKind::BadR, "empty r schedule");
      for (std::size_t i = 0; i < inst.schedule.size(); ++i) {
        const double r = inst.schedule[i];
        if (!(r > 0.5 && r < 1.0)) throw Error(ErrorKind::BadR, "schedule entries must lie in (1/2, 1)");
        if (i > 0 && !(r > inst.schedule[i - 1])) throw Error(ErrorKind::BadR, "schedule must increase strictly");
      }
    }
    inst.quad.tol = inst.n == 1 ? 1e-9 : 1e-5;
    if (auto* q = find(doc, "quadrature")) {
      check_keys(*q, {"x_nodes_per_axis", "t_nodes", "domain_radius", "tol"}, "quadrature");
      if (auto* v = find(*q, "x_nodes_per_axis")) inst.quad.x_nodes_per_axis = integer(*v, "quadrature.x_nodes_per_axis");
      if (auto* v = find(*q, "t_nodes")) inst.quad.t_nodes = integer(*v, "quadrature.t_nodes");
      if (auto* v = find(*q, "domain_radius")) inst.quad.domain_radius = number(*v, "quadrature.domain_radius");
      if (auto* v = find(*q, "tol")) inst.quad.tol = number(*v, "quadrature.tol");
      if (inst.quad.x_nodes_per_axis < 1 || inst.quad.t_nodes < 1 || !(inst.quad.tol > 0.0) ||
          inst.quad.domain_radius < 0.0)
        bad("quadrature settings out of range");
    }
    if (auto* v = find(doc, "seed")) {
      if (!v->is_number_unsigned()) bad("seed must be a non-negative integer");
      inst.seed = v->get<std::uint64_t>();
    }
    if (auto* v = find(doc, "coercivity_dirs")) {
      inst.coercivity_dirs = integer(*v, "coercivity_dirs");
      if (inst.coercivity_dirs < 0) bad("coercivity_dirs must be non-negative");
    }
    if (auto* v = find(doc, "contact_grid")) inst.contact_grid = integer(*v, "contact_grid");
    return inst;
  } catch (const json::exception& e) {
    bad(std::string("instance: ") + e.what());
  }
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad("cannot open instance file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_instance(parse_json_text(ss.str()));
}

std::string instance_hash(const json& doc) {
  const std::string text = doc.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json fixture_document(const std::string& name, const FixtureParams& params) {
  const auto fx = build_fixture(name, params);
  json h = {{"fixture", name}};
  if (name == "two-level-cross" || name == "star")
    h["params"] = {{"rho1sq", params.rho1_sq}, {"rho2sq", params.rho2_sq}};
  if (name == "tangent") h["params"] = {{"points", points_json(params.points)}};
  json doc = {{"version", 1},
              {"n", params.n},
              {"s", params.s},
              {"h", h},
              {"contacts", points_json(fx.contacts.points)},
              {"nu", "counting"},
              {"profile", "canonical"},
              {"schedule", {0.8, 0.9, 0.95, 0.99}},
              {"quadrature", {{"tol", params.n == 1 ? 1e-9 : 1e-5}}},
              {"seed", 42},
              {"coercivity_dirs", 1000}};
  if (!fx.weights.empty()) doc["weights"] = to_json(fx.weights);
  return doc;
}

// ---------------------------------------------------------------------------
// serialisation

json to_json(const Vec& v) {
  json out = json::array();
  for (double x : v) out.push_back(x);
  return out;
}

json to_json(const EPoint& p) {
  const int n = p.n();
  json rows = json::array();
  for (int i = 0; i < n; ++i) {
    json row = json::array();
    for (int j = 0; j < n; ++j) row.push_back(p.mat.diag(i, j));
    rows.push_back(row);
  }
  return {{"M", rows}, {"beta", p.mat.corner}, {"w", to_json(p.shift)}};
}

json to_json(const DiscreteMeasure& m) {
  json out = json::array();
  for (const auto& a : m.atoms) out.push_back({{"x", to_json(a.x)}, {"m", a.m}});
  return out;
}

json to_json(const DecompositionReport& r) {
  return {{"residual_a", r.residual_a}, {"residual_b", r.residual_b}, {"residual_c", r.residual_c},
          {"residual_d", r.residual_d}, {"pass_a", r.pass_a},         {"pass_b", r.pass_b},
          {"pass_c", r.pass_c},         {"pass_d", r.pass_d},         {"all_pass", r.all_pass()}};
}

json to_json(const MinimizerResult& r) {
  json flat = json::array();
  for (const auto& d : r.flat_directions) flat.push_back(to_json(d));
  return {{"point", to_json(r.point)},
          {"value", r.value},
          {"projected_grad_norm", r.projected_grad_norm},
          {"lambda", r.lambda},
          {"lambda_a", r.lambda_a},
          {"lambda_b", r.lambda_b},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"status", std::string(to_string(r.status))},
          {"flat_directions", flat}};
}

json to_json(const IsotropyReport& r) {
  return {{"lambda", r.lambda},   {"residual_iso", r.residual_iso}, {"residual_center", r.residual_center},
          {"nonneg", r.nonneg},   {"nonzero", r.nonzero},           {"pass", r.pass}};
}

json to_json(const CoercivityReport& r) {
  auto dir = [](const WitnessDirection& d) {
    return json{{"label", d.label}, {"direction", to_json(d.direction)}, {"max_expr", d.max_expr}};
  };
  json failures = json::array();
  for (const auto& f : r.failures) failures.push_back(dir(f));
  return {{"pass", r.pass},
          {"margin", r.margin},
          {"directions_tested", r.directions_tested},
          {"worst", dir(r.worst)},
          {"failures", failures}};
}

json to_json(const ProfileReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    json j = {{"name", c.name}, {"pass", c.pass}};
    j["counterexample"] = c.counterexample ? json(*c.counterexample) : json(nullptr);
    checks.push_back(j);
  }
  return {{"checks", checks}, {"all_pass", r.all_pass()}};
}

json to_json(const RSweepResult& r) {
  json records = json::array();
  for (const auto& rec : r.records) {
    json j = {{"r", rec.r},
              {"dist_to_identity", rec.dist_to_identity},
              {"normalized_s_trace", rec.normalized_s_trace},
              {"secant_to_M0", rec.secant_to_M0},
              {"secant_counting", rec.secant_counting},
              {"mu_r_test_integrals", to_json(rec.mu_r_test_integrals)},
              {"mu_r_reference", to_json(rec.mu_r_reference)},
              {"mu_r_max_rel_error", rec.mu_r_max_rel_error},
              {"lambda", rec.lambda},
              {"scaled_value", rec.scaled_value},
              {"grad_norm", rec.grad_norm},
              {"s_det", rec.s_det},
              {"converged", rec.converged}};
    j["error"] = rec.error ? json(*rec.error) : json(nullptr);
    records.push_back(j);
  }
  json bumps = json::array();
  for (const auto& b : r.bumps)
    bumps.push_back({{"label", b.label}, {"center", to_json(b.center)}, {"radius", b.radius}, {"taper", b.taper}});
  json mins = json::array();
  for (const auto& p : r.minimizers) mins.push_back(to_json(p));
  json resc = json::array();
  for (const auto& p : r.rescaled) resc.push_back(to_json(p));
  return {{"schedule", to_json(r.schedule)},
          {"records", records},
          {"minimizers", mins},
          {"rescaled", resc},
          {"lambda_r", to_json(r.lambda_r)},
          {"bumps", bumps},
          {"reference", to_json(r.reference)},
          {"counting_reference", to_json(r.counting_reference)},
          {"dist_decreasing", r.dist_decreasing},
          {"trace_decreasing", r.trace_decreasing},
          {"secant_decreasing", r.secant_decreasing},
          {"mu_error_decreasing", r.mu_error_decreasing}};
}

json report_envelope(const std::string& command, const std::string& hash, json result) {
  return {{"version", 1},
          {"command", command},
          {"instance_hash", hash.empty() ? json(nullptr) : json(hash)},
          {"result", std::move(result)}};
}

std::string dump_report(const json& report) { return report.dump() + "\n"; }

// ---------------------------------------------------------------------------
// commands

CommandOutput run_verify(const Instance& inst) {
  CommandOutput out;
  const auto pts = inst.contact_points();
  if (inst.weights.empty()) bad("verify needs 'weights' (or a fixture that constructs them)");
  if (inst.weights.size() != pts.size()) throw Error(ErrorKind::DimensionMismatch, "weights and contacts differ");
  const auto rep = verify_decomposition(pts, inst.weights, inst.h, inst.s, inst.tol.decomposition);
  json res = to_json(rep);
  res["points"] = points_json(pts);
  res["weights"] = to_json(inst.weights);
  res["tol"] = inst.tol.decomposition;
  out.report = report_envelope("verify", instance_hash(inst.source), res);
  if (!rep.all_pass()) {
    out.exit = ExitMath;
    out.diagnostics.push_back("decomposition of the identity fails");
  }
  return out;
}

CommandOutput run_contacts(const Instance& inst) {
  CommandOutput out;
  const auto cs = detect_contacts(inst.h, inst.s, inst.contact_grid, inst.tol.gap);
  json res = {{"points", points_json(cs.points)},
              {"h_values", to_json(cs.h_values)},
              {"continuum", cs.continuum},
              {"count", cs.points.size()},
              {"gap_tol", cs.gap_tol},
              {"grid_per_axis", inst.contact_grid}};
  if (!inst.contacts.empty() && !cs.continuum) {
    const double d = hausdorff(cs.points, inst.contacts);
    res["hausdorff_to_listed"] = d;
    res["matches_listed"] = d <= 1e-6;
    if (!(d <= 1e-6)) {
      out.exit = ExitMath;
      out.diagnostics.push_back("detected contacts differ from the listed ones (Hausdorff distance " +
                                std::to_string(d) + ")");
    }
  }
  out.report = report_envelope("contacts", instance_hash(inst.source), res);
  return out;
}

CommandOutput run_minimize_i1(const Instance& inst) {
  CommandOutput out;
  const INuProblem prob(inst.h, inst.s, inst.nu(), make_F(inst.profile), inst.tol.contact);
  const auto res = minimize_I_report(prob, minimizer_options(inst));
  json r = {{"minimizer", to_json(res)}, {"nu", to_json(prob.nu())}};
  r["measure"] = nullptr;
  r["isotropy"] = nullptr;
  switch (res.status) {
    case MinimizerStatus::Converged: {
      const auto mu = extract_measure(res, prob);
      const auto iso = check_isotropy(mu, inst.s);
      r["measure"] = to_json(mu);
      r["isotropy"] = to_json(iso);
      if (!iso.pass) {
        out.exit = ExitMath;
        out.diagnostics.push_back("the extracted measure is not s-isotropic");
      }
      break;
    }
    case MinimizerStatus::Flat:
    case MinimizerStatus::Diverging:
      out.exit = ExitMath;
      out.diagnostics.push_back("I_nu has no minimiser: " + std::string(to_string(res.status)) +
                                " (run 'coercivity' for the failing direction)");
      break;
    case MinimizerStatus::NotConverged:
      out.exit = ExitNotConverged;
      out.diagnostics.push_back("minimiser did not converge within the iteration budget");
      break;
  }
  out.report = report_envelope("minimize-i1", instance_hash(inst.source), r);
  return out;
}

CommandOutput run_coercivity(const Instance& inst, std::optional<int> dirs, std::optional<std::uint64_t> seed) {
  CommandOutput out;
  const INuProblem prob(inst.h, inst.s, inst.nu(), make_F(inst.profile), inst.tol.contact);
  const int nd = dirs.value_or(inst.coercivity_dirs);
  const std::uint64_t sd = seed.value_or(inst.seed);
  const auto rep = coercivity_witness(prob, nd, sd);
  json r = to_json(rep);
  r["seed"] = sd;
  r["sampled_directions"] = nd;
  out.report = report_envelope("coercivity", instance_hash(inst.source), r);
  if (!rep.pass) {
    out.exit = ExitMath;
    std::ostringstream msg;
    msg.precision(6);
    msg << "not coercive: " << rep.failures.size() << " failing direction(s); worst '" << rep.worst.label
        << "' with max expression " << rep.worst.max_expr;
    out.diagnostics.push_back(msg.str());
    for (const auto& f : rep.failures) out.diagnostics.push_back("  flat direction " + f.label + ": " + to_json(f.direction).dump());
  }
  return out;
}

CommandOutput run_sweep_r(const Instance& inst) {
  CommandOutput out;
  LrMinimizerOptions opts;
  opts.grad_tol = inst.tol.lr_grad;
  const auto res = r_sweep(inst.h, inst.s, inst.profile, inst.contact_points(), inst.schedule, inst.quad, opts);
  json r = to_json(res);
  r["quadrature"] = {{"x_nodes_per_axis", inst.quad.x_nodes_per_axis},
                     {"t_nodes", inst.quad.t_nodes},
                     {"domain_radius", inst.quad.domain_radius},
                     {"tol", inst.quad.tol}};
  out.report = report_envelope("sweep-r", instance_hash(inst.source), r);
  out.csv = sweep_csv(res);
  bool other_failure = false, stalled = false;
  for (const auto& rec : res.records) {
    if (rec.converged) continue;
    out.diagnostics.push_back("r = " + std::to_string(rec.r) + ": " + rec.error.value_or("not converged"));
    if (rec.error && rec.error->rfind("not converged", 0) != 0)
      other_failure = true;
    else
      stalled = true;
  }
  if (other_failure)
    out.exit = ExitMath;
  else if (stalled)
    out.exit = ExitNotConverged;
  return out;
}

CommandOutput run_profiles_check(const Instance& inst) {
  CommandOutput out;
  const auto pr = validate_profiles(inst.profile);
  const auto F = make_F(inst.profile);
  const auto fr = validate_F(F);
  json r = {{"profile", inst.profile.name},
            {"closed_form", inst.profile.has_closed_form},
            {"pair", to_json(pr)},
            {"F", to_json(fr)},
            {"F_at_0", F.eval(0.0)},
            {"F_prime_at_0", F.deriv(0.0)},
            {"F_at_1", F.eval(1.0)}};
  out.report = report_envelope("profiles-check", instance_hash(inst.source), r);
  if (!pr.all_pass() || !fr.all_pass()) {
    out.exit = ExitMath;
    for (const auto* rep : {&pr, &fr})
      for (const auto& c : rep->checks)
        if (!c.pass) out.diagnostics.push_back("property " + c.name + " fails");
  }
  return out;
}

CommandOutput run_command(const std::string& command, const Instance& inst, std::optional<std::uint64_t> seed,
                          std::optional<int> dirs) {
  try {
    if (command == "verify") return run_verify(inst);
    if (command == "contacts") return run_contacts(inst);
    if (command == "minimize-i1") return run_minimize_i1(inst);
    if (command == "coercivity") return run_coercivity(inst, dirs, seed);
    if (command == "sweep-r") return run_sweep_r(inst);
    if (command == "profiles-check") return run_profiles_check(inst);
    bad("unknown command '" + command + "'");
  } catch (const Error& e) {
    CommandOutput out;
    out.exit = exit_code(e.kind());
    out.report = report_envelope(command, instance_hash(inst.source), {{"error", error_json(e)}});
    out.diagnostics.push_back(e.what());
    return out;
  }
}

}  // namespace fjohn
