// fjohn: John s-position instances, the I_nu minimiser and the r -> 1 sweep
// from the command line. JSON reports go to stdout (and --out), human
// diagnostics to stderr.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fjohn/instance.hpp"

namespace {

using fjohn::json;

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return false;
  out << text;
  return static_cast<bool>(out);
}

int fail_input(const std::string& command, const std::string& message) {
  std::cerr << "fjohn " << command << ": " << message << "\n";
  std::cout << fjohn::dump_report(fjohn::report_envelope(
      command, "", {{"error", {{"kind", "InvalidInput"}, {"message", message}}}}));
  return fjohn::ExitInput;
}

std::vector<fjohn::Vec> parse_points(const std::string& text) {
  const auto doc = fjohn::parse_json_text(text);
  if (!doc.is_array()) throw fjohn::Error(fjohn::ErrorKind::InvalidInput, "--points must be a JSON array of points");
  std::vector<fjohn::Vec> pts;
  for (const auto& p : doc) {
    if (p.is_number()) {
      pts.push_back({p.get<double>()});
      continue;
    }
    if (!p.is_array()) throw fjohn::Error(fjohn::ErrorKind::InvalidInput, "--points entries must be arrays");
    fjohn::Vec v;
    for (const auto& c : p) {
      if (!c.is_number()) throw fjohn::Error(fjohn::ErrorKind::InvalidInput, "--points coordinates must be numbers");
      v.push_back(c.get<double>());
    }
    pts.push_back(v);
  }
  return pts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Functional John ellipsoids: decompositions of the identity, I_nu and the r -> 1 limit"};
  app.require_subcommand(1);

  std::string instance_path, out_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> dirs;

  std::string fixture_name;
  fjohn::FixtureParams fp;
  std::string points_text;
  auto* fixture = app.add_subcommand("fixture", "Emit a fixture instance (cross, two-level-cross, star, tangent)");
  fixture->add_option("name", fixture_name, "Fixture name")->required();
  fixture->add_option("--n", fp.n, "Dimension");
  fixture->add_option("--s", fp.s, "Lifting exponent s > 0");
  fixture->add_option("--rho1sq", fp.rho1_sq, "Inner squared radius (two-level-cross, star)");
  fixture->add_option("--rho2sq", fp.rho2_sq, "Outer squared radius (two-level-cross, star)");
  fixture->add_option("--points", points_text, "Tangent points as JSON, e.g. [[0.5],[-0.5]]");
  fixture->add_option("--out", out_path, "Write the instance here instead of stdout");

  const char* commands[][2] = {
      {"verify", "Check the decomposition of the identity for the listed contacts and weights"},
      {"contacts", "Detect the contact set of h with the unit-ball John s-function"},
      {"minimize-i1", "Minimise I_nu and report the extracted isotropic measure"},
      {"coercivity", "Search for directions along which I_nu fails to grow"},
      {"sweep-r", "Minimise L_r along the r schedule; --out receives the CSV"},
      {"profiles-check", "Validate the profile pair f, g and the convolution F"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c[0], c[1]);
    auto* inst_opt = sub->add_option("--instance", instance_path, "Instance JSON file");
    if (std::string(c[0]) != "profiles-check") inst_opt->required();
    sub->add_option("--out", out_path, "Output file (report JSON; CSV for sweep-r)");
    sub->add_option("--seed", seed, "Override the instance seed");
    if (std::string(c[0]) == "coercivity") sub->add_option("--dirs", dirs, "Number of sampled directions");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return fjohn::ExitInput;
  }

  if (fixture->parsed()) {
    try {
      if (!points_text.empty()) fp.points = parse_points(points_text);
      if (!fp.points.empty() && fixture_name == "tangent") fp.n = static_cast<int>(fp.points.front().size());
      const auto doc = fjohn::fixture_document(fixture_name, fp);
      const std::string text = doc.dump(2) + "\n";
      if (!out_path.empty()) {
        if (!write_file(out_path, text)) return fail_input("fixture", "cannot write '" + out_path + "'");
        json res = {{"file", out_path}, {"fixture", fixture_name}};
        if (doc.contains("weights")) res["weights"] = doc["weights"];
        std::cout << fjohn::dump_report(fjohn::report_envelope("fixture", fjohn::instance_hash(doc), res));
      } else {
        std::cout << text;
      }
      return fjohn::ExitOk;
    } catch (const fjohn::Error& e) {
      std::cerr << "fjohn fixture: " << e.what() << "\n";
      std::cout << fjohn::dump_report(fjohn::report_envelope(
          "fixture", "", {{"error", {{"kind", std::string(fjohn::to_string(e.kind()))}, {"message", e.what()}}}}));
      return fjohn::exit_code(e.kind());
    }
  }

  std::string command;
  for (auto* sub : subs)
    if (sub->parsed()) command = sub->get_name();

  fjohn::Instance inst;
  try {
    if (!instance_path.empty())
      inst = fjohn::load_instance(instance_path);
    else
      inst.source = json::object();
  } catch (const fjohn::Error& e) {
    std::cerr << "fjohn " << command << ": " << e.what() << "\n";
    std::cout << fjohn::dump_report(fjohn::report_envelope(
        command, "", {{"error", {{"kind", std::string(fjohn::to_string(e.kind()))}, {"message", e.what()}}}}));
    return fjohn::exit_code(e.kind());
  }

  auto out = fjohn::run_command(command, inst, seed, dirs);
  for (const auto& d : out.diagnostics) std::cerr << "fjohn " << command << ": " << d << "\n";
  const std::string text = fjohn::dump_report(out.report);
  std::cout << text;
  if (!out_path.empty()) {
    const bool ok = command == "sweep-r" ? write_file(out_path, out.csv) : write_file(out_path, text);
    if (!ok) {
      std::cerr << "fjohn " << command << ": cannot write '" << out_path << "'\n";
      return fjohn::ExitInput;
    }
  }
  return out.exit;
}
