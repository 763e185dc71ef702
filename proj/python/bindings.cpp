// Python access to the fjohn commands. Instances and reports cross the
// boundary as JSON text; the package's __init__ turns them into dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "fjohn/instance.hpp"

namespace py = pybind11;

namespace {

std::pair<std::string, int> run_json(const std::string& command, const std::string& instance_text,
                                     std::optional<std::uint64_t> seed, std::optional<int> dirs) {
  const auto inst = fjohn::parse_instance(fjohn::parse_json_text(instance_text));
  auto out = fjohn::run_command(command, inst, seed, dirs);
  return {fjohn::dump_report(out.report), out.exit};
}

std::string fixture_json(const std::string& name, int n, double s, double rho1sq, double rho2sq,
                         const std::vector<std::vector<double>>& points) {
  fjohn::FixtureParams fp;
  fp.n = n;
  fp.s = s;
  fp.rho1_sq = rho1sq;
  fp.rho2_sq = rho2sq;
  fp.points = points;
  return fjohn::fixture_document(name, fp).dump();
}

std::string sweep_csv_of(const std::string& instance_text) {
  const auto inst = fjohn::parse_instance(fjohn::parse_json_text(instance_text));
  return fjohn::run_sweep_r(inst).csv;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Functional John ellipsoids: decompositions of the identity, I_nu and the r -> 1 limit";

  // messages start with the error kind, e.g. "InfeasibleWeights: ..."
  py::register_exception<fjohn::Error>(m, "FjohnError");

  m.def("run_json", &run_json, py::arg("command"), py::arg("instance"), py::arg("seed") = py::none(),
        py::arg("dirs") = py::none(),
        "Run a command on an instance given as JSON text; returns (report JSON, exit code).");
  m.def("fixture_json", &fixture_json, py::arg("name"), py::arg("n") = 1, py::arg("s") = 1.0,
        py::arg("rho1sq") = 0.4, py::arg("rho2sq") = 0.8, py::arg("points") = std::vector<std::vector<double>>{},
        "Instance document (JSON text) for cross, two-level-cross, star or tangent.");
  m.def("sweep_csv", &sweep_csv_of, py::arg("instance"), "CSV of the r sweep for an instance given as JSON text.");
  m.def(
      "instance_hash", [](const std::string& text) { return fjohn::instance_hash(fjohn::parse_json_text(text)); },
      py::arg("instance"));
  m.def(
      "exit_code", [](const std::string& kind) {
        for (int k = 0; k <= static_cast<int>(fjohn::ErrorKind::InvalidInput); ++k) {
          const auto e = static_cast<fjohn::ErrorKind>(k);
          if (fjohn::to_string(e) == kind) return fjohn::exit_code(e);
        }
        throw py::value_error("unknown error kind '" + kind + "'");
      },
      py::arg("kind"));

  const auto F = fjohn::make_F(fjohn::canonical_pair());
  m.def("F", [F](double x) { return F.eval(x); }, py::arg("x"), "Convolution F of the canonical profile pair.");
  m.def("F_prime", [F](double x) { return F.deriv(x); }, py::arg("x"));
}
