#pragma once

// Problem instances as JSON documents, their canonical hash, and the
// commands of the fjohn tool as library calls returning JSON reports.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fjohn/contact.hpp"
#include "fjohn/errors.hpp"
#include "fjohn/ifunc.hpp"
#include "fjohn/lfunc.hpp"
#include "fjohn/logconcave.hpp"
#include "fjohn/profiles.hpp"

namespace fjohn {

using json = nlohmann::json;

/// Input problems (bad files, schema violations, infeasible data) exit 1,
/// numerical failures 2 and optimisation that ran out of budget 3.
enum ExitCode : int { ExitOk = 0, ExitInput = 1, ExitMath = 2, ExitNotConverged = 3 };
int exit_code(ErrorKind kind);

enum class NuKind { Counting, Calibrated, Atoms };

struct Tolerances {
  double contact = 1e-8;        // |h(u)^(1/s) - sqrt(1 - |u|^2)| for atoms of nu
  double decomposition = 1e-8;  // verify residuals
  double gap = 1e-9;            // contact detection
  double minimizer = 1e-10;     // projected gradient norm of I_nu
  double lr_grad = 1e-7;        // rescaled gradient norm of L_r
};

struct Instance {
  int n = 1;
  double s = 1.0;
  std::string h_label;  // fixture name, "pieces" or "ellipsoid"
  LogConcaveFn h = LogConcaveFn::constant_one(1, 1.0);
  std::vector<Vec> contacts;  // listed or constructed; empty means "detect"
  Vec weights;                // decomposition weights, may be empty
  NuKind nu_kind = NuKind::Counting;
  DiscreteMeasure nu_atoms;  // only for NuKind::Atoms
  ProfilePair profile = canonical_pair();
  Tolerances tol;
  std::vector<double> schedule = {0.8, 0.9, 0.95, 0.99};
  QuadratureSpec quad;
  std::uint64_t seed = 42;
  int coercivity_dirs = 1000;
  int contact_grid = 201;
  json source;  // the document as parsed (canonical form)

  /// Listed contacts, or the detected ones (throws on a continuum).
  std::vector<Vec> contact_points() const;
  /// The measure nu selected by the instance.
  DiscreteMeasure nu() const;
};

/// Parses and validates; every failure is an Error of an input kind
/// (InvalidInput for malformed documents). Properness of h is checked here.
Instance parse_instance(const json& doc);
Instance load_instance(const std::string& path);
json parse_json_text(const std::string& text);

/// FNV-1a 64 of the sorted-key compact dump, as 16 hex digits.
std::string instance_hash(const json& doc);

struct FixtureParams {
  int n = 1;
  double s = 1.0;
  double rho1_sq = 0.4;
  double rho2_sq = 0.8;
  std::vector<Vec> points;  // tangent fixtures
};

/// Instance documents for "cross", "two-level-cross", "star", "tangent".
json fixture_document(const std::string& name, const FixtureParams& params);

struct CommandOutput {
  json report;  // {"version", "command", "instance_hash", "result"}
  int exit = ExitOk;
  std::vector<std::string> diagnostics;  // for stderr
  std::string csv;                       // sweep-r only
};

json report_envelope(const std::string& command, const std::string& hash, json result);
/// Compact dump with a trailing newline; identical input gives identical bytes.
std::string dump_report(const json& report);

CommandOutput run_verify(const Instance& inst);
CommandOutput run_contacts(const Instance& inst);
CommandOutput run_minimize_i1(const Instance& inst);
CommandOutput run_coercivity(const Instance& inst, std::optional<int> dirs = std::nullopt,
                             std::optional<std::uint64_t> seed = std::nullopt);
CommandOutput run_sweep_r(const Instance& inst);
CommandOutput run_profiles_check(const Instance& inst);
/// Dispatch by command name; Errors are turned into an error report with the
/// mapped exit code.
CommandOutput run_command(const std::string& command, const Instance& inst,
                          std::optional<std::uint64_t> seed = std::nullopt,
                          std::optional<int> dirs = std::nullopt);

// Serialisers shared by the reports.
json to_json(const Vec& v);
json to_json(const EPoint& p);
json to_json(const DiscreteMeasure& m);
json to_json(const DecompositionReport& r);
json to_json(const MinimizerResult& r);
json to_json(const IsotropyReport& r);
json to_json(const CoercivityReport& r);
json to_json(const ProfileReport& r);
json to_json(const RSweepResult& r);

}  // namespace fjohn
