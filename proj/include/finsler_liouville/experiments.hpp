#pragma once

// Named experiments behind the command line runner. Each one writes
// <id>_report.json plus its CSV tables into the output directory and reports
// the tolerances it achieved next to its budgets.

#include "finsler_liouville/solver.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace fl {

struct ExperimentConfig {
  std::string id;
  /// Gauge description, see parse_gauge_spec.
  std::string gauge = "family=euclidean; dimension=2";
  /// Domain description, see parse_domain_spec. Empty selects the
  /// experiment's own domain.
  std::string domain;
  /// Cells per axis of the experiment's own domain; 0 keeps its default.
  int cells = 0;
  SolverConfig solver;
  /// delta / beta_N for the integrability checks.
  std::vector<double> deltas{0.25, 0.5, 0.75};
  /// Pohozaev radii, relative to the experiment's length scale.
  std::vector<double> eps_list{0.4, 0.2, 0.1};
  /// Bubble scales; empty selects 2^n up to lambda h = 1/2.
  std::vector<double> lambdas;
  /// Number of random trials; 0 keeps the experiment's default.
  int samples = 0;
  /// Conjugate exponent in the concentration threshold; <= 0 selects N + 1.
  double q_conjugate = -1.0;
  std::uint64_t seed = 1;
  std::string out_dir = "results";

  /// Reads the keys documented in config_help(). Keys named after an
  /// experiment hold overrides applied on top for that experiment only.
  /// Unknown keys throw InputError.
  static ExperimentConfig from_json(const std::string& id, const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Key reference for --help.
std::string config_help();

struct ExperimentInfo {
  std::string id;
  std::string description;
};

/// The catalog, in a fixed order.
const std::vector<ExperimentInfo>& list_experiments();
bool is_experiment(const std::string& id);

struct ExperimentResult {
  std::string id;
  /// 0 all checks passed, 2 a check failed, 1 the experiment raised an error.
  int status = 0;
  nlohmann::json report;
  std::vector<std::string> files;
};

/// Runs one experiment and writes its artifacts. Errors are caught and
/// serialized into the report (status 1). Throws InputError for unknown ids.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// MANIFEST: version, inputs, achieved tolerances and files of every result.
void write_manifest(const std::string& dir, const std::vector<ExperimentConfig>& configs,
                    const std::vector<ExperimentResult>& results);

}  // namespace fl
