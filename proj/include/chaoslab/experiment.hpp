#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "chaoslab/estimators.hpp"

namespace chaoslab {

struct ModelConfig {
  std::string model = "count";  // count | kiso | gamma | crossing
  int k = 1;
  double r = 0.05;
  int d = 2;
  double s = 100.0;
  SmallGraph gamma{2, {{0, 1}}};
  double lambda = 0.359;  // crossing intensity
  double box_s = 4.0;     // crossing half-side
  bool clipped = false;
};

/// One scanned parameter. For "srd" (s r^d) the companion is fixed by `hold`:
/// "s" keeps s, "r" keeps r, "count" picks s so that the expected number of
/// small-degree vertices equals `target_count`, capped at `s_max`.
struct ScanConfig {
  std::string parameter;
  std::vector<double> values;
  std::string hold = "s";
  double target_count = 20.0;
  double s_max = 2.0e4;
};

struct RunConfig {
  ModelConfig model;
  std::vector<std::string> diagnostics;
  nlohmann::json t_grid = nlohmann::json::object();
  std::size_t reps = 1000;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out = "out";
  ScanConfig scan;
  bool plots = false;
  double chaos_t = 0.5;          // time of the headline chaos and overlap values
  double delta = 0.5;            // delta of the chaos-to-superconcentration check
  std::size_t insertions = kDefaultInsertions;
  std::string sets;              // chaotic set kind; empty = model default
  std::string sup = "pooled";    // (A2) sup mode: pooled | sampled
  std::vector<double> evolve_times;  // empty: {0, 0.5, 1, 2, 5, 10} up to tmax
};

/// Parses and validates a configuration; unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j);
/// The resolved configuration without `threads` and `out`, which never
/// affect results.
nlohmann::json to_json(const RunConfig& c);

inline const std::vector<std::string>& known_diagnostics() {
  static const std::vector<std::string> names{"mean",  "variance",      "poincare", "identity",  "mecke",
                                              "chaos", "overlap",       "decomposition", "l1l2", "lower_bound",
                                              "scores", "equivalence"};
  return names;
}

/// A model instantiated from its configuration.
struct Model {
  FunctionalPtr f;
  Intensity intensity;
  std::vector<LocalFunctionPtr> g;  // built-in local functions
  Decomposition split;
  ChaoticSetKind set_kind;
  double expected_mean;  // NaN when no closed form is known
};

Model build_model(const ModelConfig& m, const std::string& set_kind = "");

TimeGrid build_time_grid(const RunConfig& c);

/// One headline line of a diagnostic.
struct DiagnosticRow {
  std::string quantity;
  Estimate value;
  Estimate ratio;
  bool has_ratio = false;
  std::string status;  // "ok", "violated", "undefined", ...
};

struct DiagnosticResult {
  std::string name;
  bool ok = true;
  std::string error;
  std::string seed;
  std::vector<DiagnosticRow> rows;
  nlohmann::json detail;
};

DiagnosticResult run_diagnostic(const std::string& name, const RunConfig& c, const Model& model,
                                const TimeGrid& grid);

nlohmann::json diagnostics_json(const std::vector<DiagnosticResult>& results);

struct DiagnoseReport {
  nlohmann::json config;
  std::vector<DiagnosticResult> results;
};

DiagnoseReport diagnose(const RunConfig& c);
std::string diagnose_csv(const DiagnoseReport& r);
nlohmann::json diagnose_json(const DiagnoseReport& r);

struct ScanRow {
  nlohmann::json params;  // resolved model parameters of the point
  double x = 0.0;         // scanned value
  std::string error;
  std::vector<DiagnosticResult> results;
};

struct ScanFit {
  std::string column;
  std::string kind;  // "loglog" or "linear"
  LinearFit fit;
};

struct ScanReport {
  nlohmann::json config;
  std::string parameter;
  std::vector<ScanRow> rows;
  std::vector<ScanFit> fits;
};

/// Model configuration at one scan value.
ModelConfig scan_point(const RunConfig& c, double value);

ScanReport scan(const RunConfig& c);
std::string scan_csv(const ScanReport& r);
nlohmann::json scan_json(const ScanReport& r);

/// Writes pattern.json into c.out.
void cmd_sample(const RunConfig& c);
/// Writes trajectory.json and slice_<i>.json for every evolve time.
void cmd_evolve(const RunConfig& c);
/// Writes diagnose.csv and diagnose.json (plus SVG plots when enabled).
/// Returns false when every requested diagnostic failed.
bool cmd_diagnose(const RunConfig& c);
bool cmd_scan(const RunConfig& c);
/// Renders the plots of a diagnose or scan JSON report into `out_dir`;
/// returns the written file names.
std::vector<std::string> cmd_plot(const std::string& report_path, const std::string& out_dir);

/// Deterministic number formatting shared by CSV writers.
std::string format_number(double v);

}  // namespace chaoslab
