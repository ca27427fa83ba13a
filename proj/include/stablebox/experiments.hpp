#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stablebox::experiments {

/// Everything a run depends on. Reports are pure functions of this struct;
/// reruns with the same config are byte-identical, whatever the thread
/// count. The seed is mandatory in config files.
struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;

  double alpha = 1.2;
  double p = 0.7;
  std::string law = "normal";   // finite_variance data law: normal | pareto
  double pareto_index = 3.5;    // tail index of the finite-variance pareto law
  std::string parts = "all";    // finite_variance: ks | spread | all

  std::uint64_t n = 2000;
  std::uint64_t n_small = 200;
  std::uint64_t reps = 10000;
  std::uint64_t num_perms = 2000;
  std::uint64_t num_envs = 200;
  std::uint64_t draws_per_env = 2000;
  std::uint64_t k_truncation = 10000;
  std::vector<double> ts = {0.5};
  double x0 = 0.5;  // CDF probe point; keep off 0 at t = 1/2 (see README)

  unsigned threads = 0;  // 0 = hardware concurrency
  std::string output_path;
  std::string format = "csv";
  std::map<std::string, double> tolerances;  // overrides of the defaults
};

enum class Cmp { le, ge };

struct Metric {
  std::string name;
  double value = 0.0;
  std::optional<double> tolerance;  // absent = informational row
  Cmp cmp = Cmp::le;
  std::optional<double> target;     // pass iff |value - target| <= tolerance
  std::optional<bool> pass;
  std::string note;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<Metric> metrics;
  double wall_seconds = 0.0;
  std::string version;
  std::string kernel_backend;
  unsigned threads_used = 1;

  bool all_pass() const;
};

/// Baseline config for one of the six experiments; throws on unknown names.
ExperimentConfig default_config(std::string_view experiment);

/// Strict JSON parse: starts from default_config(experiment), rejects
/// unknown keys, requires an explicit seed.
ExperimentConfig config_from_json_text(const std::string& text);

/// `key=value` override on top of a parsed config (CLI support).
void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value);

std::string config_to_json(const ExperimentConfig& cfg);

ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// CSV body: header `metric,value,tolerance,pass`, numbers at 17 significant
/// digits, locale independent.
std::string report_csv(const ExperimentReport& report);

/// JSON sidecar echoing the config and the run environment.
std::string report_json_sidecar(const ExperimentReport& report);

/// Parses the CSV body back (round-trip checks and downstream tooling).
struct CsvMetricRow {
  std::string name;
  double value;
  std::optional<double> tolerance;
  std::optional<bool> pass;
};
std::vector<CsvMetricRow> parse_csv_metrics(const std::string& csv);

/// Writes value at 17 significant digits with '.' decimal separator.
std::string format_double(double v);

/// One acceptance criterion: a labelled bundle of gated metrics.
struct CriterionResult {
  std::string id;
  std::string name;
  bool pass = false;
  std::vector<Metric> metrics;
  double wall_seconds = 0.0;
};

/// Runs the full acceptance suite at its pinned sizes and tolerances.
std::vector<CriterionResult> run_acceptance_suite(std::uint64_t seed,
                                                  unsigned threads);

}  // namespace stablebox::experiments
