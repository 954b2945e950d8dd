#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "page/estimator.hpp"
#include "page/problem.hpp"
#include "page/theory.hpp"
#include "page/verify.hpp"

namespace page {

/// Process exit codes shared by the library entry points and the CLI.
enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitConfigError = 2,
  kExitDiverged = 3,
};

/// Command-line flags that override fields of a JSON configuration.
struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> max_iters;
};

/// Builds a problem from its JSON description (see docs/config.md).
ProblemPtr build_problem(const std::string& problem_json);

struct SeedRun {
  std::uint64_t seed = 0;
  bool diverged = false;
  std::uint64_t iterations = 0;
  /// Nominal #grad when the stop rule first fired.
  std::optional<std::uint64_t> grad_evals_to_target;
  std::uint64_t grad_evals_nominal = 0;
  std::uint64_t grad_evals_wall = 0;
  std::optional<double> final_grad_norm;
  std::optional<double> final_f_gap;
  std::uint64_t output_index = 0;
  std::string trace_file;
  /// CSV contents, kept in memory for replay comparison.
  std::string trace_text;
};

struct ExperimentResult {
  int exit_code = kExitOk;
  std::string problem_id;
  std::optional<Plan> plan;
  PageConfig config;
  std::optional<double> theory_budget;
  std::optional<double> theory_bound;
  std::vector<SeedRun> runs;
  std::filesystem::path summary_path;
  std::string summary_text;
};

/// Runs every seed of an experiment and writes one trace CSV per seed plus a
/// summary JSON. Invalid configurations throw ConfigError (exit 2); a diverged
/// seed keeps its partial trace and yields exit code 3.
ExperimentResult run_experiment(const std::string& config_json, const CliOverrides& cli = {});

struct MethodResult {
  std::string name;
  ExperimentResult result;
  /// Median nominal #grad to target; +inf when the median run never reached it.
  double median_grad_to_target = 0.0;
};

struct CompareResult {
  int exit_code = kExitOk;
  std::vector<MethodResult> methods;
  std::filesystem::path csv_path;
  std::filesystem::path json_path;
  std::string table_text;
  std::string json_text;
};

/// Runs two or more methods on the same problem and seeds and tabulates #grad
/// to target per method and seed, with medians.
CompareResult compare_methods(const std::string& config_json, const CliOverrides& cli = {});

struct VerifyResult {
  int exit_code = kExitOk;
  std::vector<CheckReport> reports;
  std::filesystem::path jsonl_path;
};

/// The built-in check list used when `verify` is given no configuration.
std::string default_verify_suite();

/// Runs the configured checks. Exit 0 when every report passes or is
/// inconclusive, 1 otherwise. An empty check list is a usage error.
VerifyResult verify_suite(const std::string& config_json, const CliOverrides& cli = {});

struct ReplayResult {
  int exit_code = kExitOk;
  std::uint64_t compared = 0;
  std::vector<std::string> mismatches;
};

/// Re-runs the experiment or comparison recorded in a summary JSON and
/// byte-compares every regenerated trace and the summary itself against the
/// files on disk.
ReplayResult replay(const std::filesystem::path& summary_json);

std::string read_text_file(const std::filesystem::path& path);

/// Median with +inf for unreached entries; +inf for an empty list.
double median_with_inf(std::vector<double> values);

}  // namespace page
