#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "page/errors.hpp"
#include "page/problem.hpp"
#include "page/rng.hpp"

namespace page {

enum class OutputMode { uniform_iterate, last_iterate };

/// Quantity watched by the trailing-window stop rule.
enum class StopMetric { grad_norm, f_gap };

struct PageConfig {
  double eta = 0.0;
  std::uint64_t b = 1;
  std::uint64_t b_prime = 1;
  double p = 1.0;
  std::uint64_t seed = 0;
  /// Zero is allowed and yields a trace holding only the initialization record.
  std::uint64_t max_iters = 1;
  double target_eps = 1e-3;
  OutputMode output_mode = OutputMode::uniform_iterate;

  /// The target counts as reached once the mean of the watched metric over the
  /// last `stop_window` records is <= target_eps.
  std::uint64_t stop_window = 16;
  /// Terminate when the target is reached; otherwise run all max_iters steps.
  bool early_stop = true;
  StopMetric stop_metric = StopMetric::grad_norm;
  /// Compute |grad f(x^t)|, f(x^t) - f* and |g^t - grad f(x^t)|^2 when affordable.
  bool record_diagnostics = true;

  /// Checks the problem-independent invariants; throws ConfigError.
  void validate() const;
};

std::string to_string(OutputMode mode);
OutputMode parse_output_mode(const std::string& name);
std::string to_string(StopMetric metric);
StopMetric parse_stop_metric(const std::string& name);

enum class Branch { init, full, recursive };

std::string to_string(Branch branch);

struct StepRecord {
  std::uint64_t t = 0;
  Branch branch = Branch::init;
  std::optional<double> grad_norm;
  std::optional<double> f_gap;
  std::optional<double> estimator_err_sq;
  /// Wall-cost counter: a recursive step costs 2 b'.
  std::uint64_t grad_evals_after = 0;
  /// Nominal counter: a recursive step costs b'.
  std::uint64_t grad_evals_nominal_after = 0;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct Trace {
  std::vector<StepRecord> records;
  PageConfig config_echo;
  std::string problem_id;
  std::uint64_t output_index = 0;
  /// Index of the record at which the stop rule was first satisfied.
  std::optional<std::uint64_t> target_index;

  /// Number of completed steps T (records run from t = 0 to T).
  std::uint64_t iterations() const { return records.empty() ? 0 : records.back().t; }
};

struct PageState {
  Vector x;
  Vector g;
  std::uint64_t t = 0;
  std::uint64_t grad_evals = 0;
  std::uint64_t grad_evals_nominal = 0;
  CounterRng coin;
  CounterRng batch;
  CounterRng batch_prime;

  // Scratch space reused across steps.
  Vector x_prev;
  Vector work;
  Vector acc;
  Vector diag;
};

/// Raised when an iterate or estimator becomes non-finite. Carries the
/// offending iteration and the trace recorded up to it.
class DivergenceError : public Error {
 public:
  DivergenceError(std::uint64_t t, const std::string& what);

  std::uint64_t t() const { return t_; }
  const std::shared_ptr<const Trace>& partial_trace() const { return partial_; }
  void attach(Trace trace);

 private:
  std::uint64_t t_;
  std::shared_ptr<const Trace> partial_;
};

/// Line 1: x = x0, g = minibatch gradient of size b at x0 (the full index set
/// when b = n).
PageState init_state(const Problem& problem, const PageConfig& config);

/// Lines 3-4: one update of x followed by the probabilistic estimator switch.
/// Returns the record describing the new iterate x^{t+1}.
StepRecord step(PageState& state, const Problem& problem, const PageConfig& config);

/// Diagnostics for the state as it stands (used for the t = 0 record).
StepRecord describe(PageState& state, Branch branch, const Problem& problem,
                    const PageConfig& config);

struct RunResult {
  Trace trace;
  PageState state;
};

RunResult run(const Problem& problem, const PageConfig& config);

/// uniform_iterate: uniform index in [0, T) (0 when T = 0); last_iterate: T.
std::uint64_t select_output(const Trace& trace, OutputMode mode, CounterRng& rng);

/// x^index of the run described by `config`, recovered by deterministic replay
/// when it is not the final iterate.
Vector iterate_at(const Problem& problem, const PageConfig& config, const RunResult& result,
                  std::uint64_t index);

/// Per-iteration expected costs p b + (1 - p) b' (nominal) and p b + 2 (1 - p) b' (wall).
double expected_nominal_cost(const PageConfig& config);
double expected_wall_cost(const PageConfig& config);

}  // namespace page
