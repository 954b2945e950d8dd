#include "page/estimator.hpp"

#include <cmath>

namespace page {
namespace {

// out = (1/b) sum_{i in I} grad f_i(x). I is the full index set when b = n,
// otherwise b uniform draws with replacement.
void minibatch_grad(const Problem& problem, std::span<const double> x, std::uint64_t b,
                    CounterRng& rng, Vector& out, Vector& work) {
  if (b == problem.size()) {
    problem.full_grad(x, out);
    return;
  }
  vec::fill_zero(out);
  for (std::uint64_t k = 0; k < b; ++k) {
    problem.component_grad(rng.next_index(problem.size()), x, work);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += work[j];
  }
  const double denom = static_cast<double>(b);
  for (double& v : out) v /= denom;
}

bool window_reached(const Trace& trace, const PageConfig& config) {
  const std::uint64_t w = config.stop_window;
  if (w == 0 || trace.records.size() < w) return false;
  double sum = 0.0;
  for (std::size_t k = trace.records.size() - w; k < trace.records.size(); ++k) {
    const StepRecord& r = trace.records[k];
    const auto& metric = config.stop_metric == StopMetric::grad_norm ? r.grad_norm : r.f_gap;
    if (!metric) return false;
    sum += *metric;
  }
  return sum / static_cast<double>(w) <= config.target_eps;
}

}  // namespace

void PageConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("eta must be positive and finite");
  if (b < 1 || b_prime < 1) throw ConfigError("batch sizes must be >= 1");
  if (b_prime > b) throw ConfigError("b_prime must not exceed b");
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("p must lie in (0, 1]");
  if (!(target_eps > 0.0)) throw ConfigError("target_eps must be positive");
}

std::string to_string(OutputMode mode) {
  return mode == OutputMode::uniform_iterate ? "uniform_iterate" : "last_iterate";
}

OutputMode parse_output_mode(const std::string& name) {
  if (name == "uniform_iterate") return OutputMode::uniform_iterate;
  if (name == "last_iterate") return OutputMode::last_iterate;
  throw ConfigError("unknown output_mode '" + name + "'");
}

std::string to_string(StopMetric metric) {
  return metric == StopMetric::grad_norm ? "grad_norm" : "f_gap";
}

StopMetric parse_stop_metric(const std::string& name) {
  if (name == "grad_norm") return StopMetric::grad_norm;
  if (name == "f_gap") return StopMetric::f_gap;
  throw ConfigError("unknown stop_metric '" + name + "'");
}

std::string to_string(Branch branch) {
  switch (branch) {
    case Branch::init: return "init";
    case Branch::full: return "full";
    case Branch::recursive: return "recursive";
  }
  return "?";
}

DivergenceError::DivergenceError(std::uint64_t t, const std::string& what)
    : Error("diverged at t=" + std::to_string(t) + ": " + what), t_(t) {}

void DivergenceError::attach(Trace trace) {
  partial_ = std::make_shared<const Trace>(std::move(trace));
}

PageState init_state(const Problem& problem, const PageConfig& config) {
  config.validate();
  const std::size_t d = problem.dim();
  if (d == 0) throw ConfigError("problem dimension must be >= 1");
  if (problem.x0().size() != d) {
    throw ConfigError("start point has dimension " + std::to_string(problem.x0().size()) +
                      ", problem has " + std::to_string(d));
  }
  if (!problem.online() && config.b > problem.size()) {
    throw ConfigError("b = " + std::to_string(config.b) + " exceeds n = " +
                      std::to_string(problem.size()));
  }
  PageState s;
  s.x = problem.x0();
  s.g.assign(d, 0.0);
  s.x_prev.assign(d, 0.0);
  s.work.assign(d, 0.0);
  s.acc.assign(d, 0.0);
  s.diag.assign(d, 0.0);
  s.coin = CounterRng(config.seed, Stream::kBranchCoin);
  s.batch = CounterRng(config.seed, Stream::kBatch);
  s.batch_prime = CounterRng(config.seed, Stream::kBatchPrime);
  minibatch_grad(problem, s.x, config.b, s.batch, s.g, s.work);
  if (!vec::all_finite(s.g)) throw DivergenceError(0, "non-finite initial estimator");
  s.grad_evals = config.b;
  s.grad_evals_nominal = config.b;
  return s;
}

StepRecord describe(PageState& s, Branch branch, const Problem& problem,
                    const PageConfig& config) {
  StepRecord r;
  r.t = s.t;
  r.branch = branch;
  r.grad_evals_after = s.grad_evals;
  r.grad_evals_nominal_after = s.grad_evals_nominal;
  if (!config.record_diagnostics) return r;
  const auto& consts = problem.constants();
  if (consts.f_star) r.f_gap = problem.value(s.x) - *consts.f_star;
  if (problem.full_grad_available()) {
    problem.full_grad(s.x, s.diag);
    r.grad_norm = vec::norm(s.diag);
    r.estimator_err_sq = vec::dist_sq(s.g, s.diag);
  }
  return r;
}

StepRecord step(PageState& s, const Problem& problem, const PageConfig& config) {
  const std::size_t d = s.x.size();
  s.x_prev = s.x;
  for (std::size_t j = 0; j < d; ++j) s.x[j] -= config.eta * s.g[j];

  const bool full = s.coin.bernoulli(config.p);
  if (full) {
    minibatch_grad(problem, s.x, config.b, s.batch, s.g, s.work);
    s.grad_evals += config.b;
    s.grad_evals_nominal += config.b;
  } else {
    vec::fill_zero(s.acc);
    for (std::uint64_t k = 0; k < config.b_prime; ++k) {
      const std::uint64_t i = s.batch_prime.next_index(problem.size());
      problem.component_grad(i, s.x, s.work);
      for (std::size_t j = 0; j < d; ++j) s.acc[j] += s.work[j];
      problem.component_grad(i, s.x_prev, s.work);
      for (std::size_t j = 0; j < d; ++j) s.acc[j] -= s.work[j];
    }
    const double denom = static_cast<double>(config.b_prime);
    for (std::size_t j = 0; j < d; ++j) s.g[j] += s.acc[j] / denom;
    s.grad_evals += 2 * config.b_prime;
    s.grad_evals_nominal += config.b_prime;
  }
  ++s.t;
  if (!vec::all_finite(s.x) || !vec::all_finite(s.g)) {
    throw DivergenceError(s.t, "non-finite iterate or estimator");
  }
  return describe(s, full ? Branch::full : Branch::recursive, problem, config);
}

RunResult run(const Problem& problem, const PageConfig& config) {
  RunResult result;
  Trace& trace = result.trace;
  trace.config_echo = config;
  trace.problem_id = problem.id();
  result.state = init_state(problem, config);
  PageState& s = result.state;
  trace.records.push_back(describe(s, Branch::init, problem, config));
  if (window_reached(trace, config)) trace.target_index = 0;

  while (s.t < config.max_iters && !(config.early_stop && trace.target_index)) {
    try {
      trace.records.push_back(step(s, problem, config));
    } catch (DivergenceError& e) {
      e.attach(trace);
      throw;
    }
    if (!trace.target_index && window_reached(trace, config)) trace.target_index = s.t;
  }
  CounterRng out_rng(config.seed, Stream::kOutput);
  trace.output_index = select_output(trace, config.output_mode, out_rng);
  return result;
}

std::uint64_t select_output(const Trace& trace, OutputMode mode, CounterRng& rng) {
  if (trace.records.empty()) throw UsageError("select_output: empty trace");
  const std::uint64_t T = trace.iterations();
  if (mode == OutputMode::last_iterate) return T;
  return T == 0 ? 0 : rng.next_index(T);
}

Vector iterate_at(const Problem& problem, const PageConfig& config, const RunResult& result,
                  std::uint64_t index) {
  if (index == result.state.t) return result.state.x;
  if (index > result.state.t) throw UsageError("iterate_at: index beyond the run");
  PageState s = init_state(problem, config);
  PageConfig quiet = config;
  quiet.record_diagnostics = false;
  while (s.t < index) step(s, problem, quiet);
  return s.x;
}

double expected_nominal_cost(const PageConfig& c) {
  return c.p * static_cast<double>(c.b) + (1.0 - c.p) * static_cast<double>(c.b_prime);
}

double expected_wall_cost(const PageConfig& c) {
  return c.p * static_cast<double>(c.b) + 2.0 * (1.0 - c.p) * static_cast<double>(c.b_prime);
}

}  // namespace page
