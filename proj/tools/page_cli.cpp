// Command-line front end: plan, run, compare, verify, replay.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "page/errors.hpp"
#include "page/estimator.hpp"
#include "page/harness.hpp"
#include "page/theory.hpp"

namespace {

struct PlanArgs {
  std::string regime;
  std::string problem_path;
  std::string n = "";
  double L = 0.0;
  double delta0 = 0.0;
  double eps = 0.0;
  std::optional<double> sigma;
  std::optional<double> mu;
  std::optional<std::uint64_t> b_prime;
};

std::uint64_t parse_n(const std::string& s) {
  if (s == "inf" || s == "infinity") return page::kInfiniteN;
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || v == 0) throw page::ConfigError("--n must be a positive integer or 'inf'");
  return v;
}

int do_plan(const PlanArgs& a) {
  using namespace page;
  const Regime regime = parse_regime(a.regime);
  Plan plan;
  if (!a.problem_path.empty()) {
    const ProblemPtr problem = build_problem(read_text_file(a.problem_path));
    plan = plan_for(regime, *problem, a.eps, a.b_prime,
                    a.delta0 > 0.0 ? std::optional<double>(a.delta0) : std::nullopt);
  } else {
    if (a.n.empty()) throw ConfigError("plan: give --problem or --n with --L and --delta0");
    const std::uint64_t n = parse_n(a.n);
    switch (regime) {
      case Regime::finite: plan = plan_finite(n, a.L, a.delta0, a.eps, a.b_prime); break;
      case Regime::gd: plan = plan_gd(n, a.L, a.delta0, a.eps); break;
      case Regime::online: plan = plan_online(a.sigma, n, a.L, a.delta0, a.eps, a.b_prime); break;
      case Regime::sgd: plan = plan_sgd(a.sigma, n, a.L, a.delta0, a.eps); break;
      case Regime::finite_pl:
      case Regime::online_pl:
        if (!a.mu) throw ConfigError("plan: PL regimes need --mu");
        plan = regime == Regime::finite_pl
                   ? plan_finite_pl(n, a.L, *a.mu, a.delta0, a.eps, a.b_prime)
                   : plan_online_pl(a.sigma, n, a.L, *a.mu, a.delta0, a.eps, a.b_prime);
        break;
    }
  }
  for (const auto& w : plan.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << plan_to_json(plan) << '\n';
  return kExitOk;
}

void print_experiment(const page::ExperimentResult& r, const std::string& label) {
  for (const auto& run : r.runs) {
    std::cout << label << "seed=" << run.seed << " iterations=" << run.iterations
              << " grad_evals=" << run.grad_evals_nominal << " grad_evals_to_target=";
    if (run.grad_evals_to_target) {
      std::cout << *run.grad_evals_to_target;
    } else {
      std::cout << "unreached";
    }
    if (run.diverged) std::cout << " DIVERGED";
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PAGE probabilistic gradient estimator: planning, runs and verification"};
  app.require_subcommand(1);

  page::CliOverrides cli;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<std::uint64_t> max_iters;
  auto add_common = [&](CLI::App* sub, bool with_max_iters) {
    sub->add_option("--seed", seed, "Run a single seed instead of the configured list");
    sub->add_option("--out-dir", out_dir, "Directory for artifacts");
    if (with_max_iters) sub->add_option("--max-iters", max_iters, "Iteration cap");
  };

  PlanArgs plan_args;
  auto* plan = app.add_subcommand("plan", "Print the theory-derived parameters as JSON");
  plan->add_option("--regime", plan_args.regime, "finite|online|finite_pl|online_pl|gd|sgd")->required();
  plan->add_option("--problem", plan_args.problem_path, "Problem JSON; constants come from it");
  plan->add_option("--n", plan_args.n, "Number of components (or 'inf')");
  plan->add_option("--L", plan_args.L, "Average-smoothness constant");
  plan->add_option("--delta0", plan_args.delta0, "Initial gap f(x0) - f*");
  plan->add_option("--eps", plan_args.eps, "Target accuracy")->required();
  plan->add_option("--sigma", plan_args.sigma, "Variance bound");
  plan->add_option("--mu", plan_args.mu, "PL constant");
  plan->add_option("--b-prime", plan_args.b_prime, "Secondary minibatch size");

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment configuration");
  run->add_option("config", config_path, "Experiment JSON")->required();
  add_common(run, true);

  auto* compare = app.add_subcommand("compare", "Compare two or more methods");
  compare->add_option("config", config_path, "Comparison JSON")->required();
  add_common(compare, true);

  auto* verify = app.add_subcommand("verify", "Run numerical checks (default suite without a config)");
  verify->add_option("config", config_path, "Verification JSON");
  add_common(verify, false);

  std::string summary_path;
  auto* replay = app.add_subcommand("replay", "Re-run a recorded experiment and diff its traces");
  replay->add_option("summary", summary_path, "Summary JSON written by run or compare")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? page::kExitOk : page::kExitConfigError;
  }
  cli.seed = seed;
  if (!out_dir.empty()) cli.out_dir = out_dir;
  cli.max_iters = max_iters;

  try {
    if (*plan) return do_plan(plan_args);
    if (*run) {
      const auto r = page::run_experiment(page::read_text_file(config_path), cli);
      print_experiment(r, "");
      if (!r.summary_path.empty()) std::cout << "summary: " << r.summary_path.string() << '\n';
      return r.exit_code;
    }
    if (*compare) {
      const auto r = page::compare_methods(page::read_text_file(config_path), cli);
      for (const auto& m : r.methods) {
        print_experiment(m.result, m.name + " ");
        std::cout << m.name << " median_grad_evals_to_target=" << m.median_grad_to_target << '\n';
      }
      std::cout << "table: " << r.csv_path.string() << "\nsummary: " << r.json_path.string() << '\n';
      return r.exit_code;
    }
    if (*verify) {
      const std::string text =
          config_path.empty() ? page::default_verify_suite() : page::read_text_file(config_path);
      const auto r = page::verify_suite(text, cli);
      for (const auto& rep : r.reports) std::cout << page::report_to_json(rep) << '\n';
      return r.exit_code;
    }
    if (*replay) {
      const auto r = page::replay(summary_path);
      for (const auto& m : r.mismatches) std::cout << "mismatch: " << m << '\n';
      std::cout << (r.mismatches.empty() ? "identical" : "DIFFERENT") << " (" << r.compared
                << " files compared)\n";
      return r.exit_code;
    }
  } catch (const page::DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return page::kExitDiverged;
  } catch (const page::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return page::kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return page::kExitConfigError;
  }
  return page::kExitOk;
}
