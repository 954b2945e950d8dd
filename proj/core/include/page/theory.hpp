#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "page/estimator.hpp"
#include "page/problem.hpp"

namespace page {

enum class Regime { finite, online, finite_pl, online_pl, gd, sgd };

std::string to_string(Regime regime);
Regime parse_regime(const std::string& name);
bool is_pl(Regime regime);

/// Stand-in for an unbounded number of components.
inline constexpr std::uint64_t kInfiniteN = std::numeric_limits<std::uint64_t>::max();

struct Plan {
  Regime regime = Regime::finite;
  double eta = 0.0;
  std::uint64_t b = 1;
  std::uint64_t b_prime = 1;
  double p = 1.0;
  std::uint64_t T = 0;
  /// b + T (p b + (1 - p) b'): expected #grad under the nominal convention.
  double grad_budget = 0.0;
  std::optional<double> kappa;

  /// Not serialized: notes such as "eps >= delta0, T = 0".
  std::vector<std::string> warnings;
};

// Formula helpers. Real-valued; the planners apply ceilings.

/// b' / (b + b').
double optimal_p(double b, double b_prime);
/// sqrt((1 - p) / (p b')).
double variance_factor(double p, double b_prime);
/// 1 / (L (1 + sqrt((1 - p) / (p b')))).
double stepsize_bound(double L, double p, double b_prime);
/// p b + (1 - p) b'.
double nominal_cost_per_iter(double p, double b, double b_prime);
/// (2 delta0 L / eps^2)(1 + vf).
double theorem1_iterations(double L, double delta0, double eps, double vf);
/// (4 delta0 L / eps^2)(1 + vf) + 1/p.
double theorem2_iterations(double L, double delta0, double eps, double vf, double p);
/// ((1 + vf) kappa + 2/p) log(log_arg).
double pl_iterations(double kappa, double vf, double p, double log_arg);
/// ceil(x) after snapping values within 1e-12 relative of an integer onto it.
std::uint64_t ceil_count(double x);

/// Default secondary batch: floor(sqrt(b)), clamped to >= 1, and never above a
/// caller-provided value.
std::uint64_t default_b_prime(std::uint64_t b, std::optional<std::uint64_t> requested);

Plan plan_finite(std::uint64_t n, double L, double delta0, double eps,
                 std::optional<std::uint64_t> b_prime = std::nullopt);
Plan plan_gd(std::uint64_t n, double L, double delta0, double eps);
/// Online PAGE. `n` may be kInfiniteN; sigma may be absent only for finite n.
Plan plan_online(std::optional<double> sigma, std::uint64_t n, double L, double delta0, double eps,
                 std::optional<std::uint64_t> b_prime = std::nullopt);
Plan plan_sgd(std::optional<double> sigma, std::uint64_t n, double L, double delta0, double eps);
Plan plan_finite_pl(std::uint64_t n, double L, double mu, double delta0, double eps,
                    std::optional<std::uint64_t> b_prime = std::nullopt);
Plan plan_online_pl(std::optional<double> sigma, std::uint64_t n, double L, double mu,
                    double delta0, double eps,
                    std::optional<std::uint64_t> b_prime = std::nullopt);

/// Closed-form corollary bounds on #grad (the right-hand sides quoted with each plan).
double finite_grad_bound(std::uint64_t n, double L, double delta0, double eps);
double online_grad_bound(std::uint64_t b, double L, double delta0, double eps);
double finite_pl_grad_bound(std::uint64_t n, double kappa, double delta0, double eps);
double online_pl_grad_bound(std::uint64_t b, double kappa, double delta0, double eps);
/// Bound matching the plan's regime.
double grad_bound(const Plan& plan, double L, double delta0, double eps);

/// Plans `regime` from the problem's declared constants. Throws
/// UnsupportedError when a constant the regime needs is absent.
Plan plan_for(Regime regime, const Problem& problem, double eps,
              std::optional<std::uint64_t> b_prime = std::nullopt,
              std::optional<double> delta0 = std::nullopt);

/// Run configuration realizing a plan: PL regimes output the last iterate and
/// stop on f - f*, the others output a uniform iterate and stop on |grad f|.
PageConfig to_config(const Plan& plan, std::uint64_t seed, double eps);

/// True when eta L (1 + vf) <= 1 + 1e-12 and, for PL regimes, eta <= p / (2 mu) (1 + 1e-12).
bool satisfies_stepsize_bound(const Plan& plan, double L, std::optional<double> mu);

std::string plan_to_json(const Plan& plan);

// Constant estimators.

struct Estimate {
  /// Reported value (safety factor applied).
  double value = 0.0;
  /// Raw extremum before the safety factor.
  double raw = 0.0;
  std::uint64_t samples = 0;
};

struct SmoothnessOptions {
  std::uint64_t num_pairs = 100;
  double radius = 1.0;
  std::uint64_t seed = 0;
  double safety = 1.1;
  /// E_i is exhaustive up to this many components, sampled beyond.
  std::uint64_t exhaustive_limit = 10000;
};

/// max over pairs (x, y) in the ball around x0 of sqrt(E_i |grad f_i(x) - grad f_i(y)|^2) / |x - y|,
/// times the safety factor. The first min(d, num_pairs) pairs differ along coordinate axes.
Estimate estimate_L(const Problem& problem, const SmoothnessOptions& options);

/// sqrt of the max over x0 and sampled points of E_i |grad f_i(x) - grad f(x)|^2, times safety.
Estimate estimate_sigma(const Problem& problem, const SmoothnessOptions& options);

struct GridSpec {
  /// Defaults to x* when declared, else x0.
  std::optional<Vector> center;
  double radius = 10.0;
  std::uint64_t points_per_line = 100000;
  /// Lines run along every coordinate axis plus this many random directions.
  std::uint64_t random_directions = 0;
  std::uint64_t seed = 0;
};

struct PlGridResult {
  /// inf of |grad f|^2 / (2 (f - f*)) over admissible points.
  double mu_hat = 0.0;
  Vector argmin;
  std::uint64_t admissible = 0;
  /// Same infimum with f - f* reduced by its rounding error
  /// 64 eps_mach (|f(x)| + |f*|); +inf when no point resolves above that error.
  double mu_hat_resolved = 0.0;
  /// Points with |grad f|^2 < 2 mu (f - f* - rounding) for the mu passed to the scan.
  std::uint64_t violations = 0;
};

/// Scans the grid, excluding points with f - f* < 1e-12. Throws UnsupportedError without f*.
PlGridResult scan_pl_ratio(const Problem& problem, const GridSpec& spec,
                           std::optional<double> mu = std::nullopt);

/// mu_hat over the grid; throws UnsupportedError without f*, EstimationError
/// when every point lies in the excluded f - f* < 1e-12 neighborhood.
Estimate estimate_mu_pl(const Problem& problem, const GridSpec& spec);

}  // namespace page
