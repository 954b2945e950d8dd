#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "page/estimator.hpp"
#include "page/problem.hpp"
#include "page/theory.hpp"

namespace page {

enum class CheckStatus { pass, fail, inconclusive };

std::string to_string(CheckStatus status);

struct CheckReport {
  std::string name;
  CheckStatus status = CheckStatus::fail;
  /// One-sided checks: passed iff observed <= bound + slack. Inconclusive
  /// reports count as passed.
  bool passed = false;
  double observed = 0.0;
  double bound = 0.0;
  double slack = 0.0;
  std::uint64_t trials = 0;
  /// Standard error of `observed`; zero for deterministic checks.
  double std_err = 0.0;
  std::string detail;
  std::optional<std::uint64_t> failing_seed;
};

std::string report_to_json(const CheckReport& report);

/// Central differences of value() against full_grad(). observed is the max over
/// coordinates of |fd_j - g_j| / max(1, |g_j|).
CheckReport check_grad_fd(const Problem& problem, const Vector& x, double h, double bound = 1e-5);

/// Both sides of the descent relation at x+ = x - eta g:
/// f(x+) <= f(x) - eta/2 |grad f(x)|^2 - (1/(2 eta) - L/2)|x+ - x|^2 + eta/2 |g - grad f(x)|^2.
/// The slack is 1e-10 times the larger of |RHS| and the sum of the magnitudes of its terms.
CheckReport check_descent_lemma(const Problem& problem, const Vector& x, const Vector& g, double eta);

/// check_descent_lemma at `trials` random pairs: x uniform in the ball of
/// `radius` around x0, g standard normal scaled by radius / sqrt(d). Returns the
/// trial with the largest excess over its bound; detail counts violations.
CheckReport check_descent_lemma_random(const Problem& problem, double eta, std::uint64_t trials,
                                       double radius, std::uint64_t seed);

struct RecursionOptions {
  /// Primary batch; defaults to n (finite-sum semantics, where the p-branch is exact).
  std::optional<std::uint64_t> b;
  /// Overrides the declared sigma in the 1_{b<n} p sigma^2 / b term.
  std::optional<double> sigma;
  /// Also require |mean - RHS| <= 3 std_err (equality claim).
  bool two_sided = false;
};

/// Monte-Carlo mean of |g+ - grad f(x_t1)|^2 over the branch coin and the
/// minibatch draws, against (1-p) L^2/b' |x_t1 - x_t|^2 + (1-p)|g_t - grad f(x_t)|^2
/// (+ p sigma^2 / b when b < n). Fewer than 1000 trials, or a local variance
/// above the declared sigma^2 in the online case, gives an inconclusive report.
CheckReport check_variance_recursion(const Problem& problem, const Vector& x_t, const Vector& x_t1,
                                     const Vector& g_t, double p, std::uint64_t b_prime,
                                     std::uint64_t trials, std::uint64_t seed,
                                     const RecursionOptions& options = {});

/// Exact conditional mean of the same quantity before any inequality is applied:
/// (1-p)|e_t|^2 + (1-p)/b' E_i|D_i - Dbar|^2 + p E|g_b - grad f|^2, where
/// D_i = grad f_i(x_t1) - grad f_i(x_t). Needs an enumerable component set.
double exact_recursion_mean(const Problem& problem, const Vector& x_t, const Vector& x_t1,
                            const Vector& g_t, double p, std::uint64_t b_prime, std::uint64_t b);

/// Passes when no admissible grid point violates |grad f|^2 >= 2 mu (f - f*).
/// observed = mu, bound = grid infimum of the ratio.
CheckReport check_pl_constant(const Problem& problem, double mu, const GridSpec& grid);

struct LyapunovOptions {
  std::vector<std::uint64_t> seeds;
  std::uint64_t horizon = 50;
  /// Use the PL potential (beta = eta/p) and check E[Phi_T] <= (1 - mu eta)^T Phi_0.
  bool pl = false;
};

/// Runs the estimator with `config` (early stop disabled) over the seed set
/// and checks the expected one-step descent of
/// Phi_t = f(x^t) - f* + eta/(2p) |g^t - grad f(x^t)|^2 at every t < horizon,
/// each within 3 standard errors over seeds.
CheckReport check_lyapunov_descent(const Problem& problem, const PageConfig& config,
                                   const LyapunovOptions& options);

}  // namespace page
