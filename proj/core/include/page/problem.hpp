#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "page/vec.hpp"

namespace page {

/// Declared constants of a problem. L is always present; the others only when
/// an honest value exists.
struct ProblemConstants {
  /// Average-smoothness constant: E_i |grad f_i(x) - grad f_i(y)|^2 <= L^2 |x - y|^2.
  double L = 0.0;
  /// Variance bound: E_i |grad f_i(x) - grad f(x)|^2 <= sigma^2.
  std::optional<double> sigma;
  /// PL constant: |grad f(x)|^2 >= 2 mu (f(x) - f*).
  std::optional<double> mu;
  std::optional<double> f_star;
  std::optional<Vector> x_star;
  /// Radius of the ball around x0 over which sigma was established, when the
  /// bound is regional rather than global.
  std::optional<double> sigma_region_radius;
};

/// Finite-sum oracle f(x) = (1/n) sum_i f_i(x).
///
/// Implementations are immutable after construction; every method is safe to
/// call concurrently.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
  /// Number of components n. Streams report a very large n.
  virtual std::uint64_t size() const = 0;

  virtual double value(std::span<const double> x) const = 0;
  /// out = grad f_i(x). `out` has length dim().
  virtual void component_grad(std::uint64_t i, std::span<const double> x,
                              std::span<double> out) const = 0;
  /// out = grad f(x). The default averages all n components in index order.
  virtual void full_grad(std::span<const double> x, std::span<double> out) const;
  /// True when full_grad does not enumerate components.
  virtual bool has_closed_form_grad() const { return false; }
  /// True when full_grad is affordable for per-iteration diagnostics.
  virtual bool full_grad_available() const;
  /// Online problems must be planned with the sigma-based batch rule.
  virtual bool online() const { return false; }

  virtual const ProblemConstants& constants() const = 0;
  virtual const Vector& x0() const = 0;

  /// f(x0) - f*, when f* is known.
  std::optional<double> delta0() const;
};

using ProblemPtr = std::shared_ptr<const Problem>;

/// Above this many component evaluations a full gradient is considered too
/// expensive for per-step diagnostics.
inline constexpr std::uint64_t kExhaustiveGradLimit = 1ULL << 26;

}  // namespace page
