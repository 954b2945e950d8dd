#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>

#include "page/dataset.hpp"
#include "page/problem.hpp"

namespace page {

struct QuadraticOptions {
  /// Relative per-component spread of the Hessian diagonal (0 gives identical Hessians).
  double hessian_spread = 0.25;
  /// Root-mean-square norm of the per-component linear-term noise.
  double noise_scale = 1.0;
  /// Coordinates of x* are drawn uniformly from [-center_scale, center_scale].
  double center_scale = 1.0;
};

/// f_i(x) = 1/2 sum_j lambda_j (1 + delta_ij) x_j^2 - sum_j (bbar_j + z_ij) x_j.
///
/// Components are generated on demand from (seed, i): indices are grouped in
/// fours and each group applies the sign patterns (+,+), (-,-), (+,-), (-,+) to
/// (delta, z), so the perturbations and their cross moments average to exactly
/// zero. Memory use is O(d) for any n, which lets the same family serve as an
/// online stream.
class QuadraticProblem final : public Problem {
 public:
  QuadraticProblem(std::uint64_t n, std::size_t d, double mu, double L, std::uint64_t seed,
                   const QuadraticOptions& options);

  std::string id() const override;
  std::size_t dim() const override { return lambda_.size(); }
  std::uint64_t size() const override { return n_; }
  double value(std::span<const double> x) const override;
  void component_grad(std::uint64_t i, std::span<const double> x,
                      std::span<double> out) const override;
  void full_grad(std::span<const double> x, std::span<double> out) const override;
  bool has_closed_form_grad() const override { return true; }
  const ProblemConstants& constants() const override { return constants_; }
  const Vector& x0() const override { return x0_; }

  /// Diagonal of the mean Hessian.
  const Vector& spectrum() const { return lambda_; }
  /// Exact E_i |grad f_i(x) - grad f(x)|^2.
  double gradient_variance(std::span<const double> x) const;
  /// Exact sqrt(max_j lambda_j^2 E_i (1 + delta_ij)^2).
  double exact_average_smoothness() const;
  /// Fraction of components that carry a perturbation (4 floor(n/4) / n).
  double perturbed_fraction() const { return frac_; }

 private:
  std::uint64_t n_;
  std::uint64_t seed_;
  double mu_param_;
  double L_param_;
  Vector lambda_;
  Vector spread_;  // a_j
  Vector noise_;   // s_j
  Vector bbar_;
  double frac_;
  Vector x0_;
  ProblemConstants constants_;
};

/// f(x) = x^2 + 3 sin^2 x; nonconvex, PL with mu = 1/32, L = 8.
class PlSineProblem final : public Problem {
 public:
  PlSineProblem();
  std::string id() const override { return "pl_sine"; }
  std::size_t dim() const override { return 1; }
  std::uint64_t size() const override { return 1; }
  double value(std::span<const double> x) const override;
  void component_grad(std::uint64_t i, std::span<const double> x,
                      std::span<double> out) const override;
  void full_grad(std::span<const double> x, std::span<double> out) const override;
  bool has_closed_form_grad() const override { return true; }
  const ProblemConstants& constants() const override { return constants_; }
  const Vector& x0() const override { return x0_; }

 private:
  Vector x0_;
  ProblemConstants constants_;
};

/// f_i(x) = c <v_i, x> + (L/2)|x|^2 with v_i the indicator of the i-th block of
/// d/n coordinates; c is set so that f(0) - f* equals the requested delta0.
class HardInstanceProblem final : public Problem {
 public:
  HardInstanceProblem(std::uint64_t n, std::size_t d, double L, double delta0);

  std::string id() const override;
  std::size_t dim() const override { return d_; }
  std::uint64_t size() const override { return n_; }
  double value(std::span<const double> x) const override;
  void component_grad(std::uint64_t i, std::span<const double> x,
                      std::span<double> out) const override;
  void full_grad(std::span<const double> x, std::span<double> out) const override;
  bool has_closed_form_grad() const override { return true; }
  const ProblemConstants& constants() const override { return constants_; }
  const Vector& x0() const override { return x0_; }

  double c() const { return c_; }
  std::size_t block_size() const { return d_ / n_; }

 private:
  std::uint64_t n_;
  std::size_t d_;
  double L_;
  double delta0_;
  double c_;
  Vector x0_;
  ProblemConstants constants_;
};

/// Logistic loss with the nonconvex regularizer alpha sum_j x_j^2 / (1 + x_j^2).
/// f* is unknown and left absent. L is the analytic bound
/// sqrt(mean_i (|a_i|^2/4 + 2 alpha)^2).
class LogRegProblem final : public Problem {
 public:
  LogRegProblem(Dataset data, double alpha);

  std::string id() const override;
  std::size_t dim() const override { return data_.cols; }
  std::uint64_t size() const override { return data_.rows; }
  double value(std::span<const double> x) const override;
  void component_grad(std::uint64_t i, std::span<const double> x,
                      std::span<double> out) const override;
  const ProblemConstants& constants() const override { return constants_; }
  const Vector& x0() const override { return x0_; }

  const Dataset& data() const { return data_; }
  double alpha() const { return alpha_; }

 private:
  double margin(std::uint64_t i, std::span<const double> x) const;
  double regularizer(std::span<const double> x) const;

  Dataset data_;
  double alpha_;
  Vector x0_;
  ProblemConstants constants_;
};

/// Pass-through view that marks a finite-sum problem as online.
class StreamView final : public Problem {
 public:
  explicit StreamView(ProblemPtr base);

  std::string id() const override { return "stream(" + base_->id() + ")"; }
  std::size_t dim() const override { return base_->dim(); }
  std::uint64_t size() const override { return base_->size(); }
  double value(std::span<const double> x) const override { return base_->value(x); }
  void component_grad(std::uint64_t i, std::span<const double> x,
                      std::span<double> out) const override {
    base_->component_grad(i, x, out);
  }
  void full_grad(std::span<const double> x, std::span<double> out) const override {
    base_->full_grad(x, out);
  }
  bool has_closed_form_grad() const override { return base_->has_closed_form_grad(); }
  bool full_grad_available() const override { return base_->full_grad_available(); }
  bool online() const override { return true; }
  const ProblemConstants& constants() const override { return base_->constants(); }
  const Vector& x0() const override { return base_->x0(); }

  const ProblemPtr& base() const { return base_; }

 private:
  ProblemPtr base_;
};

/// Same oracle with the declared L multiplied by `scale`; used for fault
/// injection in the verification suite.
class ScaledSmoothnessView final : public Problem {
 public:
  ScaledSmoothnessView(ProblemPtr base, double scale);

  std::string id() const override;
  std::size_t dim() const override { return base_->dim(); }
  std::uint64_t size() const override { return base_->size(); }
  double value(std::span<const double> x) const override { return base_->value(x); }
  void component_grad(std::uint64_t i, std::span<const double> x,
                      std::span<double> out) const override {
    base_->component_grad(i, x, out);
  }
  void full_grad(std::span<const double> x, std::span<double> out) const override {
    base_->full_grad(x, out);
  }
  bool has_closed_form_grad() const override { return base_->has_closed_form_grad(); }
  bool full_grad_available() const override { return base_->full_grad_available(); }
  bool online() const override { return base_->online(); }
  const ProblemConstants& constants() const override { return constants_; }
  const Vector& x0() const override { return base_->x0(); }

 private:
  ProblemPtr base_;
  double scale_;
  ProblemConstants constants_;
};

std::shared_ptr<const QuadraticProblem> make_quadratic(std::uint64_t n, std::size_t d, double mu,
                                                       double L, std::uint64_t seed,
                                                       const QuadraticOptions& options = {});
std::shared_ptr<const PlSineProblem> make_pl_sine();
std::shared_ptr<const HardInstanceProblem> make_hard_instance(std::uint64_t n, std::size_t d,
                                                              double L, double delta0);
std::shared_ptr<const LogRegProblem> make_nonconvex_logreg(Dataset data, double alpha);
ProblemPtr stream_view(ProblemPtr problem);

}  // namespace page
