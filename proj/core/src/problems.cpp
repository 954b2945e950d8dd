#include "page/problems.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>

#include "page/errors.hpp"
#include "page/rng.hpp"

namespace page {
namespace {

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Sign patterns applied within each group of four components.
constexpr std::array<double, 4> kDeltaRole{+1.0, -1.0, +1.0, -1.0};
constexpr std::array<double, 4> kNoiseRole{+1.0, -1.0, -1.0, +1.0};

}  // namespace

// ---------------------------------------------------------------------------
// QuadraticProblem

QuadraticProblem::QuadraticProblem(std::uint64_t n, std::size_t d, double mu, double L,
                                   std::uint64_t seed, const QuadraticOptions& options)
    : n_(n), seed_(seed), mu_param_(mu), L_param_(L) {
  if (n == 0 || d == 0) throw ConfigError("make_quadratic: n and d must be >= 1");
  if (!(mu > 0.0) || !(L > 0.0)) throw ConfigError("make_quadratic: mu and L must be positive");
  if (mu > L) throw ConfigError("make_quadratic: mu must not exceed L");
  if (options.hessian_spread < 0.0 || options.hessian_spread > 0.5)
    throw ConfigError("make_quadratic: hessian_spread must lie in [0, 0.5]");
  if (options.noise_scale < 0.0 || options.center_scale < 0.0)
    throw ConfigError("make_quadratic: noise_scale and center_scale must be >= 0");

  lambda_.assign(d, L);
  spread_.assign(d, 0.0);
  noise_.assign(d, options.noise_scale / std::sqrt(static_cast<double>(d)));
  if (d >= 2) {
    // The last coordinate carries curvature L with no spread, which pins the
    // average-smoothness constant to L. The rest are spaced in [mu, cap] with
    // cap chosen so lambda_j^2 (1 + a^2) <= L^2.
    const double ratio = L / mu;
    const double a = std::min(options.hessian_spread, std::sqrt(std::max(0.0, ratio * ratio - 1.0)));
    const double cap = std::max(mu, L / std::sqrt(1.0 + a * a));
    const std::size_t m = d - 1;
    for (std::size_t j = 0; j < m; ++j) {
      lambda_[j] = m == 1 ? mu : mu + (cap - mu) * static_cast<double>(j) / static_cast<double>(m - 1);
      spread_[j] = a;
    }
  }

  frac_ = static_cast<double>(4 * (n / 4)) / static_cast<double>(n);

  CounterRng rng(seed, Stream::kProblem);
  bbar_.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double u = 2.0 * rng.next_unit() - 1.0;
    bbar_[j] = lambda_[j] * options.center_scale * u;
  }
  x0_.assign(d, 0.0);

  Vector xs(d);
  for (std::size_t j = 0; j < d; ++j) xs[j] = bbar_[j] / lambda_[j];

  constants_.L = L;
  constants_.mu = mu;
  constants_.f_star = value(xs);
  constants_.x_star = xs;

  // Variance is exact and quadratic in x; declare its supremum over the ball of
  // radius 2|x*| around x0 = 0, which contains every iterate of a contracting run.
  const double radius = 2.0 * vec::norm(xs);
  double noise_sq = 0.0;
  double curvature_sq = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    noise_sq += noise_[j] * noise_[j];
    curvature_sq = std::max(curvature_sq, lambda_[j] * lambda_[j] * spread_[j] * spread_[j]);
  }
  constants_.sigma = std::sqrt(frac_ * (noise_sq + curvature_sq * radius * radius));
  constants_.sigma_region_radius = radius;
}

std::string QuadraticProblem::id() const {
  return "quadratic(n=" + std::to_string(n_) + ",d=" + std::to_string(dim()) +
         ",mu=" + fmt_double(mu_param_) + ",L=" + fmt_double(L_param_) +
         ",seed=" + std::to_string(seed_) + ")";
}

double QuadraticProblem::value(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t j = 0; j < lambda_.size(); ++j) s += 0.5 * lambda_[j] * x[j] * x[j] - bbar_[j] * x[j];
  return s;
}

void QuadraticProblem::component_grad(std::uint64_t i, std::span<const double> x,
                                      std::span<double> out) const {
  const std::size_t d = lambda_.size();
  const std::uint64_t group = i / 4;
  if (group >= n_ / 4) {
    for (std::size_t j = 0; j < d; ++j) out[j] = lambda_[j] * x[j] - bbar_[j];
    return;
  }
  const auto role = static_cast<std::size_t>(i % 4);
  // Two sign bits per coordinate; one Philox block covers 64 coordinates.
  std::array<std::uint32_t, 4> bits{};
  for (std::size_t j = 0; j < d; ++j) {
    const std::size_t slot = j % 64;
    if (slot == 0) {
      const auto block = static_cast<std::uint32_t>(j / 64);
      bits = philox4x32_10({static_cast<std::uint32_t>(group), static_cast<std::uint32_t>(group >> 32),
                            block, 0x51A7u},
                           {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
    }
    const std::uint32_t word = bits[slot / 16];
    const unsigned shift = static_cast<unsigned>(2 * (slot % 16));
    const double sign_delta = ((word >> shift) & 1u) ? -1.0 : 1.0;
    const double sign_noise = ((word >> (shift + 1)) & 1u) ? -1.0 : 1.0;
    const double delta = sign_delta * kDeltaRole[role] * spread_[j];
    const double z = sign_noise * kNoiseRole[role] * noise_[j];
    out[j] = lambda_[j] * (1.0 + delta) * x[j] - (bbar_[j] + z);
  }
}

void QuadraticProblem::full_grad(std::span<const double> x, std::span<double> out) const {
  for (std::size_t j = 0; j < lambda_.size(); ++j) out[j] = lambda_[j] * x[j] - bbar_[j];
}

double QuadraticProblem::gradient_variance(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t j = 0; j < lambda_.size(); ++j) {
    const double h = lambda_[j] * spread_[j] * x[j];
    s += h * h + noise_[j] * noise_[j];
  }
  return frac_ * s;
}

double QuadraticProblem::exact_average_smoothness() const {
  double m = 0.0;
  for (std::size_t j = 0; j < lambda_.size(); ++j)
    m = std::max(m, lambda_[j] * lambda_[j] * (1.0 + frac_ * spread_[j] * spread_[j]));
  return std::sqrt(m);
}

// ---------------------------------------------------------------------------
// PlSineProblem

PlSineProblem::PlSineProblem() : x0_{0.0} {
  constants_.L = 8.0;  // f''(x) = 2 + 6 cos 2x ranges over [-4, 8]
  constants_.mu = 1.0 / 32.0;
  constants_.sigma = 0.0;
  constants_.f_star = 0.0;
  constants_.x_star = Vector{0.0};
}

double PlSineProblem::value(std::span<const double> x) const {
  const double s = std::sin(x[0]);
  return x[0] * x[0] + 3.0 * s * s;
}

void PlSineProblem::component_grad(std::uint64_t, std::span<const double> x,
                                   std::span<double> out) const {
  out[0] = 2.0 * x[0] + 3.0 * std::sin(2.0 * x[0]);
}

void PlSineProblem::full_grad(std::span<const double> x, std::span<double> out) const {
  component_grad(0, x, out);
}

// ---------------------------------------------------------------------------
// HardInstanceProblem

HardInstanceProblem::HardInstanceProblem(std::uint64_t n, std::size_t d, double L, double delta0)
    : n_(n), d_(d), L_(L), delta0_(delta0) {
  if (n == 0 || d == 0) throw ConfigError("make_hard_instance: n and d must be >= 1");
  if (d % n != 0) throw ConfigError("make_hard_instance: d must be divisible by n");
  if (!(L > 0.0) || !(delta0 > 0.0))
    throw ConfigError("make_hard_instance: L and delta0 must be positive");

  const double nd = static_cast<double>(n);
  // delta0 = c^2 |sum_i v_i|^2 / (2 L n^2) = c^2 d / (2 L n^2)
  c_ = nd * std::sqrt(2.0 * L * delta0 / static_cast<double>(d));
  x0_.assign(d, 0.0);

  Vector xs(d, -c_ / (L * nd));
  constants_.L = L;
  constants_.mu = L;  // f = (L/2)|x - x*|^2 + const
  constants_.sigma = c_ * std::sqrt(static_cast<double>(d) * (nd - 1.0)) / nd;
  constants_.f_star = value(xs);
  constants_.x_star = std::move(xs);
}

std::string HardInstanceProblem::id() const {
  return "hard_instance(n=" + std::to_string(n_) + ",d=" + std::to_string(d_) +
         ",L=" + fmt_double(L_) + ",delta0=" + fmt_double(delta0_) + ")";
}

double HardInstanceProblem::value(std::span<const double> x) const {
  double lin = 0.0;
  double sq = 0.0;
  for (std::size_t j = 0; j < d_; ++j) {
    lin += x[j];
    sq += x[j] * x[j];
  }
  return c_ / static_cast<double>(n_) * lin + 0.5 * L_ * sq;
}

void HardInstanceProblem::component_grad(std::uint64_t i, std::span<const double> x,
                                         std::span<double> out) const {
  const std::size_t block = d_ / n_;
  const std::size_t begin = static_cast<std::size_t>(i) * block;
  for (std::size_t j = 0; j < d_; ++j) out[j] = L_ * x[j];
  for (std::size_t j = begin; j < begin + block; ++j) out[j] += c_;
}

void HardInstanceProblem::full_grad(std::span<const double> x, std::span<double> out) const {
  const double shift = c_ / static_cast<double>(n_);
  for (std::size_t j = 0; j < d_; ++j) out[j] = shift + L_ * x[j];
}

// ---------------------------------------------------------------------------
// LogRegProblem

LogRegProblem::LogRegProblem(Dataset data, double alpha) : data_(std::move(data)), alpha_(alpha) {
  if (data_.rows == 0 || data_.cols == 0) throw DataError("logreg: empty dataset");
  if (data_.labels.size() != data_.rows || data_.row_ptr.size() != data_.rows + 1)
    throw DataError("logreg: inconsistent dataset shapes");
  if (!(alpha >= 0.0)) throw ConfigError("logreg: alpha must be >= 0");
  for (std::size_t i = 0; i < data_.rows; ++i) {
    if (data_.labels[i] != 1.0 && data_.labels[i] != -1.0)
      throw DataError("logreg: label of sample " + std::to_string(i) + " is not +1 or -1");
  }
  x0_.assign(data_.cols, 0.0);

  // |grad f_i(x) - grad f_i(y)| <= (|a_i|^2/4 + 2 alpha)|x - y|: the logistic
  // curvature is at most 1/4 and |d^2/dt^2 t^2/(1+t^2)| <= 2.
  double mean_sq = 0.0;
  for (std::size_t i = 0; i < data_.rows; ++i) {
    double row_sq = 0.0;
    for (std::size_t k = data_.row_ptr[i]; k < data_.row_ptr[i + 1]; ++k) row_sq += data_.values[k] * data_.values[k];
    const double li = 0.25 * row_sq + 2.0 * alpha_;
    mean_sq += li * li;
  }
  constants_.L = std::sqrt(mean_sq / static_cast<double>(data_.rows));
}

std::string LogRegProblem::id() const {
  return "logreg(n=" + std::to_string(data_.rows) + ",d=" + std::to_string(data_.cols) +
         ",alpha=" + fmt_double(alpha_) + ")";
}

double LogRegProblem::margin(std::uint64_t i, std::span<const double> x) const {
  double m = 0.0;
  for (std::size_t k = data_.row_ptr[i]; k < data_.row_ptr[i + 1]; ++k) m += data_.values[k] * x[data_.col_idx[k]];
  return data_.labels[i] * m;
}

double LogRegProblem::regularizer(std::span<const double> x) const {
  double r = 0.0;
  for (double v : x) r += v * v / (1.0 + v * v);
  return alpha_ * r;
}

double LogRegProblem::value(std::span<const double> x) const {
  double loss = 0.0;
  for (std::size_t i = 0; i < data_.rows; ++i) {
    const double t = -margin(i, x);
    // log(1 + e^t) without overflow
    loss += t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
  }
  return loss / static_cast<double>(data_.rows) + regularizer(x);
}

void LogRegProblem::component_grad(std::uint64_t i, std::span<const double> x,
                                   std::span<double> out) const {
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double q = 1.0 + x[j] * x[j];
    out[j] = 2.0 * alpha_ * x[j] / (q * q);
  }
  const double m = margin(i, x);
  // d/dm log(1 + e^{-m}) = -1 / (1 + e^{m})
  const double weight = m >= 0.0 ? -std::exp(-m) / (1.0 + std::exp(-m)) : -1.0 / (1.0 + std::exp(m));
  const double y = data_.labels[i];
  for (std::size_t k = data_.row_ptr[i]; k < data_.row_ptr[i + 1]; ++k)
    out[data_.col_idx[k]] += weight * y * data_.values[k];
}

// ---------------------------------------------------------------------------
// Views

StreamView::StreamView(ProblemPtr base) : base_(std::move(base)) {
  if (!base_) throw UsageError("stream_view: null problem");
}

ScaledSmoothnessView::ScaledSmoothnessView(ProblemPtr base, double scale)
    : base_(std::move(base)), scale_(scale) {
  if (!base_) throw UsageError("ScaledSmoothnessView: null problem");
  if (!(scale > 0.0)) throw ConfigError("ScaledSmoothnessView: scale must be positive");
  constants_ = base_->constants();
  constants_.L *= scale;
}

std::string ScaledSmoothnessView::id() const {
  return base_->id() + "[L*" + fmt_double(scale_) + "]";
}

// ---------------------------------------------------------------------------
// Factories

std::shared_ptr<const QuadraticProblem> make_quadratic(std::uint64_t n, std::size_t d, double mu,
                                                       double L, std::uint64_t seed,
                                                       const QuadraticOptions& options) {
  return std::make_shared<const QuadraticProblem>(n, d, mu, L, seed, options);
}

std::shared_ptr<const PlSineProblem> make_pl_sine() { return std::make_shared<const PlSineProblem>(); }

std::shared_ptr<const HardInstanceProblem> make_hard_instance(std::uint64_t n, std::size_t d,
                                                              double L, double delta0) {
  return std::make_shared<const HardInstanceProblem>(n, d, L, delta0);
}

std::shared_ptr<const LogRegProblem> make_nonconvex_logreg(Dataset data, double alpha) {
  return std::make_shared<const LogRegProblem>(std::move(data), alpha);
}

ProblemPtr stream_view(ProblemPtr problem) {
  return std::make_shared<const StreamView>(std::move(problem));
}

}  // namespace page
