#include "page/theory.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>

#include "page/errors.hpp"
#include "page/rng.hpp"

namespace page {
namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
}

std::uint64_t isqrt(std::uint64_t n) {
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

// b = min{ceil(num / eps_term), n} clamped to >= 1.
std::uint64_t sigma_batch(std::optional<double> sigma, std::uint64_t n, double ratio) {
  if (!sigma) {
    if (n == kInfiniteN) throw ConfigError("online planning needs sigma when n is unbounded");
    return n;
  }
  if (*sigma < 0.0) throw ConfigError("sigma must be >= 0");
  const double raw = ratio;
  const std::uint64_t b = raw >= static_cast<double>(n) ? n : ceil_count(raw);
  return std::max<std::uint64_t>(1, std::min(b, n));
}

// Fills p, eta, grad_budget for an optimal-p plan with b, b_prime and T set.
void finish_budget(Plan& plan) {
  plan.grad_budget = static_cast<double>(plan.b) +
                     static_cast<double>(plan.T) *
                         nominal_cost_per_iter(plan.p, static_cast<double>(plan.b),
                                             static_cast<double>(plan.b_prime));
}

double sqrt_ratio(std::uint64_t b, std::uint64_t b_prime) {
  return std::sqrt(static_cast<double>(b)) / static_cast<double>(b_prime);
}

Plan pl_plan(Regime regime, std::uint64_t b, double L, double mu, double log_arg,
             std::optional<std::uint64_t> b_prime) {
  require_positive(mu, "mu");
  if (mu > L) throw ConfigError("mu must not exceed L");
  Plan plan;
  plan.regime = regime;
  plan.b = b;
  plan.b_prime = default_b_prime(b, b_prime);
  plan.p = optimal_p(static_cast<double>(plan.b), static_cast<double>(plan.b_prime));
  plan.kappa = L / mu;
  const double r = sqrt_ratio(plan.b, plan.b_prime);
  plan.eta = std::min(1.0 / (L * (1.0 + r)),
                      static_cast<double>(plan.b_prime) /
                          (2.0 * mu * static_cast<double>(plan.b + plan.b_prime)));
  if (log_arg <= 1.0) {
    plan.T = 0;
    plan.warnings.push_back("target is not below the initial gap; T = 0");
  } else {
    const double two_over_p =
        2.0 * static_cast<double>(plan.b + plan.b_prime) / static_cast<double>(plan.b_prime);
    plan.T = ceil_count(((1.0 + r) * *plan.kappa + two_over_p) * std::log(log_arg));
  }
  finish_budget(plan);
  return plan;
}

}  // namespace

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::finite: return "finite";
    case Regime::online: return "online";
    case Regime::finite_pl: return "finite_pl";
    case Regime::online_pl: return "online_pl";
    case Regime::gd: return "gd";
    case Regime::sgd: return "sgd";
  }
  return "?";
}

Regime parse_regime(const std::string& name) {
  for (Regime r : {Regime::finite, Regime::online, Regime::finite_pl, Regime::online_pl,
                   Regime::gd, Regime::sgd}) {
    if (to_string(r) == name) return r;
  }
  throw ConfigError("unknown regime '" + name + "'");
}

bool is_pl(Regime regime) { return regime == Regime::finite_pl || regime == Regime::online_pl; }

double optimal_p(double b, double b_prime) { return b_prime / (b + b_prime); }

double variance_factor(double p, double b_prime) { return std::sqrt((1.0 - p) / (p * b_prime)); }

double stepsize_bound(double L, double p, double b_prime) {
  return 1.0 / (L * (1.0 + variance_factor(p, b_prime)));
}

double nominal_cost_per_iter(double p, double b, double b_prime) {
  return p * b + (1.0 - p) * b_prime;
}

double theorem1_iterations(double L, double delta0, double eps, double vf) {
  return 2.0 * delta0 * L / (eps * eps) * (1.0 + vf);
}

double theorem2_iterations(double L, double delta0, double eps, double vf, double p) {
  return 4.0 * delta0 * L / (eps * eps) * (1.0 + vf) + 1.0 / p;
}

double pl_iterations(double kappa, double vf, double p, double log_arg) {
  return ((1.0 + vf) * kappa + 2.0 / p) * std::log(log_arg);
}

std::uint64_t ceil_count(double x) {
  if (!(x > 0.0)) return 0;
  if (!std::isfinite(x) || x >= 1.8e19) throw ConfigError("iteration or batch count overflows");
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-12 * std::max(1.0, std::abs(x))) return static_cast<std::uint64_t>(r);
  return static_cast<std::uint64_t>(std::ceil(x));
}

std::uint64_t default_b_prime(std::uint64_t b, std::optional<std::uint64_t> requested) {
  const std::uint64_t root = std::max<std::uint64_t>(1, isqrt(b));
  if (!requested) return root;
  if (*requested == 0) throw ConfigError("b_prime must be >= 1");
  return std::min(*requested, root);
}

Plan plan_finite(std::uint64_t n, double L, double delta0, double eps,
                 std::optional<std::uint64_t> b_prime) {
  require_positive(eps, "eps");
  require_positive(L, "L");
  require_positive(delta0, "delta0");
  if (n == 0 || n == kInfiniteN) throw ConfigError("finite planning needs 1 <= n < infinity");
  Plan plan;
  plan.regime = Regime::finite;
  plan.b = n;
  plan.b_prime = default_b_prime(n, b_prime);
  plan.p = optimal_p(static_cast<double>(plan.b), static_cast<double>(plan.b_prime));
  const double r = sqrt_ratio(plan.b, plan.b_prime);
  plan.eta = 1.0 / (L * (1.0 + r));
  plan.T = ceil_count(2.0 * delta0 * L / (eps * eps) * (1.0 + r));
  finish_budget(plan);
  return plan;
}

Plan plan_gd(std::uint64_t n, double L, double delta0, double eps) {
  require_positive(eps, "eps");
  require_positive(L, "L");
  require_positive(delta0, "delta0");
  if (n == 0 || n == kInfiniteN) throw ConfigError("gd planning needs 1 <= n < infinity");
  Plan plan;
  plan.regime = Regime::gd;
  plan.b = n;
  plan.b_prime = 1;
  plan.p = 1.0;
  plan.eta = 1.0 / L;
  plan.T = ceil_count(theorem1_iterations(L, delta0, eps, 0.0));
  finish_budget(plan);
  return plan;
}

Plan plan_online(std::optional<double> sigma, std::uint64_t n, double L, double delta0, double eps,
                 std::optional<std::uint64_t> b_prime) {
  require_positive(eps, "eps");
  require_positive(L, "L");
  require_positive(delta0, "delta0");
  Plan plan;
  plan.regime = Regime::online;
  plan.b = sigma_batch(sigma, n, sigma ? 2.0 * *sigma * *sigma / (eps * eps) : 0.0);
  plan.b_prime = default_b_prime(plan.b, b_prime);
  plan.p = optimal_p(static_cast<double>(plan.b), static_cast<double>(plan.b_prime));
  const double r = sqrt_ratio(plan.b, plan.b_prime);
  plan.eta = 1.0 / (L * (1.0 + r));
  plan.T = ceil_count(4.0 * delta0 * L / (eps * eps) * (1.0 + r) +
                      static_cast<double>(plan.b + plan.b_prime) /
                          static_cast<double>(plan.b_prime));
  finish_budget(plan);
  return plan;
}

Plan plan_sgd(std::optional<double> sigma, std::uint64_t n, double L, double delta0, double eps) {
  require_positive(eps, "eps");
  require_positive(L, "L");
  require_positive(delta0, "delta0");
  Plan plan;
  plan.regime = Regime::sgd;
  plan.b = sigma_batch(sigma, n, sigma ? 2.0 * *sigma * *sigma / (eps * eps) : 0.0);
  plan.b_prime = 1;
  plan.p = 1.0;
  plan.eta = 1.0 / L;
  plan.T = ceil_count(theorem2_iterations(L, delta0, eps, 0.0, 1.0));
  finish_budget(plan);
  return plan;
}

Plan plan_finite_pl(std::uint64_t n, double L, double mu, double delta0, double eps,
                    std::optional<std::uint64_t> b_prime) {
  require_positive(eps, "eps");
  require_positive(L, "L");
  require_positive(delta0, "delta0");
  if (n == 0 || n == kInfiniteN) throw ConfigError("finite planning needs 1 <= n < infinity");
  return pl_plan(Regime::finite_pl, n, L, mu, delta0 / eps, b_prime);
}

Plan plan_online_pl(std::optional<double> sigma, std::uint64_t n, double L, double mu,
                    double delta0, double eps, std::optional<std::uint64_t> b_prime) {
  require_positive(eps, "eps");
  require_positive(L, "L");
  require_positive(delta0, "delta0");
  require_positive(mu, "mu");
  const std::uint64_t b = sigma_batch(sigma, n, sigma ? 2.0 * *sigma * *sigma / (mu * eps) : 0.0);
  return pl_plan(Regime::online_pl, b, L, mu, 2.0 * delta0 / eps, b_prime);
}

double finite_grad_bound(std::uint64_t n, double L, double delta0, double eps) {
  const double dn = static_cast<double>(n);
  return dn + 8.0 * delta0 * L * std::sqrt(dn) / (eps * eps);
}

double online_grad_bound(std::uint64_t b, double L, double delta0, double eps) {
  const double db = static_cast<double>(b);
  return 3.0 * db + 16.0 * delta0 * L * std::sqrt(db) / (eps * eps);
}

double finite_pl_grad_bound(std::uint64_t n, double kappa, double delta0, double eps) {
  const double dn = static_cast<double>(n);
  return dn + (4.0 * std::sqrt(dn) * kappa + 4.0 * dn) * std::max(0.0, std::log(delta0 / eps));
}

double online_pl_grad_bound(std::uint64_t b, double kappa, double delta0, double eps) {
  const double db = static_cast<double>(b);
  return db + (4.0 * std::sqrt(db) * kappa + 4.0 * db) * std::max(0.0, std::log(2.0 * delta0 / eps));
}

double grad_bound(const Plan& plan, double L, double delta0, double eps) {
  switch (plan.regime) {
    case Regime::finite: return finite_grad_bound(plan.b, L, delta0, eps);
    case Regime::online: return online_grad_bound(plan.b, L, delta0, eps);
    case Regime::finite_pl: return finite_pl_grad_bound(plan.b, plan.kappa.value_or(1.0), delta0, eps);
    case Regime::online_pl: return online_pl_grad_bound(plan.b, plan.kappa.value_or(1.0), delta0, eps);
    case Regime::gd:
    case Regime::sgd: return plan.grad_budget;
  }
  return plan.grad_budget;
}

Plan plan_for(Regime regime, const Problem& problem, double eps,
              std::optional<std::uint64_t> b_prime, std::optional<double> delta0) {
  const auto& c = problem.constants();
  const std::optional<double> d0 = delta0 ? delta0 : problem.delta0();
  if (!d0) throw UnsupportedError("planning needs delta0: f* is unknown for " + problem.id());
  const std::uint64_t n = problem.size();
  const bool finite_regime =
      regime == Regime::finite || regime == Regime::gd || regime == Regime::finite_pl;
  if (finite_regime && problem.online())
    throw ConfigError("regime " + to_string(regime) + " needs full gradients; problem is online");
  auto need_mu = [&]() {
    if (!c.mu) throw UnsupportedError("PL planning needs a declared mu for " + problem.id());
    if (!c.f_star) throw UnsupportedError("PL planning needs f* for " + problem.id());
    return *c.mu;
  };
  switch (regime) {
    case Regime::finite: return plan_finite(n, c.L, *d0, eps, b_prime);
    case Regime::gd: return plan_gd(n, c.L, *d0, eps);
    case Regime::online: return plan_online(c.sigma, n, c.L, *d0, eps, b_prime);
    case Regime::sgd: return plan_sgd(c.sigma, n, c.L, *d0, eps);
    case Regime::finite_pl: return plan_finite_pl(n, c.L, need_mu(), *d0, eps, b_prime);
    case Regime::online_pl: return plan_online_pl(c.sigma, n, c.L, need_mu(), *d0, eps, b_prime);
  }
  throw ConfigError("unknown regime");
}

PageConfig to_config(const Plan& plan, std::uint64_t seed, double eps) {
  PageConfig cfg;
  cfg.eta = plan.eta;
  cfg.b = plan.b;
  cfg.b_prime = plan.b_prime;
  cfg.p = plan.p;
  cfg.seed = seed;
  cfg.max_iters = plan.T;
  cfg.target_eps = eps;
  if (is_pl(plan.regime)) {
    cfg.output_mode = OutputMode::last_iterate;
    cfg.stop_metric = StopMetric::f_gap;
  } else {
    cfg.output_mode = OutputMode::uniform_iterate;
    cfg.stop_metric = StopMetric::grad_norm;
  }
  return cfg;
}

bool satisfies_stepsize_bound(const Plan& plan, double L, std::optional<double> mu) {
  const double vf = variance_factor(plan.p, static_cast<double>(plan.b_prime));
  if (plan.eta * L * (1.0 + vf) > 1.0 + 1e-12) return false;
  if (is_pl(plan.regime) && mu && plan.eta > plan.p / (2.0 * *mu) * (1.0 + 1e-12)) return false;
  return true;
}

std::string plan_to_json(const Plan& plan) {
  nlohmann::ordered_json j;
  j["regime"] = to_string(plan.regime);
  j["eta"] = plan.eta;
  j["b"] = plan.b;
  j["b_prime"] = plan.b_prime;
  j["p"] = plan.p;
  j["T"] = plan.T;
  j["grad_budget"] = plan.grad_budget;
  j["kappa"] = plan.kappa ? nlohmann::ordered_json(*plan.kappa) : nlohmann::ordered_json(nullptr);
  return j.dump();
}

// ---------------------------------------------------------------------------
// Estimators

namespace {

// Uniform point in the ball of radius r around c.
Vector ball_point(const Vector& c, double r, CounterRng& rng) {
  const std::size_t d = c.size();
  Vector u(d);
  double nrm = 0.0;
  while (nrm == 0.0) {
    for (double& v : u) v = rng.next_normal();
    nrm = vec::norm(u);
  }
  const double scale = r * std::pow(rng.next_unit(), 1.0 / static_cast<double>(d)) / nrm;
  Vector x(c);
  for (std::size_t j = 0; j < d; ++j) x[j] += scale * u[j];
  return x;
}

// Component indices averaged by E_i: all of them, or a fixed sample.
std::vector<std::uint64_t> component_set(const Problem& problem, std::uint64_t limit,
                                         CounterRng& rng) {
  const std::uint64_t n = problem.size();
  std::vector<std::uint64_t> idx;
  if (n <= limit) {
    idx.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) idx[i] = i;
  } else {
    idx.resize(limit);
    for (auto& i : idx) i = rng.next_index(n);
  }
  return idx;
}

}  // namespace

Estimate estimate_L(const Problem& problem, const SmoothnessOptions& opt) {
  if (opt.num_pairs < 1) throw UsageError("estimate_L: num_pairs must be >= 1");
  require_positive(opt.radius, "radius");
  const std::size_t d = problem.dim();
  CounterRng rng(opt.seed, Stream::kEstimate);
  const auto idx = component_set(problem, opt.exhaustive_limit, rng);
  Vector gx(d), gy(d);
  double best = 0.0;
  std::uint64_t used = 0;
  for (std::uint64_t k = 0; k < opt.num_pairs; ++k) {
    Vector x = ball_point(problem.x0(), 0.5 * opt.radius, rng);
    Vector dir(d, 0.0);
    if (k < d) {
      dir[k] = 1.0;
    } else {
      for (double& v : dir) v = rng.next_normal();
      const double nrm = vec::norm(dir);
      if (nrm == 0.0) continue;
      for (double& v : dir) v /= nrm;
    }
    const double step = 0.5 * opt.radius * (1.0 - rng.next_unit());  // (0, r/2]
    Vector y(x);
    for (std::size_t j = 0; j < d; ++j) y[j] += step * dir[j];
    const double dxy = vec::dist_sq(x, y);
    if (!(dxy > 0.0)) continue;
    double acc = 0.0;
    for (std::uint64_t i : idx) {
      problem.component_grad(i, x, gx);
      problem.component_grad(i, y, gy);
      acc += vec::dist_sq(gx, gy);
    }
    const double ratio = std::sqrt(acc / static_cast<double>(idx.size()) / dxy);
    best = std::max(best, ratio);
    ++used;
  }
  if (used == 0) throw EstimationError("estimate_L: every sampled pair was degenerate");
  return Estimate{opt.safety * best, best, used};
}

Estimate estimate_sigma(const Problem& problem, const SmoothnessOptions& opt) {
  if (opt.num_pairs < 1) throw UsageError("estimate_sigma: num_points must be >= 1");
  const std::size_t d = problem.dim();
  CounterRng rng(opt.seed, Stream::kEstimate);
  const auto idx = component_set(problem, opt.exhaustive_limit, rng);
  Vector gi(d), gbar(d);
  double best = 0.0;
  for (std::uint64_t k = 0; k < opt.num_pairs; ++k) {
    const Vector x = k == 0 ? problem.x0() : ball_point(problem.x0(), opt.radius, rng);
    if (problem.full_grad_available()) {
      problem.full_grad(x, gbar);
    } else {
      vec::fill_zero(gbar);
      for (std::uint64_t i : idx) {
        problem.component_grad(i, x, gi);
        for (std::size_t j = 0; j < d; ++j) gbar[j] += gi[j];
      }
      for (double& v : gbar) v /= static_cast<double>(idx.size());
    }
    double acc = 0.0;
    for (std::uint64_t i : idx) {
      problem.component_grad(i, x, gi);
      acc += vec::dist_sq(gi, gbar);
    }
    best = std::max(best, acc / static_cast<double>(idx.size()));
  }
  const double s = std::sqrt(best);
  return Estimate{opt.safety * s, s, opt.num_pairs};
}

PlGridResult scan_pl_ratio(const Problem& problem, const GridSpec& spec, std::optional<double> mu) {
  const auto& c = problem.constants();
  if (!c.f_star) throw UnsupportedError("PL check needs f*, which is unknown for " + problem.id());
  const std::size_t d = problem.dim();
  const Vector center = spec.center ? *spec.center : (c.x_star ? *c.x_star : problem.x0());
  if (center.size() != d) throw ConfigError("grid center has the wrong dimension");
  if (spec.points_per_line < 1) throw UsageError("grid needs at least one point per line");

  std::vector<Vector> dirs;
  for (std::size_t j = 0; j < d; ++j) {
    Vector e(d, 0.0);
    e[j] = 1.0;
    dirs.push_back(std::move(e));
  }
  CounterRng rng(spec.seed, Stream::kEstimate);
  for (std::uint64_t k = 0; k < spec.random_directions; ++k) {
    Vector u(d);
    double nrm = 0.0;
    while (nrm == 0.0) {
      for (double& v : u) v = rng.next_normal();
      nrm = vec::norm(u);
    }
    for (double& v : u) v /= nrm;
    dirs.push_back(std::move(u));
  }

  PlGridResult out;
  out.mu_hat = std::numeric_limits<double>::infinity();
  out.mu_hat_resolved = std::numeric_limits<double>::infinity();
  const double fs = *c.f_star;
  const std::uint64_t m = spec.points_per_line;
  const double start = -spec.radius;
  const double stepw = m > 1 ? 2.0 * spec.radius / static_cast<double>(m - 1) : 0.0;
  Vector x(d), g(d);
  for (const Vector& dir : dirs) {
    for (std::uint64_t k = 0; k < m; ++k) {
      const double t = m > 1 ? start + static_cast<double>(k) * stepw : 0.0;
      for (std::size_t j = 0; j < d; ++j) x[j] = center[j] + t * dir[j];
      const double fx = problem.value(x);
      const double gap = fx - fs;
      if (gap < 1e-12) continue;
      problem.full_grad(x, g);
      const double gsq = vec::norm_sq(g);
      const double ratio = gsq / (2.0 * gap);
      const double resolved = gap - 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(fx) + std::abs(fs));
      ++out.admissible;
      if (resolved > 0.0) {
        out.mu_hat_resolved = std::min(out.mu_hat_resolved, gsq / (2.0 * resolved));
        if (mu && gsq < 2.0 * *mu * resolved) ++out.violations;
      }
      if (ratio < out.mu_hat) {
        out.mu_hat = ratio;
        out.argmin = x;
      }
    }
  }
  return out;
}

Estimate estimate_mu_pl(const Problem& problem, const GridSpec& spec) {
  const PlGridResult r = scan_pl_ratio(problem, spec);
  if (r.admissible == 0)
    throw EstimationError("estimate_mu_pl: no grid point outside the f - f* < 1e-12 neighborhood");
  return Estimate{r.mu_hat, r.mu_hat, r.admissible};
}

}  // namespace page
