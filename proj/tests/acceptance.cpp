// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "page/harness.hpp"
#include "page/problems.hpp"
#include "page/rng.hpp"
#include "page/theory.hpp"
#include "page/vec.hpp"
#include "page/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using page::Vector;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

const fs::path kTmp = PAGE_TEST_TMP;
const fs::path kConfigs = PAGE_CONFIG_DIR;

// Summaries produced by the criteria, replayed by criterion 9.
std::vector<fs::path> g_summaries;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = kTmp / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_err_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

json seed_list(std::uint64_t count) {
  json s = json::array();
  for (std::uint64_t k = 1; k <= count; ++k) s.push_back(k);
  return s;
}

// ---------------------------------------------------------------------------

bool gd_matches_reference(const page::Problem& p, std::uint64_t steps, std::string& why) {
  const double eta = 1.0 / p.constants().L;
  page::PageConfig c;
  c.eta = eta;
  c.b = p.size();
  c.b_prime = 1;
  c.p = 1.0;
  c.max_iters = steps;
  c.early_stop = false;
  page::PageState s = page::init_state(p, c);
  Vector x = p.x0(), g(p.dim());
  if (s.x != x) {
    why = p.id() + ": x0 differs";
    return false;
  }
  for (std::uint64_t t = 0; t < steps; ++t) {
    page::step(s, p, c);
    p.full_grad(x, g);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] -= eta * g[j];
    if (s.x != x) {
      why = p.id() + ": first mismatch at t=" + std::to_string(t + 1);
      return false;
    }
  }
  return true;
}

Outcome crit1() {
  Outcome o;
  const auto q = page::make_quadratic(1024, 16, 0.02, 1.0, 5);
  const auto h = page::make_hard_instance(64, 256, 1.0, 1.0);
  std::string why;
  o.passed = gd_matches_reference(*q, 200, why) && gd_matches_reference(*h, 200, why);
  o.detail = o.passed ? "200 steps bitwise equal on quadratic and hard instance" : why;

  // The same runs through the harness, for the replay criterion.
  for (const char* problem :
       {R"({"type": "quadratic", "n": 1024, "d": 16, "mu": 0.02, "L": 1.0, "seed": 5})",
        R"({"type": "hard_instance", "n": 64, "d": 256})"}) {
    json cfg;
    cfg["problem"] = json::parse(problem);
    cfg["regime"] = "gd";
    cfg["eps"] = 1e-3;
    cfg["max_iters"] = 200;
    cfg["early_stop"] = false;
    cfg["seeds"] = {1};
    cfg["out_dir"] = fresh_dir(std::string("c1_") + cfg["problem"]["type"].get<std::string>()).string();
    g_summaries.push_back(page::run_experiment(cfg.dump()).summary_path);
  }
  return o;
}

Outcome crit2() {
  const std::uint64_t n = 4096;
  const double eps = 0.05;
  json cfg;
  cfg["problem"] = {{"type", "hard_instance"}, {"n", n}, {"d", n}, {"L", 1.0}, {"delta0", 1.0}};
  cfg["regime"] = "finite";
  cfg["eps"] = eps;
  cfg["seeds"] = seed_list(20);
  cfg["out_dir"] = fresh_dir("c2").string();
  const auto res = page::run_experiment(cfg.dump());
  g_summaries.push_back(res.summary_path);
  const double bound = static_cast<double>(n) + 8.0 * std::sqrt(static_cast<double>(n)) / (eps * eps);
  Outcome o;
  o.passed = res.exit_code == page::kExitOk;
  std::uint64_t worst = 0;
  for (const auto& r : res.runs) {
    if (!r.grad_evals_to_target || static_cast<double>(*r.grad_evals_to_target) > bound) {
      o.passed = false;
      worst = std::numeric_limits<std::uint64_t>::max();
    } else {
      worst = std::max(worst, *r.grad_evals_to_target);
    }
  }
  o.detail = "max #grad over 20 seeds " +
             (worst == std::numeric_limits<std::uint64_t>::max() ? std::string("unreached") : std::to_string(worst)) +
             " vs bound " + fmt(bound);
  return o;
}

Outcome crit3() {
  page::CounterRng rng(2024, page::Stream::kMonteCarlo);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double b = static_cast<double>(1 + rng.next_index(1000000));
    const double bp = static_cast<double>(1 + rng.next_index(static_cast<std::uint64_t>(b)));
    const double p = page::optimal_p(b, bp);
    const double lhs = page::variance_factor(p, bp);
    const double rhs = std::sqrt(b) / bp;
    worst = std::max(worst, std::abs(lhs - rhs) / rhs);
  }
  return {worst <= 1e-12, "max relative error " + fmt(worst)};
}

Outcome crit4() {
  const std::uint64_t trials = 100000;
  const double p = 0.5;
  const std::uint64_t bp = 4;

  // State (x^t, g^t): x^t off the optimum, g^t the true gradient plus a fixed error.
  auto state = [&](const page::Problem& prob, Vector& xt, Vector& gt, Vector& xt1) {
    page::CounterRng rng(7, page::Stream::kEstimate);
    xt = prob.x0();
    for (double& v : xt) v += 0.3 * rng.next_normal();
    gt.assign(prob.dim(), 0.0);
    prob.full_grad(xt, gt);
    const double scale = 0.5 / std::sqrt(static_cast<double>(prob.dim()));
    for (double& v : gt) v += scale * rng.next_normal();
    const double eta = page::stepsize_bound(prob.constants().L, p, static_cast<double>(bp));
    xt1 = xt;
    for (std::size_t j = 0; j < xt1.size(); ++j) xt1[j] -= eta * gt[j];
  };

  Vector xt, gt, xt1;
  const auto h = page::make_hard_instance(64, 256, 1.0, 1.0);
  state(*h, xt, gt, xt1);
  page::RecursionOptions two;
  two.two_sided = true;
  const auto rh = page::check_variance_recursion(*h, xt, xt1, gt, p, bp, trials, 11, two);
  const double exact = page::exact_recursion_mean(*h, xt, xt1, gt, p, bp, h->size());

  const auto q = page::make_quadratic(1024, 16, 0.02, 1.0, 5);
  state(*q, xt, gt, xt1);
  const auto rq = page::check_variance_recursion(*q, xt, xt1, gt, p, bp, trials, 13);

  Outcome o;
  o.passed = rh.status == page::CheckStatus::pass && rq.status == page::CheckStatus::pass;
  o.detail = "hard instance mean " + fmt(rh.observed) + " vs RHS " + fmt(rh.bound) + " (se " +
             fmt(rh.std_err) + ", exact conditional mean " + fmt(exact) + ", two-sided " +
             page::to_string(rh.status) + "); quadratic mean " +
             fmt(rq.observed) + " <= RHS " + fmt(rq.bound) + " + 3se: " + page::to_string(rq.status);
  return o;
}

Outcome crit5() {
  json problem = {{"type", "quadratic"}, {"n", 1024}, {"d", 16}, {"mu", 0.02}, {"L", 1.0}, {"seed", 5}};
  const auto prob = page::build_problem(problem.dump());
  const double mu = *prob->constants().mu;
  const double delta0 = *prob->delta0();
  const double eps = 1e-3 * delta0;
  const page::Plan plan = page::plan_for(page::Regime::finite_pl, *prob, eps);
  const double rate = 1.0 - mu * plan.eta;
  const auto T = static_cast<std::uint64_t>(std::ceil(std::log(1e-3) / std::log(rate)));
  const double bound = std::pow(rate, static_cast<double>(T)) * delta0;

  json cfg;
  cfg["problem"] = problem;
  cfg["regime"] = "finite_pl";
  cfg["eps"] = eps;
  cfg["max_iters"] = T;
  cfg["early_stop"] = false;
  cfg["seeds"] = seed_list(200);
  cfg["outputs"] = {{"trace_csv", "trace_seed{seed}.csv"}, {"summary_json", "summary.json"}};
  cfg["out_dir"] = fresh_dir("c5").string();
  const auto res = page::run_experiment(cfg.dump());
  g_summaries.push_back(res.summary_path);
  std::vector<double> gaps;
  for (const auto& r : res.runs) gaps.push_back(r.final_f_gap.value_or(std::nan("")));
  const double m = mean_of(gaps);
  const double se = std_err_of(gaps);
  Outcome o;
  o.passed = res.exit_code == page::kExitOk && m <= bound + 3.0 * se;
  o.detail = "T=" + std::to_string(T) + " eta=" + fmt(plan.eta) + " b'=" + std::to_string(plan.b_prime) +
             ": mean f-f* " + fmt(m) + " (se " + fmt(se) + ") vs (1-mu eta)^T delta0 " + fmt(bound);
  return o;
}

Outcome crit6() {
  const auto f = page::make_pl_sine();
  page::GridSpec grid;
  grid.radius = 10.0;
  grid.points_per_line = 100000;
  const auto r = page::check_pl_constant(*f, 1.0 / 32.0, grid);
  const auto est = page::estimate_mu_pl(*f, grid);
  Outcome o;
  o.passed = r.passed && est.value >= 1.0 / 32.0 && est.value <= 0.5;
  o.detail = "check " + page::to_string(r.status) + ", mu_hat " + fmt(est.value) + " over " +
             std::to_string(est.samples) + " points";
  return o;
}

Outcome crit7() {
  Outcome o;
  o.passed = true;
  for (const char* name : {"compare_online.json", "compare_finite.json"}) {
    json cfg = json::parse(page::read_text_file(kConfigs / name));
    cfg["seeds"] = seed_list(20);
    cfg["out_dir"] = fresh_dir(std::string("c7_") + name).string();
    const auto res = page::compare_methods(cfg.dump());
    g_summaries.push_back(res.json_path);
    const double ours = res.methods.at(0).median_grad_to_target;
    const double base = res.methods.at(1).median_grad_to_target;
    const bool ok = res.exit_code == page::kExitOk && ours < base;
    o.passed = o.passed && ok;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += res.methods[0].name + " " + fmt(ours) + " < " + res.methods[1].name + " " + fmt(base);
  }
  return o;
}

Outcome crit8() {
  const double L = 1.0, delta0 = 1.0;
  const auto h = page::make_hard_instance(4096, 4096, L, delta0);
  const auto& c = h->constants();
  Vector g(h->dim());
  h->full_grad(*c.x_star, g);
  const double g_star = page::vec::norm(g);
  const double gap_err = std::abs(h->value(h->x0()) - *c.f_star - delta0) / delta0;
  h->full_grad(h->x0(), g);
  const double g0 = page::vec::norm(g);
  const double limit = std::sqrt(2.0 * delta0 * L);
  Outcome o;
  o.passed = g_star <= 1e-12 && gap_err <= 1e-12 && g0 <= limit * (1.0 + 1e-12);
  o.detail = "|grad f(x*)| " + fmt(g_star) + ", delta0 rel err " + fmt(gap_err) + ", |grad f(x0)| " +
             fmt(g0) + " vs sqrt(2 delta0 L) " + fmt(limit);
  return o;
}

Outcome crit9() {
  Outcome o;
  o.passed = !g_summaries.empty();
  std::uint64_t files = 0;
  for (const fs::path& s : g_summaries) {
    const auto rep = page::replay(s);
    files += rep.compared;
    if (rep.exit_code != page::kExitOk) {
      o.passed = false;
      o.detail += rep.mismatches.front() + " ";
    }
  }
  o.detail += std::to_string(files) + " files across " + std::to_string(g_summaries.size()) + " summaries";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> criteria = {
      {1, "GD equivalence", 1.0, crit1},
      {2, "finite-sum budget conformance", 60.0, crit2},
      {3, "optimal-p identity", 1.0, crit3},
      {4, "MSE recursion", 30.0, crit4},
      {5, "PL linear rate", 120.0, crit5},
      {6, "PL constant of x^2 + 3 sin^2 x", 60.0, crit6},
      {7, "method ordering", 300.0, crit7},
      {8, "hard-instance closed forms", 60.0, crit8},
      {9, "deterministic replay", 300.0, crit9},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o.passed = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_s) {
      o.passed = false;
      o.detail += " [runtime " + fmt(secs) + " s exceeds " + fmt(c.budget_s) + " s]";
    }
    if (!o.passed) ++failed;
    std::printf("[%s] %d %s (%.2f s): %s\n", o.passed ? "PASS" : "FAIL", c.id, c.name, secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
