#include <gtest/gtest.h>

#include <cmath>
#include <json.hpp>

#include "page/errors.hpp"
#include "page/problems.hpp"
#include "page/rng.hpp"
#include "page/theory.hpp"

using page::Plan;
using page::Regime;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(Formulas, OptimalPIdentity) {
  page::CounterRng rng(1, page::Stream::kEstimate);
  for (int k = 0; k < 1000; ++k) {
    const double b = 1.0 + static_cast<double>(rng.next_index(1000000));
    const double bp = 1.0 + static_cast<double>(rng.next_index(static_cast<std::uint64_t>(b)));
    const double p = page::optimal_p(b, bp);
    EXPECT_LE(rel(page::variance_factor(p, bp), std::sqrt(b) / bp), 1e-12) << b << " " << bp;
  }
}

TEST(Formulas, CeilCountSnapsRoundingNoise) {
  EXPECT_EQ(page::ceil_count(2.0), 2u);
  EXPECT_EQ(page::ceil_count(2.0 + 1e-14), 2u);
  EXPECT_EQ(page::ceil_count(2.001), 3u);
  EXPECT_EQ(page::ceil_count(0.0), 0u);
  EXPECT_EQ(page::ceil_count(-3.0), 0u);
  EXPECT_THROW(page::ceil_count(1e30), page::ConfigError);
}

TEST(Formulas, DefaultBPrime) {
  EXPECT_EQ(page::default_b_prime(10000, std::nullopt), 100u);
  EXPECT_EQ(page::default_b_prime(99, std::nullopt), 9u);
  EXPECT_EQ(page::default_b_prime(1, std::nullopt), 1u);
  EXPECT_EQ(page::default_b_prime(10000, 30), 30u);
  EXPECT_EQ(page::default_b_prime(10000, 500), 100u);
  EXPECT_THROW(page::default_b_prime(100, 0), page::ConfigError);
}

TEST(PlanFinite, LargeNExample) {
  const Plan plan = page::plan_finite(10000, 1.0, 1.0, 1e-2, 100);
  EXPECT_EQ(plan.b, 10000u);
  EXPECT_EQ(plan.b_prime, 100u);
  EXPECT_NEAR(plan.p, 100.0 / 10100.0, 1e-18);
  EXPECT_NEAR(page::variance_factor(plan.p, 100.0), 1.0, 1e-14);
  EXPECT_DOUBLE_EQ(plan.eta, 0.5);
  EXPECT_EQ(plan.T, 40000u);
  // b + T (p b + (1 - p) b') evaluated directly.
  const double p = 100.0 / 10100.0;
  EXPECT_NEAR(plan.grad_budget, 10000.0 + 40000.0 * (p * 10000.0 + (1.0 - p) * 100.0), 1e-6);
  EXPECT_LE(plan.grad_budget, 1e4 + 8e6);
  EXPECT_FALSE(plan.kappa);
}

TEST(PlanFinite, DegenerateSingleComponent) {
  const Plan plan = page::plan_finite(1, 2.0, 1.0, 0.5);
  EXPECT_EQ(plan.b_prime, 1u);
  EXPECT_DOUBLE_EQ(plan.p, 0.5);
  EXPECT_DOUBLE_EQ(plan.eta, 1.0 / (2.0 * 2.0));
}

TEST(PlanFinite, RejectsBadInputs) {
  EXPECT_THROW(page::plan_finite(100, 1.0, 1.0, 0.0), page::ConfigError);
  EXPECT_THROW(page::plan_finite(100, 1.0, 1.0, -1.0), page::ConfigError);
  EXPECT_THROW(page::plan_finite(0, 1.0, 1.0, 0.1), page::ConfigError);
  EXPECT_THROW(page::plan_finite(page::kInfiniteN, 1.0, 1.0, 0.1), page::ConfigError);
}

TEST(PlanFinite, BudgetAgainstBPrime) {
  // The expected per-iteration cost 2 n b' / (n + b') grows faster than T
  // shrinks, so the budget rises with b'; every b' <= sqrt(n) stays within
  // the n + 8 delta0 L sqrt(n) / eps^2 bound.
  for (std::uint64_t n : {100u, 1024u, 10000u}) {
    for (double eps : {0.05, 0.01}) {
      double prev = 0.0;
      const auto root = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
      for (std::uint64_t bp = 1; bp <= root; ++bp) {
        const Plan plan = page::plan_finite(n, 1.0, 1.0, eps, bp);
        ASSERT_EQ(plan.b_prime, bp);
        EXPECT_GE(plan.grad_budget, prev);
        EXPECT_LE(plan.grad_budget, page::finite_grad_bound(n, 1.0, 1.0, eps));
        prev = plan.grad_budget;
      }
    }
  }
}

TEST(PlanGd, ClosedFormValues) {
  const Plan plan = page::plan_gd(50, 1.0, 1.0, 1.0);
  EXPECT_EQ(plan.T, 2u);
  EXPECT_DOUBLE_EQ(plan.p, 1.0);
  EXPECT_DOUBLE_EQ(plan.eta, 1.0);
  EXPECT_DOUBLE_EQ(plan.grad_budget, 50.0 + 2.0 * 50.0);
  // At the trivial accuracy sqrt(2 delta0 L) a single step suffices.
  EXPECT_EQ(page::plan_gd(50, 2.0, 3.0, std::sqrt(12.0)).T, 1u);
}

TEST(PlanGd, MatchesTheoremFormulasAtPOne) {
  for (double eps : {0.3, 0.05, 0.011}) {
    const Plan gd = page::plan_gd(777, 1.7, 2.5, eps);
    const double T = page::theorem1_iterations(1.7, 2.5, eps, page::variance_factor(1.0, 1.0));
    EXPECT_EQ(gd.T, page::ceil_count(T));
    EXPECT_DOUBLE_EQ(gd.grad_budget, 777.0 + static_cast<double>(gd.T) * 777.0);
  }
}

TEST(PlanGd, BudgetLinearInN) {
  const Plan a = page::plan_gd(100, 1.0, 1.0, 0.1);
  const Plan b = page::plan_gd(200, 1.0, 1.0, 0.1);
  EXPECT_DOUBLE_EQ(b.grad_budget, 2.0 * a.grad_budget);
}

TEST(PlanOnline, SigmaBatchRule) {
  const Plan plan = page::plan_online(1.0, 1000000000ULL, 1.0, 1.0, 0.1);
  EXPECT_EQ(plan.b, 200u);
  EXPECT_EQ(plan.b_prime, 14u);
  const Plan small = page::plan_online(1.0, 50, 1.0, 1.0, 0.1);
  EXPECT_EQ(small.b, 50u);
  const Plan inf = page::plan_online(1.0, page::kInfiniteN, 1.0, 1.0, 0.1);
  EXPECT_EQ(inf.b, 200u);
  EXPECT_THROW(page::plan_online(std::nullopt, page::kInfiniteN, 1.0, 1.0, 0.1), page::ConfigError);
}

TEST(PlanOnline, IterationFormula) {
  const Plan plan = page::plan_online(1.0, page::kInfiniteN, 1.0, 1.0, 0.1, 10);
  const double r = std::sqrt(200.0) / 10.0;
  EXPECT_EQ(plan.T, page::ceil_count(400.0 * (1.0 + r) + 210.0 / 10.0));
  EXPECT_LE(plan.grad_budget, page::online_grad_bound(200, 1.0, 1.0, 0.1));
}

TEST(PlanSgd, ClosedFormValues) {
  const Plan plan = page::plan_sgd(1.0, page::kInfiniteN, 1.0, 1.0, 0.1);
  EXPECT_EQ(plan.b, 200u);
  EXPECT_EQ(plan.T, 401u);
  EXPECT_DOUBLE_EQ(plan.eta, 1.0);
  // 4 sigma^2 / eps^2 + 8 delta0 L sigma^2 / eps^4
  EXPECT_NEAR(plan.grad_budget, 400.0 + 80000.0, 1e-9);
}

TEST(PlanFinitePl, SmallStepsizeMatchesFiniteWhenIllConditioned) {
  const std::uint64_t n = 400;
  const double L = 1.0;
  const double mu = L / (2.0 * std::sqrt(400.0));  // kappa = 2 sqrt(n)
  const Plan pl = page::plan_finite_pl(n, L, mu, 1.0, 1e-3);
  const Plan fin = page::plan_finite(n, L, 1.0, 1e-3);
  EXPECT_DOUBLE_EQ(pl.eta, fin.eta);
  EXPECT_DOUBLE_EQ(*pl.kappa, 40.0);
}

TEST(PlanFinitePl, SingleComponentIterations) {
  const Plan plan = page::plan_finite_pl(1, 1.0, 1.0, 1.0, 0.01);
  EXPECT_EQ(plan.T, page::ceil_count(6.0 * std::log(100.0)));
}

TEST(PlanFinitePl, SolvedAtStartGivesZeroIterations) {
  const Plan plan = page::plan_finite_pl(100, 1.0, 0.1, 1.0, 1.0);
  EXPECT_EQ(plan.T, 0u);
  EXPECT_FALSE(plan.warnings.empty());
  EXPECT_DOUBLE_EQ(plan.grad_budget, 100.0);
  EXPECT_EQ(page::plan_finite_pl(100, 1.0, 0.1, 1.0, 2.0).T, 0u);
}

TEST(PlanFinitePl, RejectsMuAboveL) {
  EXPECT_THROW(page::plan_finite_pl(100, 1.0, 2.0, 1.0, 0.1), page::ConfigError);
}

TEST(PlanFinitePl, WithinBound) {
  for (std::uint64_t n : {16u, 1024u, 4096u}) {
    for (double kappa : {1.0, 10.0, 1000.0}) {
      const Plan plan = page::plan_finite_pl(n, 1.0, 1.0 / kappa, 1.0, 1e-4);
      const double cost = page::nominal_cost_per_iter(plan.p, static_cast<double>(plan.b),
                                                     static_cast<double>(plan.b_prime));
      EXPECT_LE(plan.grad_budget, page::finite_pl_grad_bound(n, kappa, 1.0, 1e-4) + cost);
    }
  }
}

TEST(PlanOnlinePl, BatchRuleAndBound) {
  const Plan plan = page::plan_online_pl(1.0, 1000000000ULL, 1.0, 0.1, 1.0, 0.1);
  EXPECT_EQ(plan.b, 200u);
  // b' = sqrt(b) exactly.
  const Plan sq = page::plan_online_pl(1.0, page::kInfiniteN, 1.0, 0.01, 1.0, 0.02, 100);
  ASSERT_EQ(sq.b, 10000u);
  ASSERT_EQ(sq.b_prime, 100u);
  const double cost = page::nominal_cost_per_iter(sq.p, 10000.0, 100.0);
  const double bound = 10000.0 + (4.0 * 100.0 * 100.0 + 4.0 * 10000.0) * std::log(2.0 / 0.02);
  EXPECT_NEAR(page::online_pl_grad_bound(10000, 100.0, 1.0, 0.02), bound, 1e-6);
  EXPECT_LE(sq.grad_budget, bound + cost);
}

TEST(PlanOnlinePl, SmallNFallsBackWithOnlineLogConstant) {
  const Plan online = page::plan_online_pl(10.0, 64, 1.0, 0.1, 1.0, 0.01);
  const Plan finite = page::plan_finite_pl(64, 1.0, 0.1, 2.0, 0.01);
  EXPECT_EQ(online.b, 64u);
  EXPECT_EQ(online.T, finite.T);
  EXPECT_DOUBLE_EQ(online.eta, finite.eta);
}

TEST(Plans, StepsizePreconditionEverywhere) {
  for (std::uint64_t n : {1u, 7u, 100u, 4096u, 1000000u}) {
    for (double L : {0.5, 1.0, 8.0}) {
      for (double eps : {0.5, 0.05, 0.001}) {
        EXPECT_TRUE(page::satisfies_stepsize_bound(page::plan_finite(n, L, 1.0, eps), L, std::nullopt));
        EXPECT_TRUE(page::satisfies_stepsize_bound(page::plan_gd(n, L, 1.0, eps), L, std::nullopt));
        EXPECT_TRUE(page::satisfies_stepsize_bound(page::plan_online(2.0, n, L, 1.0, eps), L, std::nullopt));
        for (double kappa : {1.0, 30.0, 1e4}) {
          const double mu = L / kappa;
          EXPECT_TRUE(page::satisfies_stepsize_bound(page::plan_finite_pl(n, L, mu, 1.0, eps), L, mu));
          EXPECT_TRUE(
              page::satisfies_stepsize_bound(page::plan_online_pl(2.0, n, L, mu, 1.0, eps), L, mu));
        }
      }
    }
  }
}

TEST(Plans, JsonSchema) {
  const std::string s = page::plan_to_json(page::plan_finite_pl(100, 1.0, 0.1, 1.0, 0.01));
  const auto j = nlohmann::ordered_json::parse(s);
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"regime", "eta", "b", "b_prime", "p", "T", "grad_budget",
                                            "kappa"}));
  EXPECT_EQ(j["regime"], "finite_pl");
  EXPECT_DOUBLE_EQ(j["kappa"].get<double>(), 10.0);
  const auto g = nlohmann::json::parse(page::plan_to_json(page::plan_gd(10, 1.0, 1.0, 0.1)));
  EXPECT_TRUE(g["kappa"].is_null());
}

TEST(Plans, RegimeNames) {
  for (Regime r : {Regime::finite, Regime::online, Regime::finite_pl, Regime::online_pl, Regime::gd,
                   Regime::sgd})
    EXPECT_EQ(page::parse_regime(page::to_string(r)), r);
  EXPECT_THROW(page::parse_regime("svrg"), page::ConfigError);
}

TEST(PlanFor, UsesDeclaredConstants) {
  const auto h = page::make_hard_instance(64, 256, 2.0, 0.5);
  const Plan plan = page::plan_for(Regime::finite, *h, 0.1);
  const Plan direct = page::plan_finite(64, 2.0, *h->delta0(), 0.1);
  EXPECT_EQ(plan.T, direct.T);
  EXPECT_DOUBLE_EQ(plan.eta, direct.eta);
  const auto lr = page::make_nonconvex_logreg(page::make_synthetic_classification(20, 3, 1.0, 1), 0.1);
  EXPECT_THROW(page::plan_for(Regime::finite, *lr, 0.1), page::UnsupportedError);
  EXPECT_NO_THROW(page::plan_for(Regime::finite, *lr, 0.1, std::nullopt, 0.7));
  EXPECT_THROW(page::plan_for(Regime::finite_pl, *lr, 0.1, std::nullopt, 0.7), page::UnsupportedError);
}

TEST(PlanFor, StreamUsesSigmaRule) {
  const auto q = page::make_quadratic(1000000, 8, 0.1, 1.0, 3);
  const auto s = page::stream_view(q);
  const double sigma = *q->constants().sigma;
  const Plan plan = page::plan_for(Regime::online, *s, 0.05);
  EXPECT_EQ(plan.b, std::min<std::uint64_t>(page::ceil_count(2.0 * sigma * sigma / 0.0025), 1000000));
  EXPECT_THROW(page::plan_for(Regime::finite, *s, 0.05), page::ConfigError);
}

TEST(ToConfig, RegimeConventions) {
  const auto c = page::to_config(page::plan_finite_pl(100, 1.0, 0.1, 1.0, 0.01), 7, 0.01);
  EXPECT_EQ(c.output_mode, page::OutputMode::last_iterate);
  EXPECT_EQ(c.stop_metric, page::StopMetric::f_gap);
  EXPECT_EQ(c.seed, 7u);
  const auto f = page::to_config(page::plan_finite(100, 1.0, 1.0, 0.01), 7, 0.01);
  EXPECT_EQ(f.output_mode, page::OutputMode::uniform_iterate);
  EXPECT_NO_THROW(f.validate());
}

TEST(EstimateL, HardInstanceIsExact) {
  const auto h = page::make_hard_instance(8, 32, 1.7, 1.0);
  page::SmoothnessOptions opt;
  opt.num_pairs = 50;
  const auto est = page::estimate_L(*h, opt);
  EXPECT_NEAR(est.raw, 1.7, 1.7 * 1e-12);
  EXPECT_NEAR(est.value, 1.1 * 1.7, 1.7 * 1e-12);
}

TEST(EstimateL, QuadraticNearExactConstant) {
  const auto q = page::make_quadratic(64, 8, 0.1, 1.0, 1);
  page::SmoothnessOptions opt;
  opt.num_pairs = 200;
  const auto est = page::estimate_L(*q, opt);
  EXPECT_LE(rel(est.value / 1.1, q->exact_average_smoothness()), 0.05);
  EXPECT_LE(est.raw, q->exact_average_smoothness() * (1.0 + 1e-12));
}

TEST(EstimateL, SingleComponentIsLipschitzEstimate) {
  const auto p = page::make_pl_sine();
  page::SmoothnessOptions opt;
  opt.num_pairs = 500;
  opt.radius = 0.2;
  const auto est = page::estimate_L(*p, opt);
  // Near the origin f'' is close to its maximum 8.
  EXPECT_LE(est.raw, 8.0);
  EXPECT_GT(est.raw, 7.5);
}

TEST(EstimateSigma, SingleComponentIsZero) {
  const auto est = page::estimate_sigma(*page::make_pl_sine(), {});
  EXPECT_EQ(est.value, 0.0);
}

TEST(EstimateSigma, HardInstanceIndependentOfX) {
  const auto h = page::make_hard_instance(4, 16, 1.0, 1.0);
  page::SmoothnessOptions opt;
  opt.num_pairs = 30;
  opt.radius = 5.0;
  const auto est = page::estimate_sigma(*h, opt);
  const double c = h->c();
  // c^2 E_i |v_i - vbar|^2 = c^2 (d/n)(1 - 1/n)
  EXPECT_NEAR(est.raw * est.raw, c * c * 4.0 * 0.75, 1e-12);
  EXPECT_NEAR(est.raw, *h->constants().sigma, 1e-12);
}

TEST(EstimateSigma, QuadraticStableAcrossSampleSets) {
  const auto q = page::make_quadratic(256, 8, 0.1, 1.0, 2);
  page::SmoothnessOptions a;
  a.num_pairs = 1000;
  a.seed = 1;
  page::SmoothnessOptions b = a;
  b.seed = 2;
  const double sa = page::estimate_sigma(*q, a).value;
  const double sb = page::estimate_sigma(*q, b).value;
  EXPECT_LE(rel(sa, sb), 0.05);
}

TEST(EstimateMu, PlSineGrid) {
  page::GridSpec spec;
  spec.radius = 10.0;
  spec.points_per_line = 100000;
  const auto est = page::estimate_mu_pl(*page::make_pl_sine(), spec);
  EXPECT_GE(est.value, 1.0 / 32.0);
  EXPECT_LE(est.value, 0.5);
  EXPECT_EQ(est.samples, 100000u);  // 0 is not a grid point
}

TEST(EstimateMu, StronglyConvexQuadratic) {
  const auto q = page::make_quadratic(64, 6, 0.05, 1.0, 4);
  page::GridSpec spec;
  spec.radius = 5.0;
  spec.points_per_line = 4001;
  const auto est = page::estimate_mu_pl(*q, spec);
  EXPECT_LE(rel(est.value, 0.05), 0.01);
}

TEST(EstimateMu, EmptyAdmissibleSet) {
  page::GridSpec spec;
  spec.radius = 1e-7;
  spec.points_per_line = 11;
  EXPECT_THROW(page::estimate_mu_pl(*page::make_pl_sine(), spec), page::EstimationError);
  const auto lr = page::make_nonconvex_logreg(page::make_synthetic_classification(20, 3, 1.0, 1), 0.1);
  EXPECT_THROW(page::estimate_mu_pl(*lr, spec), page::UnsupportedError);
}
