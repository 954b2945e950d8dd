#include <benchmark/benchmark.h>

#include <cmath>
#include <limits>

#include "page/dataset.hpp"
#include "page/estimator.hpp"
#include "page/problems.hpp"
#include "page/rng.hpp"
#include "page/theory.hpp"

namespace {

void BM_RngNextIndex(benchmark::State& state) {
  page::CounterRng rng(1, page::Stream::kBatch);
  std::uint64_t acc = 0;
  for (auto _ : state) acc += rng.next_index(4096);
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_RngNextIndex);

void BM_RngNormal(benchmark::State& state) {
  page::CounterRng rng(1, page::Stream::kMonteCarlo);
  double acc = 0.0;
  for (auto _ : state) acc += rng.next_normal();
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_RngNormal);

// Single component gradient, by problem family and dimension.
template <class Make>
void component_grad(benchmark::State& state, Make make) {
  const page::ProblemPtr p = make(static_cast<std::size_t>(state.range(0)));
  page::Vector x = p->x0(), g(p->dim());
  for (double& v : x) v += 0.1;
  std::uint64_t i = 0;
  for (auto _ : state) {
    p->component_grad(i++ % p->size(), x, g);
    benchmark::DoNotOptimize(g.data());
  }
}

void BM_GradQuadratic(benchmark::State& state) {
  component_grad(state, [](std::size_t d) { return page::make_quadratic(256, d, 0.1, 1.0, 1); });
}
BENCHMARK(BM_GradQuadratic)->Arg(16)->Arg(64)->Arg(256);

void BM_GradHardInstance(benchmark::State& state) {
  component_grad(state, [](std::size_t d) { return page::make_hard_instance(16, d, 1.0, 1.0); });
}
BENCHMARK(BM_GradHardInstance)->Arg(64)->Arg(1024);

void BM_GradLogReg(benchmark::State& state) {
  component_grad(state, [](std::size_t d) {
    return page::make_nonconvex_logreg(page::make_synthetic_classification(1000, d, 0.2, 1), 0.1);
  });
}
BENCHMARK(BM_GradLogReg)->Arg(50)->Arg(500);

// One PAGE step with the finite-sum plan; range(0) = n.
void BM_PageStep(benchmark::State& state) {
  const auto n = static_cast<std::uint64_t>(state.range(0));
  const auto p = page::make_quadratic(n, 32, 0.1, 1.0, 1);
  const page::Plan plan = page::plan_finite(n, 1.0, *p->delta0(), 0.01);
  page::PageConfig c = page::to_config(plan, 1, 0.01);
  c.record_diagnostics = false;
  c.max_iters = std::numeric_limits<std::uint64_t>::max();
  page::PageState s = page::init_state(*p, c);
  for (auto _ : state) benchmark::DoNotOptimize(page::step(s, *p, c));
  state.counters["grad_evals_per_step"] =
      static_cast<double>(s.grad_evals) / static_cast<double>(state.iterations() + 1);
}
BENCHMARK(BM_PageStep)->Arg(1024)->Arg(16384);

}  // namespace

BENCHMARK_MAIN();
