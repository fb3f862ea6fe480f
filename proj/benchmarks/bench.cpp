#include <random>

#include <benchmark/benchmark.h>

#include "qdi/descent.hpp"
#include "qdi/geometry.hpp"
#include "qdi/problem_io.hpp"
#include "qdi/quasidiff.hpp"

namespace {

void BM_NearestPoint(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const int m = static_cast<int>(state.range(1));
  std::mt19937 rng(1);
  std::normal_distribution<double> g;
  Eigen::MatrixXd P(d, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < d; ++i) P(i, j) = g(rng);
  Eigen::VectorXd t(d);
  for (int i = 0; i < d; ++i) t[i] = 3 * g(rng);
  for (auto _ : state) benchmark::DoNotOptimize(qdi::nearest_point(t, P));
}
BENCHMARK(BM_NearestPoint)->Args({4, 8})->Args({13, 16})->Args({13, 256});

void BM_EvalState(benchmark::State& state) {
  const qdi::ProblemSpec spec = qdi::builtin_example(state.range(0) ? "example72" : "example73");
  for (auto _ : state) benchmark::DoNotOptimize(qdi::EvalState::initial(spec));
}
BENCHMARK(BM_EvalState)->Arg(0)->Arg(1);

void BM_AssembleAll(benchmark::State& state) {
  const qdi::ProblemSpec spec = qdi::builtin_example("example71");
  const qdi::EvalState s = qdi::EvalState::initial(spec);
  for (auto _ : state)
    for (int k = 0; k < s.grid().size(); ++k) benchmark::DoNotOptimize(qdi::assemble_pointwise(s, k));
}
BENCHMARK(BM_AssembleAll);

void BM_DirectionField(benchmark::State& state) {
  const qdi::ProblemSpec spec = qdi::builtin_example("example73");
  const qdi::EvalState s = qdi::EvalState::initial(spec);
  for (auto _ : state) benchmark::DoNotOptimize(qdi::direction_field(s));
}
BENCHMARK(BM_DirectionField);

void BM_SolveExample71(benchmark::State& state) {
  qdi::ProblemSpec spec = qdi::builtin_example("example71");
  spec.solver.n_grid = static_cast<int>(state.range(0));
  qdi::SolveOptions opts;
  opts.on_warning = [](const std::string&) {};
  for (auto _ : state) benchmark::DoNotOptimize(qdi::solve(spec, opts));
}
BENCHMARK(BM_SolveExample71)->Arg(11)->Arg(21)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
