// Split-search kernels: serial scan, OpenMP scan over features, and the
// brute-force reference. Also forest fitting with and without tree-level
// parallelism.

#include <benchmark/benchmark.h>

#include <numeric>

#include "nacart/ensemble.hpp"
#include "nacart/split.hpp"
#include "nacart/synth.hpp"

using namespace nacart;

namespace {

struct Problem {
  IncompleteMatrix x;
  std::vector<double> y;
  std::vector<std::uint32_t> rows;
};

Problem make_problem(std::size_t n) {
  ModelSpec spec;
  spec.model = ModelId::Friedman;
  spec.d = 9;
  auto ds = gen_model(spec, n, 7);
  AmputationSpec pat;
  pat.target_columns = {0, 1, 2};
  pat.p = 0.2;
  Problem p{ampute(ds.features, pat, 11), ds.y, {}};
  p.rows.resize(n);
  std::iota(p.rows.begin(), p.rows.end(), 0u);
  return p;
}

void BM_MiaSerial(benchmark::State& state) {
  const auto p = make_problem(static_cast<std::size_t>(state.range(0)));
  SplitParams sp;
  for (auto _ : state) benchmark::DoNotOptimize(best_split_mia(p.x, p.y, p.rows, sp));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_MiaParallel(benchmark::State& state) {
  const auto p = make_problem(static_cast<std::size_t>(state.range(0)));
  SplitParams sp;
  sp.parallel = true;
  for (auto _ : state) benchmark::DoNotOptimize(best_split_mia(p.x, p.y, p.rows, sp));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_MiaReference(benchmark::State& state) {
  const auto p = make_problem(static_cast<std::size_t>(state.range(0)));
  SplitParams sp;
  for (auto _ : state) benchmark::DoNotOptimize(reference::best_split_mia(p.x, p.y, p.rows, sp));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ObservedSerial(benchmark::State& state) {
  const auto p = make_problem(static_cast<std::size_t>(state.range(0)));
  SplitParams sp;
  for (auto _ : state) benchmark::DoNotOptimize(best_split_observed(p.x, p.y, p.rows, sp));
}

void BM_ObservedParallel(benchmark::State& state) {
  const auto p = make_problem(static_cast<std::size_t>(state.range(0)));
  SplitParams sp;
  sp.parallel = true;
  for (auto _ : state) benchmark::DoNotOptimize(best_split_observed(p.x, p.y, p.rows, sp));
}

void BM_Forest(benchmark::State& state) {
  const auto p = make_problem(static_cast<std::size_t>(state.range(0)));
  ForestParams fp;
  fp.trees = 20;
  fp.parallel = state.range(1) != 0;
  TreeHyper h;
  h.parallel = false;
  for (auto _ : state) benchmark::DoNotOptimize(fit_forest(p.x, p.y, Strategy::MIA, h, fp, 3));
}

}  // namespace

BENCHMARK(BM_MiaSerial)->Arg(1000)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MiaParallel)->Arg(1000)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MiaReference)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ObservedSerial)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ObservedParallel)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Forest)->Args({5000, 0})->Args({5000, 1})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
