#include <benchmark/benchmark.h>

#include <random>

#include "sigppde/goursat.hpp"
#include "sigppde/oracle_suite.hpp"
#include "sigppde/recovery.hpp"

using namespace sigppde;

namespace {

struct Pair {
  AField fields;
};

Pair make_pair(int n_steps) {
  std::mt19937_64 rng(11);
  const TimeGrid g(0, 1, n_steps);
  auto draw = [&] {
    std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(static_cast<double>(n_steps)));
    Eigen::MatrixXd v(n_steps + 1, 2);
    v.row(0).setZero();
    for (int k = 1; k <= n_steps; ++k)
      for (int c = 0; c < 2; ++c) v(k, c) = v(k - 1, c) + n(rng);
    return Path(g, v);
  };
  const Path a = draw(), b = draw(), e = draw();
  return {a_fields(a, b, e, e, Lift::identity())};
}

void run_solve(benchmark::State& state, Traversal traversal) {
  const auto p = make_pair(static_cast<int>(state.range(0)));
  GoursatOptions opt;
  opt.dyadic_order = static_cast<int>(state.range(1));
  opt.traversal = traversal;
  opt.parallel_threshold = 0;
  for (auto _ : state) benchmark::DoNotOptimize(solve(p.fields, opt).corner);
}

void BM_GoursatSerial(benchmark::State& state) { run_solve(state, Traversal::Serial); }
void BM_GoursatWavefront(benchmark::State& state) { run_solve(state, Traversal::Wavefront); }

void BM_KernelOnly(benchmark::State& state) {
  const auto p = make_pair(static_cast<int>(state.range(0)));
  GoursatOptions opt;
  opt.dyadic_order = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(kernel_only(p.fields.a, opt));
}

void BM_GramAssembly(benchmark::State& state) {
  const TimeGrid grid(0, 1, 32);
  PpdeSpec spec;
  spec.fbm = FbmSpec::normalized(0.1, 1.0);
  spec.delta = 2 * grid.step();
  spec.terminal = [](const CollocationPoint& p) { return p.gamma(32, 0); };
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> node(1, 31);
  auto draw = [&](double t) {
    return spec.make_point(t, {}, simulate_theta(t, spec.fbm, grid, brownian_increments(grid, rng),
                                                 {KernelWeights::VarianceMatched, PreTimeFill::Zero}));
  };
  const int m = static_cast<int>(state.range(0));
  std::vector<CollocationPoint> in, bd;
  for (int i = 0; i < m; ++i) in.push_back(draw(grid.node(node(rng))));
  for (int i = 0; i < m / 3; ++i) bd.push_back(draw(1.0));
  KernelConfig kc;
  kc.lift = Lift::rbf(16.0);
  kc.params.sigma_g = 16.0;
  kc.dyadic_order = 1;
  for (auto _ : state) benchmark::DoNotOptimize(assemble(spec, in, bd, kc).G.data());
}

}  // namespace

BENCHMARK(BM_GoursatSerial)->Args({64, 2})->Args({128, 2})->Args({64, 3})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GoursatWavefront)->Args({64, 2})->Args({128, 2})->Args({64, 3})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KernelOnly)->Args({64, 2})->Args({64, 3})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramAssembly)->Arg(12)->Arg(24)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
