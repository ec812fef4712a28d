#include <benchmark/benchmark.h>

#include "strigs/strigs.hpp"

namespace {

using namespace strigs;

SystemSpec quadratic_system(int dim, bool noisy) {
  const auto eps = EpsilonSchedule::power(1.0, 1.0);
  return SystemSpec{make_shifted_quadratic(Vec::Constant(dim, 0.5)), StrigsParams{eps, 2.0},
                    noisy ? exp_diffusion(1.0, 0.5, dim) : DiffusionSchedule::zero(dim)};
}

SimState start(int dim) {
  SimState s;
  s.t = 1.0;
  s.x = Vec::Ones(dim);
  s.y = Vec::Zero(dim);
  return s;
}

void BM_Integrate(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const bool noisy = state.range(1) != 0;
  const auto spec = quadratic_system(dim, noisy);
  const auto init = start(dim);
  for (auto _ : state) {
    auto traj = integrate(spec, init, 101.0, 0.01, 7, {});
    benchmark::DoNotOptimize(traj.states.back().x.data());
  }
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_Integrate)->Args({4, 0})->Args({4, 1})->Args({64, 1});

void BM_SolveXEpsNumeric(benchmark::State& state) {
  Mat A(3, 3);
  A << 2, 1, 1, 1, 1, 0, 3, 2, 1;
  const auto p = make_least_squares(A, (Vec(3) << 1, -1, 2).finished());
  PathSolverOptions opts;
  opts.use_closed_form = false;
  const double eps = std::pow(10.0, -static_cast<double>(state.range(0)));
  for (auto _ : state) {
    auto pp = solve_x_eps(p, eps, std::nullopt, opts);
    benchmark::DoNotOptimize(pp.x_eps.data());
  }
}
BENCHMARK(BM_SolveXEpsNumeric)->DenseRange(0, 6, 2);

void BM_Ensemble(benchmark::State& state) {
  EnsembleSetup s{quadratic_system(4, true)};
  DampingParams d;
  d.t1 = 9.0;
  s.damping = d;
  s.init = start(4);
  s.T = 100.0;
  s.n_paths = static_cast<int>(state.range(0));
  s.checkpoints = log_checkpoints(1.0, 100.0, 16);
  s.martingale = true;
  for (auto _ : state) {
    auto res = run_ensemble(s);
    benchmark::DoNotOptimize(res.paths.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 9900);
}
BENCHMARK(BM_Ensemble)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_BoundCurve(benchmark::State& state) {
  const auto eps = EpsilonSchedule::power(1.0, 1.0);
  DampingParams d;
  d.t1 = 9.0;
  const EnergyModel m{make_shifted_quadratic(Vec::Constant(4, 0.5)), eps, d,
                      exp_diffusion(1.0, 0.5, 4)};
  const auto grid = log_checkpoints(9.0, 1e4, 64);
  for (auto _ : state) {
    auto c = expectation_bound_curve(m, grid, 1.0);
    benchmark::DoNotOptimize(c.strong.data());
  }
}
BENCHMARK(BM_BoundCurve)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
