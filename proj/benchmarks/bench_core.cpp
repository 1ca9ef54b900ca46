#include <benchmark/benchmark.h>

#include <vector>

#include "spdelab/regularity.hpp"
#include "spdelab/solver.hpp"

using namespace spdelab;

namespace {

BasisPtr basis_for(int dimension, int modes) {
  const double gamma = dimension == 1 ? 0.0 : 0.5;
  return SpectralBasis::create({dimension, Boundary::Dirichlet, gamma, modes, 4 * modes});
}

void BM_NoiseDraw(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> z0(n), z1(n);
  NoiseStream stream{1, 0, 0};
  for (auto _ : state) {
    stream_normals(stream, z0, z1);
    ++stream.step;
    benchmark::DoNotOptimize(z0.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 2 * n));
}
BENCHMARK(BM_NoiseDraw)->RangeMultiplier(4)->Range(16, 4096);

void BM_Synthesize(benchmark::State& state) {
  auto b = basis_for(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const auto& t = b->transform();
  auto values = t.make_buffer();
  auto scratch = t.make_buffer();
  const auto x = unit_mode(b, 0);
  for (auto _ : state) {
    t.synthesize(x.coefficients(), values, scratch);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_Synthesize)->Args({1, 64})->Args({1, 256})->Args({2, 32});

void BM_Reaction(benchmark::State& state) {
  auto b = basis_for(1, static_cast<int>(state.range(0)));
  const NemytskiiOperator op(ReactionSpec::polynomial({0.0, 1.0, 0.0, -1.0}), b);
  auto ws = op.make_workspace();
  SpectralField x = SpectralField::mode(b, 0, 0.7);
  std::vector<double> out(b->size());
  for (auto _ : state) {
    op.apply(x.coefficients(), out, ws);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_Reaction)->Arg(16)->Arg(64)->Arg(256);

void BM_Step(benchmark::State& state) {
  auto b = basis_for(1, static_cast<int>(state.range(0)));
  SolverConfig config;
  config.dt = 1e-3;
  config.directions = static_cast<std::size_t>(state.range(1));
  MildSolver solver(b, ReactionSpec::polynomial({0.0, 1.0, 0.0, -1.0}), config);
  std::vector<SpectralField> dirs(config.directions, unit_mode(b, 0));
  auto s = TrajectoryState::start(SpectralField(b), dirs);
  NoiseStream stream{1, 0, 0};
  for (auto _ : state) {
    solver.step_in_place(s, config.dt, stream);
    benchmark::DoNotOptimize(s.x.coefficients().data());
  }
}
BENCHMARK(BM_Step)->Args({16, 0})->Args({64, 0})->Args({64, 1})->Args({256, 0});

// One resolvent-gradient stencil of the regularity meter at a small budget.
void BM_Stencil(benchmark::State& state) {
  Problem p;
  p.basis = basis_for(1, 32);
  p.reaction = ReactionSpec::polynomial({0.0, 1.0, 0.0, -1.0});
  p.solver.dt = 1e-2;
  ResolventBudget budget;
  budget.mc.paths = static_cast<std::size_t>(state.range(0));
  budget.tolerance = 1e-1;
  const auto f = TestFunction::rough(mode_ladder(*p.basis));
  const auto h = unit_mode(p.basis, 0);
  StencilRequest req{{SpectralField(p.basis), 0.125 * h}, h, StencilQuantity::Gradient};
  for (auto _ : state) {
    auto r = resolvent_stencil(p, f, req, 1.0, budget);
    benchmark::DoNotOptimize(r.fingerprint);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * state.range(0)));
}
BENCHMARK(BM_Stencil)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
