#include <benchmark/benchmark.h>

#include <random>

#include "llb/cg.hpp"
#include "llb/certify.hpp"
#include "llb/state.hpp"
#include "support/problems.hpp"

using namespace llb;
using namespace llb::testing;

namespace {

Grid grid_for(int dim, int cells) {
  return dim == 1 ? Grid::line(cells) : (dim == 2 ? Grid::square(cells) : Grid::cube(cells));
}

void BM_Laplacian(benchmark::State& state) {
  const Grid g = grid_for(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  std::mt19937_64 rng(1);
  const VectorField f = random_field(g, rng);
  VectorField out(g);
  for (auto _ : state) {
    laplacian_into(f, out);
    benchmark::DoNotOptimize(out.values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.node_count()));
}
BENCHMARK(BM_Laplacian)->Args({1, 1024})->Args({2, 64})->Args({3, 16})->Args({3, 32});

void BM_ImplicitSolve(benchmark::State& state) {
  const Grid g = grid_for(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  std::mt19937_64 rng(2);
  const VectorField b = random_field(g, rng);
  for (auto _ : state) {
    VectorField x = b;
    const CgResult r = solve_implicit_diffusion(1e-3, b, x);
    benchmark::DoNotOptimize(r.iterations);
  }
}
BENCHMARK(BM_ImplicitSolve)->Args({1, 1024})->Args({2, 64})->Args({3, 16})->Args({3, 32});

void BM_Step(benchmark::State& state) {
  const Grid g = grid_for(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const VectorField m = smooth_initial(g);
  const VectorField u = synthesize(std::vector<double>{0.5, -0.3}, two_coils(g));
  for (auto _ : state) {
    VectorField next = step(m, u, 1e-3);
    benchmark::DoNotOptimize(next.values().data());
  }
}
BENCHMARK(BM_Step)->Args({1, 64})->Args({2, 32})->Args({3, 16});

void BM_ReducedGradient(benchmark::State& state) {
  const Grid g = grid_for(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const ControlProblem p = tracking_problem(g, 0.1, 1e-3);
  const ControlPath U = smooth_control(p);
  const auto mode = state.range(2) == 0 ? GradientMode::consistent : GradientMode::continuous;
  for (auto _ : state) {
    const GradientResult G = reduced_gradient(p, U, mode);
    benchmark::DoNotOptimize(G.gradient.data());
  }
}
BENCHMARK(BM_ReducedGradient)
    ->Args({1, 64, 0})
    ->Args({1, 64, 1})
    ->Args({2, 32, 0})
    ->Unit(benchmark::kMillisecond);

void BM_Curvature(benchmark::State& state) {
  const ControlProblem p = tracking_problem(Grid::line(64), 0.1, 1e-3);
  const ControlPath U = smooth_control(p);
  std::mt19937_64 rng(3);
  const auto h = random_vector(U.values().size(), rng);
  for (auto _ : state) benchmark::DoNotOptimize(curvature_adjoint(p, U, h));
}
BENCHMARK(BM_Curvature)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
