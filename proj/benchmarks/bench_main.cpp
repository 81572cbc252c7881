#include <benchmark/benchmark.h>

#include <random>

#include "qpert/groundstate.hpp"
#include "qpert/oracle.hpp"
#include "qpert/renorm.hpp"

using namespace qpert;

namespace {

Model tfi(double lambda) {
  auto [s, p] = preset_tfi(lambda);
  return Model(std::move(s), std::move(p));
}

struct Chain {
  Model model;
  Volume vol;
  Hamiltonian ham;
  std::shared_ptr<const ClusterSpace> space;
  Chain(int n, Boundary b = Boundary::open)
      : model(tfi(0.1)),
        vol(Volume::chain(n, b)),
        ham(assemble_hamiltonian(vol, model)),
        space(ClusterSpace::create(vol, model, {4, 6})) {}
};

void BM_exp_apply(benchmark::State& state) {
  Chain c(static_cast<int>(state.range(0)));
  const auto gs = solve_ground_state(c.space, c.ham.full);
  for (auto _ : state) benchmark::DoNotOptimize(exp_apply(gs.frame.gs, *c.space));
  state.counters["clusters"] = static_cast<double>(gs.frame.gs.size());
}
BENCHMARK(BM_exp_apply)->Arg(8)->Arg(12)->Arg(16)->Unit(benchmark::kMicrosecond);

void BM_ground_state(benchmark::State& state) {
  Chain c(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_ground_state(c.space, c.ham.full).frame.energy);
}
BENCHMARK(BM_ground_state)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_renorm_apply(benchmark::State& state) {
  Chain c(static_cast<int>(state.range(0)));
  const auto gs = solve_ground_state(c.space, c.ham.full);
  const RenormOperator op(gs.frame, c.ham, c.model.lambda(), 2.5);
  Collection u;
  u.add(c.space->w_at(c.vol.size() / 2));
  for (auto _ : state) benchmark::DoNotOptimize(op.apply(u));
}
BENCHMARK(BM_renorm_apply)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_lanczos(benchmark::State& state) {
  Chain c(static_cast<int>(state.range(0)), Boundary::periodic);
  for (auto _ : state) benchmark::DoNotOptimize(extremal_eigs(c.ham.full, 2).values(0));
}
BENCHMARK(BM_lanczos)->Arg(12)->Arg(14)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
