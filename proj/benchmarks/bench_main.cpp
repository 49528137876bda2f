#include <benchmark/benchmark.h>

#include "dcra/experiment.hpp"

using namespace dcra;

namespace {

SystemParams point(std::size_t d, std::size_t n1, std::size_t n2) {
  SystemParams p;
  p.hard_delay = d;
  p.n1 = n1;
  p.n2 = n2;
  return p;
}

// Slots per second of the simulator with learning devices.
void BM_SlotLoop(benchmark::State& state, const char* controller, std::size_t n1, std::size_t n2) {
  const auto p = point(static_cast<std::size_t>(state.range(0)), n1, n2);
  const std::uint64_t slots = 100'000;
  for (auto _ : state) {
    auto agents = make_agents(ControllerSpec::parse(controller), p);
    RunOptions opt;
    opt.slots = slots;
    opt.window = 10'000;
    auto res = run(make_scenario(p, 1), agents.agents, opt);
    benchmark::DoNotOptimize(res.metrics.deliveries());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * slots));
}

void BM_UpperBound(benchmark::State& state) {
  auto params = point(static_cast<std::size_t>(state.range(0)), 1, 1).two_device_params();
  const auto model = build_mdp(params);
  for (auto _ : state) {
    auto b = upper_bound(model);
    benchmark::DoNotOptimize(b.value);
  }
}

void BM_BuildMdp(benchmark::State& state) {
  auto params = point(static_cast<std::size_t>(state.range(0)), 1, 1).two_device_params();
  for (auto _ : state) {
    auto m = build_mdp(params);
    benchmark::DoNotOptimize(m.state_count());
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_SlotLoop, tsra_two_device, "tsra", 1, 1)->Arg(2)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_SlotLoop, fsra_two_device, "fsra", 1, 1)->Arg(2)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_SlotLoop, tsra_ten_devices, "tsra-multi", 0, 10)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BuildMdp)->DenseRange(1, 4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_UpperBound)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
