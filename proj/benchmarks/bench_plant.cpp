#include <benchmark/benchmark.h>

#include "honeypot/sim/plant.hpp"

using namespace honeypot;
using namespace honeypot::sim;

namespace {

void BM_PlantStep(benchmark::State& state) {
    const PlantParams params;
    PlantState x;
    x.pitch = 0.1;
    x.s0 = 1000;
    const Vector2 u(5.0, -3.0);
    for (auto _ : state) {
        x = plant_step(x, u, 0.002, params);
        benchmark::DoNotOptimize(x);
    }
}
BENCHMARK(BM_PlantStep);

void BM_SimulateDesk(benchmark::State& state) {
    const PlantParams params;
    const auto schedule = SequenceSchedule::default_cycle();
    for (auto _ : state) benchmark::DoNotOptimize(run_cycle(params, schedule, 120.0, 50.0, 42));
}
BENCHMARK(BM_SimulateDesk)->Unit(benchmark::kMillisecond);

}  // namespace
