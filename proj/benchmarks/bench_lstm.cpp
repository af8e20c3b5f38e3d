#include <benchmark/benchmark.h>

#include "honeypot/generator.hpp"
#include "honeypot/lstm/model.hpp"

using namespace honeypot;

namespace {

Matrix constant_lookback(std::size_t rows) { return Matrix(rows, ts::kReplicated, 0.5); }

gen::CompositeGenerator composite(std::size_t hidden, std::size_t lookback, std::size_t lookahead, bool parallel) {
    std::vector<lstm::EncoderDecoderModel> models;
    for (std::size_t k = 0; k < ts::kReplicated; ++k) {
        models.push_back(lstm::init_model({ts::kReplicated, hidden, lookback, lookahead, k}, 11 + k));
    }
    ts::ScalerParams scaler;
    for (auto& r : scaler.ranges) r = {-1.0, 1.0};
    return gen::CompositeGenerator(std::move(models), scaler, {false, parallel});
}

// args: hidden, lookback, lookahead
void BM_PackedForward(benchmark::State& state) {
    const auto h = static_cast<std::size_t>(state.range(0));
    const auto l = static_cast<std::size_t>(state.range(1));
    const auto la = static_cast<std::size_t>(state.range(2));
    const lstm::PackedModel model(lstm::init_model({ts::kReplicated, h, l, la, 3}, 1));
    const auto lookback = constant_lookback(l);
    std::vector<double> out(la);
    for (auto _ : state) {
        model.forward(lookback, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(l + la));
}
BENCHMARK(BM_PackedForward)->Args({32, 200, 20})->Args({64, 2000, 200})->Unit(benchmark::kMillisecond);

void BM_ReferenceForward(benchmark::State& state) {
    const auto model = lstm::init_model({ts::kReplicated, 32, 200, 20, 3}, 1);
    const auto lookback = constant_lookback(200);
    for (auto _ : state) benchmark::DoNotOptimize(lstm::forward(model, lookback));
}
BENCHMARK(BM_ReferenceForward)->Unit(benchmark::kMillisecond);

void BM_Backward(benchmark::State& state) {
    const auto model = lstm::init_model({ts::kReplicated, 32, 200, 20, 3}, 1);
    const auto lookback = constant_lookback(200);
    const std::vector<double> target(20, 0.25);
    for (auto _ : state) benchmark::DoNotOptimize(lstm::backward(model, lookback, target));
}
BENCHMARK(BM_Backward)->Unit(benchmark::kMillisecond);

// one producer step: eight models plus denormalization; arg 1 runs the models in parallel
void BM_ProducerStepDesk(benchmark::State& state) {
    const auto g = composite(32, 200, 20, state.range(0) != 0);
    const auto lookback = constant_lookback(200);
    for (auto _ : state) benchmark::DoNotOptimize(g.generate_segment(lookback));
}
BENCHMARK(BM_ProducerStepDesk)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ProducerStepFull(benchmark::State& state) {
    const auto g = composite(64, 2000, 200, true);
    const auto lookback = constant_lookback(2000);
    for (auto _ : state) benchmark::DoNotOptimize(g.generate_segment(lookback));
}
BENCHMARK(BM_ProducerStepFull)->Unit(benchmark::kMillisecond)->Iterations(5);

}  // namespace
