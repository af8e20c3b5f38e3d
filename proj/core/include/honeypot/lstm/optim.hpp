#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "honeypot/lstm/model.hpp"
#include "honeypot/timeseries.hpp"

namespace honeypot::lstm {

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t step = 0;
    std::vector<double> m;
    std::vector<double> v;
};

/// One Adam update over a flat parameter vector. Moments are sized lazily on
/// the first call.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

/// One Adam update over every parameter block of `model`.
void adam_step(EncoderDecoderModel& model, const EncoderDecoderModel& grads, AdamState& state);

class EmptyTrainingSet : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct TrainConfig {
    std::size_t epochs = 1000;
    double lr = 1e-3;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
};

struct TrainReport {
    std::vector<double> train_mse;       // one entry per epoch
    std::vector<double> validation_mse;  // one entry per epoch when validation windows are given
    std::size_t epochs = 0;
};

using EpochCallback = std::function<void(std::size_t epoch, double train_mse, double validation_mse)>;

/// Mini-batch Adam on the model's target column. Windows are reshuffled every
/// epoch; gradients are averaged over each batch. Deterministic for a given seed.
TrainReport train(EncoderDecoderModel& model, std::span<const ts::WindowPair> windows, const TrainConfig& config,
                  std::span<const ts::WindowPair> validation = {}, const EpochCallback& on_epoch = {});

/// Mean per-window MSE of the model on its target column.
double evaluate_mse(const EncoderDecoderModel& model, std::span<const ts::WindowPair> windows);

}  // namespace honeypot::lstm
