#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "honeypot/lstm/cell.hpp"
#include "honeypot/matrix.hpp"

namespace honeypot::lstm {

struct ModelConfig {
    std::size_t input_size = 8;  // variables seen by the encoder
    std::size_t hidden_size = 64;
    std::size_t lookback = 2000;
    std::size_t lookahead = 200;
    std::size_t target = 0;  // column of the look-back this model forecasts

    bool operator==(const ModelConfig&) const = default;
};

/// Single-output encoder-decoder LSTM. The encoder reads the look-back; its
/// final state seeds a decoder whose input at every step is its own previous
/// scalar output (the first input is the last observed target value).
struct EncoderDecoderModel {
    ModelConfig config;
    LstmCellWeights encoder;  // d = input_size
    LstmCellWeights decoder;  // d = 1
    std::vector<double> proj_w;
    double proj_b = 0.0;

    EncoderDecoderModel() = default;
    explicit EncoderDecoderModel(const ModelConfig& cfg)
        : config(cfg), encoder(cfg.input_size, cfg.hidden_size), decoder(1, cfg.hidden_size),
          proj_w(cfg.hidden_size) {}

    std::size_t parameter_count() const;
    bool operator==(const EncoderDecoderModel&) const = default;
};

/// Weights uniform in [-1/sqrt(h), 1/sqrt(h)], forget-gate biases 1.0.
EncoderDecoderModel init_model(const ModelConfig& config, std::uint64_t seed);

/// Mutable views over every parameter block, in serialization order:
/// encoder W, R, b; decoder W, R, b; projection weights; projection bias.
std::vector<std::span<double>> parameter_blocks(EncoderDecoderModel& model);
std::vector<std::span<const double>> parameter_blocks(const EncoderDecoderModel& model);

/// Same shapes as `model`, all zeros. Used as the gradient container.
EncoderDecoderModel zeros_like(const EncoderDecoderModel& model);

void check_shapes(const EncoderDecoderModel& model);

/// Inference-only copy of a model with weights laid out for fast
/// single-sequence evaluation. Immutable and safe to share across threads.
class PackedModel {
public:
    explicit PackedModel(const EncoderDecoderModel& model);

    const ModelConfig& config() const noexcept { return config_; }

    /// lookback: L x input_size, normalized. Returns H outputs.
    std::vector<double> forward(const Matrix& lookback) const;
    void forward(const Matrix& lookback, std::span<double> out) const;

private:
    ModelConfig config_;
    // Transposed stacked weights: rows are [x; h] inputs, columns the 4h gates.
    std::vector<double> enc_wt_, enc_b_;
    std::vector<double> dec_wt_, dec_b_;
    std::vector<double> proj_w_;
    double proj_b_ = 0.0;
};

std::vector<double> forward(const EncoderDecoderModel& model, const Matrix& lookback);

/// Mean squared error between two equal-length sequences.
double mse(std::span<const double> output, std::span<const double> target);

/// Loss and gradients of the mean over a batch of per-window MSE losses.
struct BatchResult {
    double loss = 0.0;
    EncoderDecoderModel grads;
};

/// Scratch buffers for loss_and_gradients; reuse one per training thread to
/// avoid reallocating the activation history every batch.
struct BpttWorkspace {
    std::vector<double> enc_w, dec_w;  // stacked [W | R] weights, 4h x (d + h)
    std::vector<double> enc_z, enc_act, enc_c, enc_tc;
    std::vector<double> dec_z, dec_act, dec_c, dec_tc, dec_h, y;
    std::vector<double> dh, dc, da, da_t, z_t, dz, dy, dx_next;
    std::vector<double> enc_dw_t, dec_dw_t;  // transposed weight gradients, (d + h) x 4h
};

/// Forward + backpropagation through time over a batch of windows. The
/// gradients include the decoder's output-feedback path.
BatchResult loss_and_gradients(const EncoderDecoderModel& model, std::span<const Matrix* const> lookbacks,
                               std::span<const std::span<const double>> targets, BpttWorkspace* workspace = nullptr);

/// Gradients of MSE(forward(model, lookback), target) for one window.
EncoderDecoderModel backward(const EncoderDecoderModel& model, const Matrix& lookback,
                             std::span<const double> target);

}  // namespace honeypot::lstm
