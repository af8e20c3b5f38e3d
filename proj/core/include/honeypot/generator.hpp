#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "honeypot/lstm/model.hpp"
#include "honeypot/lstm/optim.hpp"
#include "honeypot/matrix.hpp"
#include "honeypot/timeseries.hpp"

namespace honeypot::gen {

class GeneratorError : public std::runtime_error {
public:
    enum class Kind { ShapeMismatch, ModelOrderMismatch, BadManifest, SeedTooShort };
    GeneratorError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// One generated look-ahead block: H rows of the eight variables in physical units.
struct Segment {
    Matrix values;  // H x 8, denormalized
    std::uint64_t sequence = 0;
};

struct GeneratorOptions {
    /// Recurse one sample at a time instead of emitting whole look-ahead blocks.
    bool single_step = false;
    /// Run the eight per-variable models on separate threads.
    bool parallel = true;
};

/// Eight single-output models stacked column-wise into one multivariate
/// generator. models[k] must forecast variable k (U0, U1, Yaw, Pitch,
/// TargetYaw, TargetPitch, YawDot, PitchDot).
class CompositeGenerator {
public:
    CompositeGenerator(std::vector<lstm::EncoderDecoderModel> models, ts::ScalerParams scaler,
                       GeneratorOptions options = {});

    std::size_t lookback() const noexcept { return lookback_; }
    std::size_t lookahead() const noexcept { return lookahead_; }
    const ts::ScalerParams& scaler() const noexcept { return scaler_; }
    const std::vector<lstm::EncoderDecoderModel>& models() const noexcept { return models_; }
    const GeneratorOptions& options() const noexcept { return options_; }

    /// Next H rows in normalized units, each value clamped to [0, 1].
    Matrix next_normalized(const Matrix& lookback) const;

    /// Denormalizes clamped output, clamping again in raw units so that
    /// lo + x * (hi - lo) rounding cannot leave the training range.
    Matrix to_raw(const Matrix& normalized) const;

    /// Denormalized segment for a normalized (L x 8) look-back.
    Segment generate_segment(const Matrix& lookback, std::uint64_t sequence = 0) const;

    /// Number of output values that had to be clamped so far.
    std::uint64_t clamp_count() const noexcept { return clamps_->load(std::memory_order_relaxed); }

private:
    void check_lookback(const Matrix& lookback) const;
    Matrix run_models(const Matrix& lookback) const;

    std::vector<lstm::EncoderDecoderModel> models_;
    std::vector<lstm::PackedModel> packed_;
    ts::ScalerParams scaler_;
    GeneratorOptions options_;
    std::size_t lookback_ = 0;
    std::size_t lookahead_ = 0;
    std::shared_ptr<std::atomic<std::uint64_t>> clamps_ = std::make_shared<std::atomic<std::uint64_t>>(0);
};

/// Drops the oldest rows of `window` and appends `rows` at the end.
void advance_window(Matrix& window, const Matrix& rows);

/// Recursive generation: every segment is appended to the look-back that
/// produces the next one.
std::vector<Segment> generate_trajectory(const CompositeGenerator& gen, const Matrix& seed_lookback,
                                         std::size_t n_segments);

/// Normalized look-back made of the `length` frames ending before `end`.
Matrix seed_lookback(const ts::Dataset& data, std::size_t end, std::size_t length, const ts::ScalerParams& scaler);

/// Stitches segments into a dataset (non-replicated columns are zero).
ts::Dataset to_dataset(const std::vector<Segment>& segments, double rate_hz, double t0 = 0.0);

/// Text manifest listing the eight model files and the scaler.
struct Manifest {
    std::size_t lookback = 0;
    std::size_t lookahead = 0;
    std::size_t hidden = 0;
    double rate_hz = 500.0;
    ts::ScalerParams scaler;
    std::vector<std::filesystem::path> model_files;  // 8, relative to the manifest directory
};

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Writes model_<var>.edl files plus manifest.txt into `dir`; returns the manifest path.
std::filesystem::path save_composite(const std::vector<lstm::EncoderDecoderModel>& models,
                                     const ts::ScalerParams& scaler, double rate_hz,
                                     const std::filesystem::path& dir);

struct LoadedComposite {
    Manifest manifest;
    std::vector<lstm::EncoderDecoderModel> models;
};
LoadedComposite load_composite(const std::filesystem::path& manifest_path);

struct CompositeTrainConfig {
    std::size_t lookback = 2000;
    std::size_t lookahead = 200;
    std::size_t hidden = 64;
    std::size_t stride = 1;
    double train_fraction = 0.8;
    lstm::TrainConfig train;
    std::size_t threads = 0;  // 0 = hardware concurrency
};

struct CompositeTrainResult {
    std::vector<lstm::EncoderDecoderModel> models;
    std::vector<lstm::TrainReport> reports;
    ts::ScalerParams scaler;
    std::size_t train_windows = 0;
    std::size_t validation_windows = 0;
};

using ModelEpochCallback = std::function<void(std::size_t var, std::size_t epoch, double train_mse, double val_mse)>;

/// Splits the recording, fits the scaler on the training part and trains the
/// eight models independently (model k is seeded with train.seed + k).
CompositeTrainResult train_composite(const ts::Dataset& recording, const CompositeTrainConfig& config,
                                     const ModelEpochCallback& on_epoch = {});

}  // namespace honeypot::gen
