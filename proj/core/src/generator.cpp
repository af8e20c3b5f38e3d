#include "honeypot/generator.hpp"

#include <algorithm>
#include <mutex>
#include <thread>

#include "honeypot/keyvalue.hpp"
#include "honeypot/lstm/io.hpp"

namespace honeypot::gen {

namespace {

constexpr const char* kManifestFormat = "honeypot-composite/1";

std::size_t worker_count(std::size_t requested, std::size_t jobs) {
    std::size_t n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
    return std::min(n, jobs);
}

template <typename Fn>
void parallel_for(std::size_t jobs, std::size_t threads, Fn&& fn) {
    if (threads <= 1) {
        for (std::size_t j = 0; j < jobs; ++j) fn(j);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t j = next++; j < jobs; j = next++) {
                try {
                    fn(j);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    pool.clear();
    if (error) std::rethrow_exception(error);
}

}  // namespace

CompositeGenerator::CompositeGenerator(std::vector<lstm::EncoderDecoderModel> models, ts::ScalerParams scaler,
                                       GeneratorOptions options)
    : models_(std::move(models)), scaler_(scaler), options_(options) {
    if (models_.size() != ts::kReplicated) {
        throw GeneratorError(GeneratorError::Kind::ModelOrderMismatch, "composite needs exactly 8 models");
    }
    lookback_ = models_.front().config.lookback;
    lookahead_ = models_.front().config.lookahead;
    for (std::size_t k = 0; k < models_.size(); ++k) {
        const auto& cfg = models_[k].config;
        if (cfg.target != k) {
            throw GeneratorError(GeneratorError::Kind::ModelOrderMismatch,
                                 "model " + std::to_string(k) + " forecasts variable " + std::to_string(cfg.target));
        }
        if (cfg.lookback != lookback_ || cfg.lookahead != lookahead_ || cfg.input_size != ts::kReplicated) {
            throw GeneratorError(GeneratorError::Kind::ShapeMismatch, "models disagree on look-back/look-ahead geometry");
        }
        packed_.emplace_back(models_[k]);
    }
    for (const auto& r : scaler_.ranges) {
        if (!(r.max >= r.min)) throw GeneratorError(GeneratorError::Kind::ShapeMismatch, "scaler has max < min");
    }
}

void CompositeGenerator::check_lookback(const Matrix& lookback) const {
    if (lookback.rows() != lookback_ || lookback.cols() != ts::kReplicated) {
        throw GeneratorError(GeneratorError::Kind::ShapeMismatch,
                             "look-back must be " + std::to_string(lookback_) + " x 8");
    }
    for (double v : lookback.data()) {
        if (!std::isfinite(v)) throw GeneratorError(GeneratorError::Kind::ShapeMismatch, "look-back has non-finite values");
    }
}

Matrix CompositeGenerator::run_models(const Matrix& lookback) const {
    Matrix out(lookahead_, ts::kReplicated);
    std::vector<std::vector<double>> columns(ts::kReplicated);
    const std::size_t threads = options_.parallel ? worker_count(0, ts::kReplicated) : 1;
    parallel_for(ts::kReplicated, threads, [&](std::size_t k) { columns[k] = packed_[k].forward(lookback); });

    std::uint64_t clamped = 0;
    for (std::size_t k = 0; k < ts::kReplicated; ++k) {
        for (std::size_t r = 0; r < lookahead_; ++r) {
            double v = columns[k][r];
            if (!(v >= 0.0 && v <= 1.0)) {
                ++clamped;
                v = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
            }
            out(r, k) = v;
        }
    }
    if (clamped) clamps_->fetch_add(clamped, std::memory_order_relaxed);
    return out;
}

Matrix CompositeGenerator::next_normalized(const Matrix& lookback) const {
    check_lookback(lookback);
    if (!options_.single_step) return run_models(lookback);

    Matrix window = lookback;
    Matrix out(lookahead_, ts::kReplicated);
    Matrix row(1, ts::kReplicated);
    for (std::size_t r = 0; r < lookahead_; ++r) {
        const Matrix block = run_models(window);
        for (std::size_t k = 0; k < ts::kReplicated; ++k) row(0, k) = out(r, k) = block(0, k);
        advance_window(window, row);
    }
    return out;
}

Matrix CompositeGenerator::to_raw(const Matrix& normalized) const {
    Matrix out = scaler_.denormalize(normalized);
    for (std::size_t r = 0; r < out.rows(); ++r) {
        for (std::size_t k = 0; k < out.cols(); ++k) {
            const auto [lo, hi] = scaler_.ranges[k];
            out(r, k) = std::clamp(out(r, k), lo, hi);
        }
    }
    return out;
}

Segment CompositeGenerator::generate_segment(const Matrix& lookback, std::uint64_t sequence) const {
    return {to_raw(next_normalized(lookback)), sequence};
}

void advance_window(Matrix& window, const Matrix& rows) {
    if (rows.cols() != window.cols()) throw GeneratorError(GeneratorError::Kind::ShapeMismatch, "advance_window: column mismatch");
    const std::size_t n = window.rows(), k = rows.rows(), cols = window.cols();
    auto data = window.data();
    if (k >= n) {
        std::copy_n(rows.data().data() + (k - n) * cols, n * cols, data.data());
        return;
    }
    std::copy(data.begin() + static_cast<std::ptrdiff_t>(k * cols), data.end(), data.begin());
    std::copy_n(rows.data().data(), k * cols, data.data() + (n - k) * cols);
}

std::vector<Segment> generate_trajectory(const CompositeGenerator& gen, const Matrix& seed_lookback,
                                         std::size_t n_segments) {
    if (n_segments == 0) throw GeneratorError(GeneratorError::Kind::ShapeMismatch, "n_segments must be >= 1");
    Matrix window = seed_lookback;
    std::vector<Segment> out;
    out.reserve(n_segments);
    for (std::size_t s = 0; s < n_segments; ++s) {
        Matrix normalized = gen.next_normalized(window);
        advance_window(window, normalized);
        out.push_back({gen.to_raw(normalized), s});
    }
    return out;
}

Matrix seed_lookback(const ts::Dataset& data, std::size_t end, std::size_t length, const ts::ScalerParams& scaler) {
    if (end > data.size() || end < length) {
        throw GeneratorError(GeneratorError::Kind::SeedTooShort,
                             "seed needs " + std::to_string(length) + " frames, source provides " +
                                 std::to_string(std::min(end, data.size())));
    }
    return scaler.normalize(ts::replicated_block(data, end - length, length));
}

ts::Dataset to_dataset(const std::vector<Segment>& segments, double rate_hz, double t0) {
    ts::Dataset ds;
    ds.rate_hz = rate_hz;
    for (const auto& seg : segments) {
        for (std::size_t r = 0; r < seg.values.rows(); ++r) {
            ts::SampleFrame f;
            f.t = t0 + static_cast<double>(ds.frames.size()) / rate_hz;
            for (std::size_t k = 0; k < ts::kReplicated; ++k) f.set_replicated(k, seg.values(r, k));
            ds.frames.push_back(f);
        }
    }
    return ds;
}

Manifest read_manifest(const std::filesystem::path& path) {
    try {
        const auto kv = KeyValueFile::load(path);
        if (kv.get("format") != kManifestFormat) {
            throw GeneratorError(GeneratorError::Kind::BadManifest, "unknown manifest format '" + kv.get("format") + "'");
        }
        Manifest m;
        m.lookback = static_cast<std::size_t>(kv.get_int("lookback"));
        m.lookahead = static_cast<std::size_t>(kv.get_int("lookahead"));
        m.hidden = static_cast<std::size_t>(kv.get_int("hidden"));
        m.rate_hz = kv.get_double("rate_hz");
        for (std::size_t k = 0; k < ts::kReplicated; ++k) {
            const std::string name(ts::kVarNames[k]);
            m.model_files.emplace_back(kv.get("model." + name));
            m.scaler.ranges[k] = {kv.get_double("scaler." + name + ".min"), kv.get_double("scaler." + name + ".max")};
        }
        return m;
    } catch (const ConfigError& e) {
        throw GeneratorError(GeneratorError::Kind::BadManifest, path.string() + ": " + e.what());
    }
}

void write_manifest(const Manifest& m, const std::filesystem::path& path) {
    KeyValueFile kv;
    kv.add("format", kManifestFormat);
    kv.add("lookback", std::to_string(m.lookback));
    kv.add("lookahead", std::to_string(m.lookahead));
    kv.add("hidden", std::to_string(m.hidden));
    kv.add("rate_hz", ts::format_double(m.rate_hz));
    for (std::size_t k = 0; k < ts::kReplicated; ++k) {
        const std::string name(ts::kVarNames[k]);
        kv.add("model." + name, m.model_files.at(k).generic_string());
    }
    for (std::size_t k = 0; k < ts::kReplicated; ++k) {
        const std::string name(ts::kVarNames[k]);
        kv.add("scaler." + name + ".min", ts::format_double(m.scaler.ranges[k].min));
        kv.add("scaler." + name + ".max", ts::format_double(m.scaler.ranges[k].max));
    }
    kv.save(path);
}

std::filesystem::path save_composite(const std::vector<lstm::EncoderDecoderModel>& models,
                                     const ts::ScalerParams& scaler, double rate_hz,
                                     const std::filesystem::path& dir) {
    if (models.size() != ts::kReplicated) {
        throw GeneratorError(GeneratorError::Kind::ModelOrderMismatch, "composite needs exactly 8 models");
    }
    std::filesystem::create_directories(dir);
    Manifest m;
    m.lookback = models.front().config.lookback;
    m.lookahead = models.front().config.lookahead;
    m.hidden = models.front().config.hidden_size;
    m.rate_hz = rate_hz;
    m.scaler = scaler;
    for (std::size_t k = 0; k < ts::kReplicated; ++k) {
        const auto file = "model_" + std::string(ts::kVarNames[k]) + ".edl";
        lstm::save_model(models[k], dir / file);
        m.model_files.emplace_back(file);
    }
    const auto path = dir / "manifest.txt";
    write_manifest(m, path);
    return path;
}

LoadedComposite load_composite(const std::filesystem::path& manifest_path) {
    LoadedComposite out{read_manifest(manifest_path), {}};
    const auto base = manifest_path.parent_path();
    for (std::size_t k = 0; k < ts::kReplicated; ++k) {
        auto model = lstm::load_model(base / out.manifest.model_files[k]);
        const auto& cfg = model.config;
        if (cfg.target != k) {
            throw GeneratorError(GeneratorError::Kind::ModelOrderMismatch,
                                 out.manifest.model_files[k].string() + " forecasts variable " +
                                     std::to_string(cfg.target) + ", not " + std::string(ts::kVarNames[k]));
        }
        if (cfg.lookback != out.manifest.lookback || cfg.lookahead != out.manifest.lookahead ||
            cfg.hidden_size != out.manifest.hidden) {
            throw GeneratorError(GeneratorError::Kind::BadManifest,
                                 out.manifest.model_files[k].string() + " disagrees with the manifest geometry");
        }
        out.models.push_back(std::move(model));
    }
    return out;
}

CompositeTrainResult train_composite(const ts::Dataset& recording, const CompositeTrainConfig& config,
                                     const ModelEpochCallback& on_epoch) {
    auto [train_part, val_part] = ts::split(recording, config.train_fraction);
    CompositeTrainResult result;
    result.scaler = ts::fit_scaler(train_part);
    const auto train_windows =
        ts::make_windows(train_part, config.lookback, config.lookahead, config.stride, result.scaler);
    std::vector<ts::WindowPair> val_windows;
    if (val_part.size() >= config.lookback + config.lookahead) {
        val_windows = ts::make_windows(val_part, config.lookback, config.lookahead, config.stride, result.scaler);
    }
    result.train_windows = train_windows.size();
    result.validation_windows = val_windows.size();

    result.models.resize(ts::kReplicated);
    result.reports.resize(ts::kReplicated);
    std::mutex callback_mutex;
    parallel_for(ts::kReplicated, worker_count(config.threads, ts::kReplicated), [&](std::size_t k) {
        lstm::ModelConfig mc{ts::kReplicated, config.hidden, config.lookback, config.lookahead, k};
        auto model = lstm::init_model(mc, config.train.seed * 1000003ULL + 17 * (k + 1));
        auto tc = config.train;
        tc.seed = config.train.seed + k;
        lstm::EpochCallback cb;
        if (on_epoch) {
            cb = [&, k](std::size_t epoch, double tr, double va) {
                std::lock_guard lock(callback_mutex);
                on_epoch(k, epoch, tr, va);
            };
        }
        result.reports[k] = lstm::train(model, train_windows, tc, val_windows, cb);
        result.models[k] = std::move(model);
    });
    return result;
}

}  // namespace honeypot::gen
