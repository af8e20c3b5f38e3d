#include "honeypot/lstm/optim.hpp"

#include <cmath>
#include <numeric>

#include "honeypot/rng.hpp"

namespace honeypot::lstm {

namespace {

struct BiasCorrection {
    double m;
    double v;
};

BiasCorrection begin_step(AdamState& s, std::size_t count) {
    if (s.m.empty() && s.v.empty()) {
        s.m.assign(count, 0.0);
        s.v.assign(count, 0.0);
    }
    if (s.m.size() != count || s.v.size() != count) throw ShapeMismatch("adam_step: moment size mismatch");
    ++s.step;
    const auto tau = static_cast<double>(s.step);
    return {1.0 - std::pow(s.beta1, tau), 1.0 - std::pow(s.beta2, tau)};
}

void apply(std::span<double> p, std::span<const double> g, AdamState& s, std::size_t offset, BiasCorrection bc) {
    for (std::size_t k = 0; k < p.size(); ++k) {
        double& m = s.m[offset + k];
        double& v = s.v[offset + k];
        m = s.beta1 * m + (1.0 - s.beta1) * g[k];
        v = s.beta2 * v + (1.0 - s.beta2) * g[k] * g[k];
        const double m_hat = m / bc.m;
        const double v_hat = v / bc.v;
        p[k] -= s.lr * m_hat / (std::sqrt(v_hat) + s.eps);
    }
}

std::vector<double> target_column(const Matrix& lookahead, std::size_t column) {
    std::vector<double> out(lookahead.rows());
    for (std::size_t r = 0; r < lookahead.rows(); ++r) out[r] = lookahead(r, column);
    return out;
}

}  // namespace

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
    if (params.size() != grads.size()) throw ShapeMismatch("adam_step: parameter and gradient sizes differ");
    const auto bc = begin_step(state, params.size());
    apply(params, grads, state, 0, bc);
}

void adam_step(EncoderDecoderModel& model, const EncoderDecoderModel& grads, AdamState& state) {
    auto p_blocks = parameter_blocks(model);
    const auto g_blocks = parameter_blocks(grads);
    std::size_t total = 0;
    for (std::size_t i = 0; i < p_blocks.size(); ++i) {
        if (p_blocks[i].size() != g_blocks[i].size()) throw ShapeMismatch("adam_step: gradient block shape mismatch");
        total += p_blocks[i].size();
    }
    const auto bc = begin_step(state, total);
    std::size_t offset = 0;
    for (std::size_t i = 0; i < p_blocks.size(); ++i) {
        apply(p_blocks[i], g_blocks[i], state, offset, bc);
        offset += p_blocks[i].size();
    }
}

double evaluate_mse(const EncoderDecoderModel& model, std::span<const ts::WindowPair> windows) {
    if (windows.empty()) throw EmptyTrainingSet("evaluate_mse: no windows");
    const PackedModel packed(model);
    std::vector<double> out(model.config.lookahead);
    double total = 0.0;
    for (const auto& w : windows) {
        packed.forward(w.lookback, out);
        total += mse(out, target_column(w.lookahead, model.config.target));
    }
    return total / static_cast<double>(windows.size());
}

TrainReport train(EncoderDecoderModel& model, std::span<const ts::WindowPair> windows, const TrainConfig& config,
                  std::span<const ts::WindowPair> validation, const EpochCallback& on_epoch) {
    if (windows.empty()) throw EmptyTrainingSet("train: no training windows");
    if (config.batch_size == 0) throw std::invalid_argument("train: batch_size must be >= 1");
    check_shapes(model);
    const auto& cfg = model.config;
    for (const auto& w : windows) {
        if (w.lookback.rows() != cfg.lookback || w.lookback.cols() != cfg.input_size ||
            w.lookahead.rows() != cfg.lookahead || w.lookahead.cols() <= cfg.target) {
            throw ShapeMismatch("train: window geometry does not match the model configuration");
        }
    }

    std::vector<std::vector<double>> targets;
    targets.reserve(windows.size());
    for (const auto& w : windows) targets.push_back(target_column(w.lookahead, cfg.target));

    AdamState adam;
    adam.lr = config.lr;
    Rng rng(config.seed);
    std::vector<std::size_t> order(windows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    BpttWorkspace workspace;
    std::vector<const Matrix*> batch_inputs;
    std::vector<std::span<const double>> batch_targets;

    TrainReport report;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double weighted = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            batch_inputs.clear();
            batch_targets.clear();
            for (std::size_t k = start; k < stop; ++k) {
                batch_inputs.push_back(&windows[order[k]].lookback);
                batch_targets.emplace_back(targets[order[k]]);
            }
            const auto result = loss_and_gradients(model, batch_inputs, batch_targets, &workspace);
            weighted += result.loss * static_cast<double>(stop - start);
            adam_step(model, result.grads, adam);
        }
        const double train_mse = weighted / static_cast<double>(windows.size());
        report.train_mse.push_back(train_mse);
        double val_mse = std::nan("");
        if (!validation.empty()) {
            val_mse = evaluate_mse(model, validation);
            report.validation_mse.push_back(val_mse);
        }
        ++report.epochs;
        if (on_epoch) on_epoch(epoch, train_mse, val_mse);
    }
    return report;
}

}  // namespace honeypot::lstm
