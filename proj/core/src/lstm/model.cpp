#include "honeypot/lstm/model.hpp"

#include <algorithm>
#include <cmath>

#include "honeypot/rng.hpp"

namespace honeypot::lstm {

namespace {

void check_cell(const LstmCellWeights& c, std::size_t d, std::size_t h, const char* name) {
    if (c.input_size != d || c.hidden_size != h || c.w.rows() != 4 * h || c.w.cols() != d || c.r.rows() != 4 * h ||
        c.r.cols() != h || c.b.size() != 4 * h) {
        throw ShapeMismatch(std::string(name) + ": weight shapes do not match the model configuration");
    }
}

// Stacked [W | R] in row-major order, 4h x (d + h).
void pack_stacked(const LstmCellWeights& c, std::vector<double>& out) {
    const std::size_t d = c.input_size, h = c.hidden_size, width = d + h;
    out.resize(4 * h * width);
    for (std::size_t i = 0; i < 4 * h; ++i) {
        double* row = out.data() + i * width;
        std::copy_n(c.w.row(i).data(), d, row);
        std::copy_n(c.r.row(i).data(), h, row + d);
    }
}

// Transposed stack, (d + h) x 4h, for column-sweep evaluation.
std::vector<double> pack_transposed(const LstmCellWeights& c) {
    const std::size_t d = c.input_size, h = c.hidden_size, gates = 4 * h;
    std::vector<double> out((d + h) * gates);
    for (std::size_t i = 0; i < gates; ++i) {
        for (std::size_t j = 0; j < d; ++j) out[j * gates + i] = c.w(i, j);
        for (std::size_t k = 0; k < h; ++k) out[(d + k) * gates + i] = c.r(i, k);
    }
    return out;
}

// One batched cell step. Every buffer is feature-major with the batch as the
// contiguous inner dimension: z is (d + h) x B, act 4h x B, c/tc h x B.
// `c_prev` may be null for a zero initial cell state. `h_out` receives
// h x B values with row stride B.
void step_forward(const double* wc, const double* bias, std::size_t width, std::size_t hs, std::size_t batch,
                  const double* z, const double* c_prev, double* act, double* c, double* tc, double* h_out) {
    for (std::size_t i = 0; i < 4 * hs; ++i) {
        double* a = act + i * batch;
        std::fill_n(a, batch, bias[i]);
        const double* wrow = wc + i * width;
        for (std::size_t j = 0; j < width; ++j) {
            const double w = wrow[j];
            const double* zj = z + j * batch;
            for (std::size_t b = 0; b < batch; ++b) a[b] += w * zj[b];
        }
    }
    for (std::size_t k = 0; k < hs; ++k) {
        double* ai = act + k * batch;
        double* af = act + (hs + k) * batch;
        double* ag = act + (2 * hs + k) * batch;
        double* ao = act + (3 * hs + k) * batch;
        for (std::size_t b = 0; b < batch; ++b) {
            const double ig = sigmoid(ai[b]);
            const double fg = sigmoid(af[b]);
            const double gg = std::tanh(ag[b]);
            const double og = sigmoid(ao[b]);
            ai[b] = ig;
            af[b] = fg;
            ag[b] = gg;
            ao[b] = og;
            const double cp = c_prev ? c_prev[k * batch + b] : 0.0;
            const double cn = fg * cp + ig * gg;
            const double t = std::tanh(cn);
            c[k * batch + b] = cn;
            tc[k * batch + b] = t;
            h_out[k * batch + b] = og * t;
        }
    }
}

struct StepGrad {
    double* da;    // 4h x B scratch
    double* da_t;  // B x 4h scratch
    double* z_t;   // B x width scratch
    double* dw_t;  // width x 4h accumulator
    double* db;    // 4h accumulator
    double* dz;    // width x B output
};

// Backward through one batched cell step. On entry `dh` holds dL/dh_t and
// `dc` dL/dc_t from later steps; on exit `dc` holds dL/dc_{t-1} and `g.dz`
// the gradient with respect to the stacked input [x; h_{t-1}].
void step_backward(const double* wc, std::size_t width, std::size_t hs, std::size_t batch, const double* z,
                   const double* act, const double* tc, const double* c_prev, const double* dh, double* dc,
                   const StepGrad& g) {
    const std::size_t gates = 4 * hs;
    for (std::size_t k = 0; k < hs; ++k) {
        const double* ai = act + k * batch;
        const double* af = act + (hs + k) * batch;
        const double* ag = act + (2 * hs + k) * batch;
        const double* ao = act + (3 * hs + k) * batch;
        for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t idx = k * batch + b;
            const double ig = ai[b], fg = af[b], gg = ag[b], og = ao[b];
            const double t = tc[idx];
            const double d_o = dh[idx] * t;
            const double dcv = dc[idx] + dh[idx] * og * (1.0 - t * t);
            const double cp = c_prev ? c_prev[idx] : 0.0;
            g.da[k * batch + b] = dcv * gg * ig * (1.0 - ig);
            g.da[(hs + k) * batch + b] = dcv * cp * fg * (1.0 - fg);
            g.da[(2 * hs + k) * batch + b] = dcv * ig * (1.0 - gg * gg);
            g.da[(3 * hs + k) * batch + b] = d_o * og * (1.0 - og);
            dc[idx] = dcv * fg;
        }
    }

    for (std::size_t i = 0; i < gates; ++i) {
        double s = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
            const double v = g.da[i * batch + b];
            s += v;
            g.da_t[b * gates + i] = v;
        }
        g.db[i] += s;
    }
    for (std::size_t j = 0; j < width; ++j)
        for (std::size_t b = 0; b < batch; ++b) g.z_t[b * width + j] = z[j * batch + b];

    for (std::size_t b = 0; b < batch; ++b) {
        const double* src = g.da_t + b * gates;
        const double* zb = g.z_t + b * width;
        for (std::size_t j = 0; j < width; ++j) {
            const double zj = zb[j];
            double* dst = g.dw_t + j * gates;
            for (std::size_t i = 0; i < gates; ++i) dst[i] += zj * src[i];
        }
    }

    std::fill_n(g.dz, width * batch, 0.0);
    for (std::size_t i = 0; i < gates; ++i) {
        const double* wrow = wc + i * width;
        const double* dai = g.da + i * batch;
        for (std::size_t j = 0; j < width; ++j) {
            const double w = wrow[j];
            double* dzj = g.dz + j * batch;
            for (std::size_t b = 0; b < batch; ++b) dzj[b] += w * dai[b];
        }
    }
}

void unpack_transposed_grad(const std::vector<double>& dw_t, LstmCellWeights& grad) {
    const std::size_t d = grad.input_size, h = grad.hidden_size, gates = 4 * h;
    for (std::size_t i = 0; i < gates; ++i) {
        for (std::size_t j = 0; j < d; ++j) grad.w(i, j) += dw_t[j * gates + i];
        for (std::size_t k = 0; k < h; ++k) grad.r(i, k) += dw_t[(d + k) * gates + i];
    }
}

void cell_inference_step(const double* wt, const double* bias, std::size_t width, std::size_t hs, const double* z,
                         double* a, double* c, double* h_out) {
    const std::size_t gates = 4 * hs;
    std::copy_n(bias, gates, a);
    for (std::size_t j = 0; j < width; ++j) {
        const double v = z[j];
        const double* row = wt + j * gates;
        for (std::size_t i = 0; i < gates; ++i) a[i] += v * row[i];
    }
    for (std::size_t k = 0; k < hs; ++k) {
        const double ig = sigmoid(a[k]);
        const double fg = sigmoid(a[hs + k]);
        const double gg = std::tanh(a[2 * hs + k]);
        const double og = sigmoid(a[3 * hs + k]);
        c[k] = fg * c[k] + ig * gg;
        h_out[k] = og * std::tanh(c[k]);
    }
}

}  // namespace

std::size_t EncoderDecoderModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& block : parameter_blocks(*this)) n += block.size();
    return n;
}

void check_shapes(const EncoderDecoderModel& model) {
    const auto& cfg = model.config;
    if (cfg.hidden_size == 0 || cfg.input_size == 0 || cfg.lookback == 0 || cfg.lookahead == 0 ||
        cfg.target >= cfg.input_size) {
        throw ShapeMismatch("model configuration has zero sizes or an out-of-range target");
    }
    check_cell(model.encoder, cfg.input_size, cfg.hidden_size, "encoder");
    check_cell(model.decoder, 1, cfg.hidden_size, "decoder");
    if (model.proj_w.size() != cfg.hidden_size) throw ShapeMismatch("projection: size does not match hidden size");
}

EncoderDecoderModel init_model(const ModelConfig& config, std::uint64_t seed) {
    EncoderDecoderModel model(config);
    check_shapes(model);
    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(config.hidden_size));
    for (auto block : parameter_blocks(model))
        for (double& p : block) p = rng.uniform(-bound, bound);
    const std::size_t h = config.hidden_size;
    std::fill_n(model.encoder.b.begin() + static_cast<std::ptrdiff_t>(h), h, 1.0);
    std::fill_n(model.decoder.b.begin() + static_cast<std::ptrdiff_t>(h), h, 1.0);
    return model;
}

std::vector<std::span<double>> parameter_blocks(EncoderDecoderModel& m) {
    return {m.encoder.w.data(), m.encoder.r.data(), m.encoder.b, m.decoder.w.data(), m.decoder.r.data(),
            m.decoder.b,        m.proj_w,           std::span<double>(&m.proj_b, 1)};
}

std::vector<std::span<const double>> parameter_blocks(const EncoderDecoderModel& m) {
    return {m.encoder.w.data(), m.encoder.r.data(), m.encoder.b, m.decoder.w.data(), m.decoder.r.data(),
            m.decoder.b,        m.proj_w,           std::span<const double>(&m.proj_b, 1)};
}

EncoderDecoderModel zeros_like(const EncoderDecoderModel& model) { return EncoderDecoderModel(model.config); }

PackedModel::PackedModel(const EncoderDecoderModel& model)
    : config_(model.config),
      enc_wt_((check_shapes(model), pack_transposed(model.encoder))),
      enc_b_(model.encoder.b),
      dec_wt_(pack_transposed(model.decoder)),
      dec_b_(model.decoder.b),
      proj_w_(model.proj_w),
      proj_b_(model.proj_b) {}

void PackedModel::forward(const Matrix& lookback, std::span<double> out) const {
    const std::size_t d = config_.input_size, h = config_.hidden_size;
    if (lookback.rows() != config_.lookback || lookback.cols() != d) {
        throw ShapeMismatch("forward: look-back must be " + std::to_string(config_.lookback) + " x " +
                            std::to_string(d));
    }
    if (out.size() != config_.lookahead) throw ShapeMismatch("forward: output span must hold H values");

    std::vector<double> z(d + h, 0.0), c(h, 0.0), a(4 * h);
    for (std::size_t t = 0; t < config_.lookback; ++t) {
        std::copy_n(lookback.row(t).data(), d, z.data());
        cell_inference_step(enc_wt_.data(), enc_b_.data(), d + h, h, z.data(), a.data(), c.data(), z.data() + d);
    }

    std::vector<double> zd(1 + h);
    std::copy_n(z.data() + d, h, zd.data() + 1);
    zd[0] = lookback(config_.lookback - 1, config_.target);
    for (std::size_t t = 0; t < config_.lookahead; ++t) {
        cell_inference_step(dec_wt_.data(), dec_b_.data(), 1 + h, h, zd.data(), a.data(), c.data(), zd.data() + 1);
        double y = proj_b_;
        for (std::size_t k = 0; k < h; ++k) y += proj_w_[k] * zd[1 + k];
        out[t] = y;
        zd[0] = y;
    }
}

std::vector<double> PackedModel::forward(const Matrix& lookback) const {
    std::vector<double> out(config_.lookahead);
    forward(lookback, out);
    return out;
}

std::vector<double> forward(const EncoderDecoderModel& model, const Matrix& lookback) {
    return PackedModel(model).forward(lookback);
}

double mse(std::span<const double> output, std::span<const double> target) {
    if (output.size() != target.size() || output.empty()) throw ShapeMismatch("mse: sizes differ or are empty");
    double s = 0.0;
    for (std::size_t i = 0; i < output.size(); ++i) {
        const double e = output[i] - target[i];
        s += e * e;
    }
    return s / static_cast<double>(output.size());
}

BatchResult loss_and_gradients(const EncoderDecoderModel& model, std::span<const Matrix* const> lookbacks,
                               std::span<const std::span<const double>> targets, BpttWorkspace* workspace) {
    check_shapes(model);
    const auto& cfg = model.config;
    const std::size_t batch = lookbacks.size();
    const std::size_t d = cfg.input_size, h = cfg.hidden_size, gates = 4 * h;
    const std::size_t steps_in = cfg.lookback, steps_out = cfg.lookahead;
    const std::size_t enc_width = d + h, dec_width = 1 + h;
    if (batch == 0 || targets.size() != batch) throw ShapeMismatch("loss_and_gradients: empty or mismatched batch");
    for (std::size_t b = 0; b < batch; ++b) {
        if (lookbacks[b]->rows() != steps_in || lookbacks[b]->cols() != d) {
            throw ShapeMismatch("loss_and_gradients: look-back shape mismatch");
        }
        if (targets[b].size() != steps_out) throw ShapeMismatch("loss_and_gradients: target length must equal H");
    }

    BpttWorkspace local;
    BpttWorkspace& ws = workspace ? *workspace : local;
    pack_stacked(model.encoder, ws.enc_w);
    pack_stacked(model.decoder, ws.dec_w);
    ws.enc_z.assign(steps_in * enc_width * batch, 0.0);
    ws.enc_act.resize(steps_in * gates * batch);
    ws.enc_c.resize(steps_in * h * batch);
    ws.enc_tc.resize(steps_in * h * batch);
    ws.dec_z.assign(steps_out * dec_width * batch, 0.0);
    ws.dec_act.resize(steps_out * gates * batch);
    ws.dec_c.resize(steps_out * h * batch);
    ws.dec_tc.resize(steps_out * h * batch);
    ws.dec_h.resize(steps_out * h * batch);
    ws.y.resize(steps_out * batch);

    // Encoder. The h part of z_{t+1} is written in place by step t.
    std::vector<double> enc_h_last(h * batch);
    for (std::size_t t = 0; t < steps_in; ++t) {
        double* z = ws.enc_z.data() + t * enc_width * batch;
        for (std::size_t b = 0; b < batch; ++b) {
            const auto row = lookbacks[b]->row(t);
            for (std::size_t j = 0; j < d; ++j) z[j * batch + b] = row[j];
        }
        double* h_out = t + 1 < steps_in ? ws.enc_z.data() + ((t + 1) * enc_width + d) * batch : enc_h_last.data();
        const double* c_prev = t > 0 ? ws.enc_c.data() + (t - 1) * h * batch : nullptr;
        step_forward(ws.enc_w.data(), model.encoder.b.data(), enc_width, h, batch, z, c_prev,
                     ws.enc_act.data() + t * gates * batch, ws.enc_c.data() + t * h * batch,
                     ws.enc_tc.data() + t * h * batch, h_out);
    }

    // Decoder with output feedback.
    double loss = 0.0;
    for (std::size_t t = 0; t < steps_out; ++t) {
        double* z = ws.dec_z.data() + t * dec_width * batch;
        if (t == 0) {
            for (std::size_t b = 0; b < batch; ++b) z[b] = (*lookbacks[b])(steps_in - 1, cfg.target);
            std::copy_n(enc_h_last.data(), h * batch, z + batch);
        }
        const double* c_prev = t == 0 ? ws.enc_c.data() + (steps_in - 1) * h * batch
                                      : ws.dec_c.data() + (t - 1) * h * batch;
        double* h_t = ws.dec_h.data() + t * h * batch;
        step_forward(ws.dec_w.data(), model.decoder.b.data(), dec_width, h, batch, z, c_prev,
                     ws.dec_act.data() + t * gates * batch, ws.dec_c.data() + t * h * batch,
                     ws.dec_tc.data() + t * h * batch, h_t);
        double* y = ws.y.data() + t * batch;
        std::fill_n(y, batch, model.proj_b);
        for (std::size_t k = 0; k < h; ++k) {
            const double w = model.proj_w[k];
            const double* hk = h_t + k * batch;
            for (std::size_t b = 0; b < batch; ++b) y[b] += w * hk[b];
        }
        for (std::size_t b = 0; b < batch; ++b) {
            const double e = y[b] - targets[b][t];
            loss += e * e;
        }
        if (t + 1 < steps_out) {
            double* z_next = ws.dec_z.data() + (t + 1) * dec_width * batch;
            std::copy_n(y, batch, z_next);
            std::copy_n(h_t, h * batch, z_next + batch);
        }
    }
    const double scale = 1.0 / static_cast<double>(steps_out * batch);
    loss *= scale;

    BatchResult result{loss, zeros_like(model)};
    auto& grads = result.grads;
    ws.dh.assign(h * batch, 0.0);
    ws.dc.assign(h * batch, 0.0);
    ws.da.resize(gates * batch);
    ws.da_t.resize(gates * batch);
    ws.z_t.resize(std::max(enc_width, dec_width) * batch);
    ws.dz.resize(std::max(enc_width, dec_width) * batch);
    ws.dy.resize(batch);
    ws.dx_next.assign(batch, 0.0);
    ws.enc_dw_t.assign(enc_width * gates, 0.0);
    ws.dec_dw_t.assign(dec_width * gates, 0.0);

    const StepGrad dec_grad{ws.da.data(),       ws.da_t.data(),     ws.z_t.data(),
                            ws.dec_dw_t.data(), grads.decoder.b.data(), ws.dz.data()};
    for (std::size_t tt = steps_out; tt-- > 0;) {
        const double* y = ws.y.data() + tt * batch;
        const double* h_t = ws.dec_h.data() + tt * h * batch;
        for (std::size_t b = 0; b < batch; ++b) {
            ws.dy[b] = 2.0 * scale * (y[b] - targets[b][tt]) + ws.dx_next[b];
            grads.proj_b += ws.dy[b];
        }
        for (std::size_t k = 0; k < h; ++k) {
            const double w = model.proj_w[k];
            const double* hk = h_t + k * batch;
            double* dhk = ws.dh.data() + k * batch;
            double s = 0.0;
            for (std::size_t b = 0; b < batch; ++b) {
                s += ws.dy[b] * hk[b];
                dhk[b] += w * ws.dy[b];
            }
            grads.proj_w[k] += s;
        }
        const double* c_prev = tt == 0 ? ws.enc_c.data() + (steps_in - 1) * h * batch
                                       : ws.dec_c.data() + (tt - 1) * h * batch;
        step_backward(ws.dec_w.data(), dec_width, h, batch, ws.dec_z.data() + tt * dec_width * batch,
                      ws.dec_act.data() + tt * gates * batch, ws.dec_tc.data() + tt * h * batch, c_prev,
                      ws.dh.data(), ws.dc.data(), dec_grad);
        std::copy_n(ws.dz.data(), batch, ws.dx_next.data());
        std::copy_n(ws.dz.data() + batch, h * batch, ws.dh.data());
    }

    const StepGrad enc_grad{ws.da.data(),       ws.da_t.data(),     ws.z_t.data(),
                            ws.enc_dw_t.data(), grads.encoder.b.data(), ws.dz.data()};
    for (std::size_t tt = steps_in; tt-- > 0;) {
        const double* c_prev = tt > 0 ? ws.enc_c.data() + (tt - 1) * h * batch : nullptr;
        step_backward(ws.enc_w.data(), enc_width, h, batch, ws.enc_z.data() + tt * enc_width * batch,
                      ws.enc_act.data() + tt * gates * batch, ws.enc_tc.data() + tt * h * batch, c_prev,
                      ws.dh.data(), ws.dc.data(), enc_grad);
        std::copy_n(ws.dz.data() + d * batch, h * batch, ws.dh.data());
    }

    unpack_transposed_grad(ws.enc_dw_t, grads.encoder);
    unpack_transposed_grad(ws.dec_dw_t, grads.decoder);
    return result;
}

EncoderDecoderModel backward(const EncoderDecoderModel& model, const Matrix& lookback, std::span<const double> target) {
    const Matrix* lb = &lookback;
    const std::span<const double> tg = target;
    return loss_and_gradients(model, std::span<const Matrix* const>(&lb, 1),
                              std::span<const std::span<const double>>(&tg, 1))
        .grads;
}

}  // namespace honeypot::lstm
