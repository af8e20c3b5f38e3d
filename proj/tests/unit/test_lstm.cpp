#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "honeypot/lstm/io.hpp"
#include "honeypot/lstm/model.hpp"
#include "honeypot/lstm/optim.hpp"
#include "honeypot/rng.hpp"

using namespace honeypot;
using namespace honeypot::lstm;

namespace {

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (auto& v : m.data()) v = rng.uniform();
    return m;
}

std::vector<double> random_vector(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform();
    return v;
}

double loss(const EncoderDecoderModel& m, const Matrix& lookback, const std::vector<double>& target) {
    return mse(forward(m, lookback), target);
}

// Largest relative error between BPTT and central differences over every parameter.
double worst_gradient_error(EncoderDecoderModel model, const Matrix& lookback, const std::vector<double>& target) {
    const double step = 1e-5;
    const auto grads = backward(model, lookback, target);
    const auto g_blocks = parameter_blocks(grads);
    auto p_blocks = parameter_blocks(model);
    double worst = 0.0;
    for (std::size_t b = 0; b < p_blocks.size(); ++b) {
        for (std::size_t i = 0; i < p_blocks[b].size(); ++i) {
            const double saved = p_blocks[b][i];
            p_blocks[b][i] = saved + step;
            const double up = loss(model, lookback, target);
            p_blocks[b][i] = saved - step;
            const double down = loss(model, lookback, target);
            p_blocks[b][i] = saved;
            const double numeric = (up - down) / (2 * step);
            const double analytic = g_blocks[b][i];
            const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
            worst = std::max(worst, std::abs(numeric - analytic) / scale);
        }
    }
    return worst;
}

}  // namespace

TEST(Cell, ScalarCellMatchesGateEquations) {
    LstmCellWeights w(1, 1);
    // rows: input, forget, candidate, output
    const double wx[4] = {0.5, -0.3, 0.8, 0.1};
    const double rh[4] = {0.2, 0.4, -0.6, 0.7};
    const double bb[4] = {0.05, 1.0, -0.1, 0.2};
    for (int k = 0; k < 4; ++k) {
        w.w(k, 0) = wx[k];
        w.r(k, 0) = rh[k];
        w.b[k] = bb[k];
    }
    const double x = 0.9, h = -0.4, c = 0.3;
    auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    const double i = sig(wx[0] * x + rh[0] * h + bb[0]);
    const double f = sig(wx[1] * x + rh[1] * h + bb[1]);
    const double g = std::tanh(wx[2] * x + rh[2] * h + bb[2]);
    const double o = sig(wx[3] * x + rh[3] * h + bb[3]);
    const double c_next = f * c + i * g;
    const double h_next = o * std::tanh(c_next);

    const std::vector<double> xs{x}, hs{h}, cs{c};
    const auto out = cell_forward(xs, hs, cs, w);
    EXPECT_NEAR(out.c[0], c_next, 1e-15);
    EXPECT_NEAR(out.h[0], h_next, 1e-15);

    const std::vector<double> wrong(2);
    EXPECT_THROW(cell_forward(wrong, hs, cs, w), ShapeMismatch);
}

TEST(Model, InitRangesAndForgetBias) {
    ModelConfig cfg{8, 16, 10, 4, 3};
    const auto m = init_model(cfg, 1);
    const double bound = 1.0 / std::sqrt(16.0);
    for (double v : m.encoder.w.data()) EXPECT_LE(std::abs(v), bound);
    for (std::size_t k = 16; k < 32; ++k) {
        EXPECT_EQ(m.encoder.b[k], 1.0);
        EXPECT_EQ(m.decoder.b[k], 1.0);
    }
    EXPECT_EQ(m.parameter_count(),
              4 * 16 * (8 + 16 + 1) + 4 * 16 * (1 + 16 + 1) + 16 + 1);
    EXPECT_EQ(init_model(cfg, 1), m);
    EXPECT_NE(init_model(cfg, 2), m);
}

TEST(Model, PackedForwardMatchesReference) {
    Rng rng(4);
    for (std::size_t target = 0; target < 8; target += 3) {
        const auto m = init_model({8, 12, 9, 5, target}, 10 + target);
        const PackedModel packed(m);
        for (int trial = 0; trial < 5; ++trial) {
            const auto lb = random_matrix(rng, 9, 8);
            const auto a = forward(m, lb);
            const auto b = packed.forward(lb);
            ASSERT_EQ(a.size(), 5u);
            for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
        }
    }
    const auto m = init_model({8, 4, 5, 2, 0}, 1);
    EXPECT_THROW(forward(m, Matrix(4, 8)), ShapeMismatch);
    EXPECT_THROW(forward(m, Matrix(5, 7)), ShapeMismatch);
}

TEST(Model, DecoderFeedsBackItsOutput) {
    // The first decoder input is the last observed target (zero here), so
    // cutting the input weights only changes outputs after the first.
    auto m = init_model({8, 4, 3, 3, 0}, 9);
    Matrix lb(3, 8, 0.5);
    lb(2, 0) = 0.0;
    const auto base = forward(m, lb);
    for (std::size_t k = 0; k < 16; ++k) m.decoder.w(k, 0) = 0.0;
    const auto no_feedback = forward(m, lb);
    EXPECT_EQ(base[0], no_feedback[0]);
    EXPECT_NE(base[1], no_feedback[1]);
}

TEST(Gradients, MatchFiniteDifferences) {
    Rng rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        ModelConfig cfg{8, 4, 5, 3, static_cast<std::size_t>(rng.below(8))};
        const auto model = init_model(cfg, 100 + trial);
        const auto lb = random_matrix(rng, 5, 8);
        const auto target = random_vector(rng, 3);
        EXPECT_LT(worst_gradient_error(model, lb, target), 1e-4) << "trial " << trial;
    }
}

TEST(Gradients, BatchIsMeanOfWindows) {
    Rng rng(2);
    const auto model = init_model({8, 5, 4, 3, 2}, 3);
    std::vector<Matrix> lbs;
    std::vector<std::vector<double>> targets;
    for (int k = 0; k < 3; ++k) {
        lbs.push_back(random_matrix(rng, 4, 8));
        targets.push_back(random_vector(rng, 3));
    }
    std::vector<const Matrix*> lb_ptrs;
    std::vector<std::span<const double>> t_spans;
    for (int k = 0; k < 3; ++k) {
        lb_ptrs.push_back(&lbs[k]);
        t_spans.emplace_back(targets[k]);
    }
    const auto batch = loss_and_gradients(model, lb_ptrs, t_spans);

    double mean_loss = 0.0;
    auto mean_grads = zeros_like(model);
    auto acc = parameter_blocks(mean_grads);
    for (int k = 0; k < 3; ++k) {
        mean_loss += loss(model, lbs[k], targets[k]) / 3.0;
        const auto g = backward(model, lbs[k], targets[k]);
        const auto gb = parameter_blocks(g);
        for (std::size_t b = 0; b < acc.size(); ++b)
            for (std::size_t i = 0; i < acc[b].size(); ++i) acc[b][i] += gb[b][i] / 3.0;
    }
    EXPECT_NEAR(batch.loss, mean_loss, 1e-14);
    const auto got = parameter_blocks(batch.grads);
    for (std::size_t b = 0; b < acc.size(); ++b)
        for (std::size_t i = 0; i < acc[b].size(); ++i) EXPECT_NEAR(got[b][i], acc[b][i], 1e-13);
}

TEST(Adam, TwoHandComputedStepsOnSquare) {
    // f(p) = p^2, g = 2p, p0 = 1, lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
    const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double g1 = 2.0;
    const double m1 = (1 - b1) * g1, v1 = (1 - b2) * g1 * g1;
    const double p1 = 1.0 - lr * (m1 / (1 - b1)) / (std::sqrt(v1 / (1 - b2)) + eps);
    const double g2 = 2.0 * p1;
    const double m2 = b1 * m1 + (1 - b1) * g2, v2 = b2 * v1 + (1 - b2) * g2 * g2;
    const double p2 = p1 - lr * (m2 / (1 - b1 * b1)) / (std::sqrt(v2 / (1 - b2 * b2)) + eps);

    std::vector<double> p{1.0};
    AdamState state;
    state.lr = lr;
    std::vector<double> g{2.0 * p[0]};
    adam_step(p, g, state);
    EXPECT_NEAR(p[0], p1, 1e-12);
    g[0] = 2.0 * p[0];
    adam_step(p, g, state);
    EXPECT_NEAR(p[0], p2, 1e-12);
    EXPECT_EQ(state.step, 2u);
}

TEST(Adam, ModelStepMatchesFlatStep) {
    auto model = init_model({8, 3, 4, 2, 1}, 5);
    const auto grads = init_model({8, 3, 4, 2, 1}, 6);
    std::vector<double> flat, flat_grads;
    for (auto b : parameter_blocks(std::as_const(model))) flat.insert(flat.end(), b.begin(), b.end());
    for (auto b : parameter_blocks(grads)) flat_grads.insert(flat_grads.end(), b.begin(), b.end());
    AdamState s1, s2;
    for (int k = 0; k < 3; ++k) {
        adam_step(model, grads, s1);
        adam_step(flat, flat_grads, s2);
    }
    std::size_t pos = 0;
    for (auto b : parameter_blocks(std::as_const(model)))
        for (double v : b) EXPECT_EQ(v, flat[pos++]);
}

TEST(Io, RoundTripAndErrors) {
    const auto m = init_model({8, 6, 7, 3, 5}, 8);
    const auto bytes = encode_model(m);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "EDL1");
    EXPECT_EQ(bytes.size(), 4 + 5 * 4 + 8 * m.parameter_count());
    EXPECT_EQ(decode_model(bytes), m);

    auto kind = [](std::vector<std::uint8_t> b) {
        try {
            decode_model(b);
        } catch (const ModelIoError& e) {
            return e.kind();
        }
        return ModelIoError::Kind::IoFailure;
    };
    auto bad = bytes;
    bad[0] = 'X';
    EXPECT_EQ(kind(bad), ModelIoError::Kind::BadMagic);
    EXPECT_EQ(kind({bytes.begin(), bytes.end() - 1}), ModelIoError::Kind::TruncatedFile);
    auto extra = bytes;
    extra.push_back(0);
    EXPECT_EQ(kind(extra), ModelIoError::Kind::ShapeHeaderMismatch);
    auto bad_target = bytes;
    bad_target[4 + 4 * 4] = 8;  // target index beyond input size
    EXPECT_EQ(kind(bad_target), ModelIoError::Kind::ShapeHeaderMismatch);

    const auto path = std::filesystem::temp_directory_path() / "honeypot_io_test.edl";
    save_model(m, path);
    EXPECT_EQ(load_model(path), m);
    std::filesystem::remove(path);
    EXPECT_THROW(load_model(path), ModelIoError);
}

TEST(Training, LearnsAndIsDeterministic) {
    // Windows from a slow sine on every column; the model forecasts column 2.
    ts::Dataset ds;
    ds.rate_hz = 50.0;
    for (int i = 0; i < 300; ++i) {
        ts::SampleFrame f;
        f.t = i / 50.0;
        for (std::size_t k = 0; k < 8; ++k) f.set_replicated(k, std::sin(0.07 * i + 0.3 * static_cast<double>(k)));
        ds.frames.push_back(f);
    }
    const auto windows = ts::make_windows(ds, 12, 4, 3, ts::fit_scaler(ds));
    TrainConfig cfg;
    cfg.epochs = 40;
    cfg.lr = 1e-2;
    cfg.batch_size = 8;
    cfg.seed = 3;

    auto a = init_model({8, 8, 12, 4, 2}, 1);
    auto b = a;
    const auto ra = train(a, windows, cfg, windows);
    const auto rb = train(b, windows, cfg);
    EXPECT_EQ(a, b);
    EXPECT_EQ(ra.train_mse, rb.train_mse);
    EXPECT_EQ(ra.epochs, 40u);
    EXPECT_EQ(ra.validation_mse.size(), 40u);
    EXPECT_TRUE(rb.validation_mse.empty());
    EXPECT_LT(ra.train_mse.back(), 0.2 * ra.train_mse.front());
    EXPECT_NEAR(ra.validation_mse.back(), evaluate_mse(a, windows), 1e-12);

    EXPECT_THROW(train(a, std::span<const ts::WindowPair>{}, cfg), EmptyTrainingSet);
}
