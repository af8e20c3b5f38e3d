#include "honeypot/lstm/cell.hpp"

namespace honeypot::lstm {

CellOutput cell_forward(std::span<const double> x, std::span<const double> h, std::span<const double> c,
                        const LstmCellWeights& weights) {
    const std::size_t d = weights.input_size;
    const std::size_t hs = weights.hidden_size;
    if (x.size() != d || h.size() != hs || c.size() != hs || weights.w.rows() != 4 * hs || weights.w.cols() != d ||
        weights.r.rows() != 4 * hs || weights.r.cols() != hs || weights.b.size() != 4 * hs) {
        throw ShapeMismatch("cell_forward: inconsistent shapes");
    }

    std::vector<double> pre(4 * hs);
    for (std::size_t row = 0; row < 4 * hs; ++row) {
        double acc = weights.b[row];
        for (std::size_t j = 0; j < d; ++j) acc += weights.w(row, j) * x[j];
        for (std::size_t j = 0; j < hs; ++j) acc += weights.r(row, j) * h[j];
        pre[row] = acc;
    }

    CellOutput out;
    auto& cache = out.cache;
    cache.x.assign(x.begin(), x.end());
    cache.h_prev.assign(h.begin(), h.end());
    cache.c_prev.assign(c.begin(), c.end());
    cache.i.resize(hs);
    cache.f.resize(hs);
    cache.g.resize(hs);
    cache.o.resize(hs);
    cache.c.resize(hs);
    cache.tanh_c.resize(hs);
    out.h.resize(hs);
    for (std::size_t k = 0; k < hs; ++k) {
        cache.i[k] = sigmoid(pre[k]);
        cache.f[k] = sigmoid(pre[hs + k]);
        cache.g[k] = std::tanh(pre[2 * hs + k]);
        cache.o[k] = sigmoid(pre[3 * hs + k]);
        cache.c[k] = cache.f[k] * c[k] + cache.i[k] * cache.g[k];
        cache.tanh_c[k] = std::tanh(cache.c[k]);
        out.h[k] = cache.o[k] * cache.tanh_c[k];
    }
    out.c = cache.c;
    return out;
}

}  // namespace honeypot::lstm
