#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "honeypot/matrix.hpp"

namespace honeypot::lstm {

class ShapeMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Weights of one LSTM cell. Gate blocks are stacked in the order
/// input, forget, cell candidate, output along the 4h rows.
struct LstmCellWeights {
    std::size_t input_size = 0;
    std::size_t hidden_size = 0;
    Matrix w;               // 4h x d
    Matrix r;               // 4h x h
    std::vector<double> b;  // 4h

    LstmCellWeights() = default;
    LstmCellWeights(std::size_t d, std::size_t h) : input_size(d), hidden_size(h), w(4 * h, d), r(4 * h, h), b(4 * h) {}

    bool operator==(const LstmCellWeights&) const = default;
};

/// Activations of a single cell step, kept for backpropagation.
struct CellCache {
    std::vector<double> x, h_prev, c_prev;
    std::vector<double> i, f, g, o;
    std::vector<double> c, tanh_c;
};

struct CellOutput {
    std::vector<double> h;
    std::vector<double> c;
    CellCache cache;
};

/// i = sig(Wi x + Ri h + bi), f = sig(..), g = tanh(..), o = sig(..);
/// c' = f*c + i*g; h' = o*tanh(c').
CellOutput cell_forward(std::span<const double> x, std::span<const double> h, std::span<const double> c,
                        const LstmCellWeights& weights);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace honeypot::lstm
