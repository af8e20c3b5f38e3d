#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "honeypot/clock.hpp"
#include "honeypot/generator.hpp"
#include "honeypot/matrix.hpp"
#include "honeypot/timeseries.hpp"

namespace honeypot::eval {

class EvalError : public std::runtime_error {
public:
    enum class Kind { ShapeMismatch, ValidationTooShort, InvalidArgument };
    EvalError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

using VarRmse = std::array<double, ts::kReplicated>;

/// Per-variable RMSE between a generated segment and the reference rows,
/// both mapped to normalized units first.
VarRmse segment_rmse(const gen::Segment& estimated, const Matrix& reference, const ts::ScalerParams& scaler);

/// Linear interpolation between order statistics: position p * (n - 1).
double quantile(std::span<const double> values, double p);

struct QuantileBand {
    double median = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

struct RmseTable {
    double lower_p = 0.25;
    double upper_p = 0.75;
    std::size_t seeds = 0;
    // cells[step][var]; step 0 is the first generated segment
    std::vector<std::array<QuantileBand, ts::kReplicated>> cells;

    std::size_t steps() const noexcept { return cells.size(); }
};

/// raw[seed][step] holds the 8 RMSE values of one segment.
RmseTable aggregate(const std::vector<std::vector<VarRmse>>& raw, double lower_p = 0.25, double upper_p = 0.75);

struct EvalOptions {
    std::size_t seeds = 301;
    std::size_t segments = 20;
    std::uint64_t rng_seed = 0;
    std::size_t threads = 1;
};

/// Seed positions drawn uniformly (with replacement) from every offset that
/// leaves room for L look-back rows plus segments * H reference rows.
std::vector<std::size_t> draw_seed_positions(std::size_t n_frames, std::size_t lookback, std::size_t span,
                                             std::size_t seeds, std::uint64_t rng_seed);

std::vector<std::vector<VarRmse>> evaluate_raw(const gen::CompositeGenerator& gen, const ts::Dataset& validation,
                                               const EvalOptions& options);

RmseTable evaluate(const gen::CompositeGenerator& gen, const ts::Dataset& validation, const EvalOptions& options);

/// Invariant violations (negative entries, broken quantile ordering); empty when the table is sound.
std::vector<std::string> check_table(const RmseTable& table);

/// Variables whose median RMSE at the last step exceeds the first step.
std::size_t accumulating_variables(const RmseTable& table);

/// Long-form CSV: step,variable,median,q_low,q_high (steps counted from 1).
std::string format_rmse_csv(const RmseTable& table);

struct TimingStats {
    double min = 0.0;
    double mean = 0.0;
    double max = 0.0;
    std::size_t n = 0;
};

TimingStats timing_stats(std::span<const double> samples);

/// Times n calls of `step` after `warmup` untimed calls.
TimingStats bench(const std::function<void()>& step, std::size_t n, Clock& clock, std::size_t warmup = 3);

/// Times n consecutive generate_segment calls, feeding each segment back into
/// the look-back as the producer thread does.
TimingStats bench_producer(const gen::CompositeGenerator& gen, const Matrix& seed_lookback, std::size_t n,
                           Clock& clock);

}  // namespace honeypot::eval
