#include "honeypot/evalsuite.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "honeypot/rng.hpp"

namespace honeypot::eval {

VarRmse segment_rmse(const gen::Segment& estimated, const Matrix& reference, const ts::ScalerParams& scaler) {
    const Matrix& est = estimated.values;
    if (est.rows() != reference.rows() || est.cols() != ts::kReplicated || reference.cols() != ts::kReplicated ||
        est.rows() == 0) {
        throw EvalError(EvalError::Kind::ShapeMismatch, "segment_rmse: shapes differ");
    }
    VarRmse out{};
    for (std::size_t v = 0; v < ts::kReplicated; ++v) {
        double sum = 0.0;
        for (std::size_t r = 0; r < est.rows(); ++r) {
            const double d = scaler.normalize(v, est(r, v)) - scaler.normalize(v, reference(r, v));
            sum += d * d;
        }
        out[v] = std::sqrt(sum / static_cast<double>(est.rows()));
    }
    return out;
}

double quantile(std::span<const double> values, double p) {
    if (values.empty()) throw EvalError(EvalError::Kind::InvalidArgument, "quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw EvalError(EvalError::Kind::InvalidArgument, "quantile p outside [0, 1]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

RmseTable aggregate(const std::vector<std::vector<VarRmse>>& raw, double lower_p, double upper_p) {
    if (raw.empty() || raw.front().empty()) throw EvalError(EvalError::Kind::InvalidArgument, "aggregate: empty input");
    const std::size_t steps = raw.front().size();
    for (const auto& seed : raw) {
        if (seed.size() != steps) throw EvalError(EvalError::Kind::ShapeMismatch, "aggregate: ragged step counts");
    }
    RmseTable table;
    table.lower_p = lower_p;
    table.upper_p = upper_p;
    table.seeds = raw.size();
    table.cells.resize(steps);
    std::vector<double> column(raw.size());
    for (std::size_t s = 0; s < steps; ++s) {
        for (std::size_t v = 0; v < ts::kReplicated; ++v) {
            for (std::size_t k = 0; k < raw.size(); ++k) column[k] = raw[k][s][v];
            table.cells[s][v] = {quantile(column, 0.5), quantile(column, lower_p), quantile(column, upper_p)};
        }
    }
    return table;
}

std::vector<std::size_t> draw_seed_positions(std::size_t n_frames, std::size_t lookback, std::size_t span,
                                             std::size_t seeds, std::uint64_t rng_seed) {
    if (n_frames < lookback + span) {
        throw EvalError(EvalError::Kind::ValidationTooShort,
                        "validation has " + std::to_string(n_frames) + " frames, need at least " +
                            std::to_string(lookback + span));
    }
    Rng rng(rng_seed);
    const std::uint64_t choices = n_frames - lookback - span + 1;
    std::vector<std::size_t> out(seeds);
    for (auto& p : out) p = static_cast<std::size_t>(rng.below(choices));
    return out;
}

std::vector<std::vector<VarRmse>> evaluate_raw(const gen::CompositeGenerator& gen, const ts::Dataset& validation,
                                               const EvalOptions& options) {
    if (options.seeds == 0 || options.segments == 0) {
        throw EvalError(EvalError::Kind::InvalidArgument, "evaluate needs at least one seed and one segment");
    }
    const std::size_t L = gen.lookback(), H = gen.lookahead();
    const auto positions =
        draw_seed_positions(validation.size(), L, options.segments * H, options.seeds, options.rng_seed);

    std::vector<std::vector<VarRmse>> raw(options.seeds);
    auto run_seed = [&](std::size_t k) {
        const std::size_t p = positions[k];
        const Matrix lookback = gen.scaler().normalize(ts::replicated_block(validation, p, L));
        const auto segments = gen::generate_trajectory(gen, lookback, options.segments);
        raw[k].resize(options.segments);
        for (std::size_t s = 0; s < options.segments; ++s) {
            const Matrix reference = ts::replicated_block(validation, p + L + s * H, H);
            raw[k][s] = segment_rmse(segments[s], reference, gen.scaler());
        }
    };

    const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, options.seeds);
    if (threads == 1) {
        for (std::size_t k = 0; k < options.seeds; ++k) run_seed(k);
        return raw;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < options.seeds; k = next++) {
                    try {
                        run_seed(k);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) error = std::current_exception();
                    }
                }
            });
        }
    }
    if (error) std::rethrow_exception(error);
    return raw;
}

RmseTable evaluate(const gen::CompositeGenerator& gen, const ts::Dataset& validation, const EvalOptions& options) {
    return aggregate(evaluate_raw(gen, validation, options));
}

std::vector<std::string> check_table(const RmseTable& table) {
    std::vector<std::string> problems;
    for (std::size_t s = 0; s < table.steps(); ++s) {
        for (std::size_t v = 0; v < ts::kReplicated; ++v) {
            const auto& c = table.cells[s][v];
            const std::string where = "step " + std::to_string(s + 1) + " " + std::string(ts::kVarNames[v]);
            if (!(c.lower >= 0.0 && c.median >= 0.0 && c.upper >= 0.0)) {
                problems.push_back(where + ": negative or missing RMSE");
            } else if (!(c.lower <= c.median && c.median <= c.upper)) {
                problems.push_back(where + ": quantiles out of order");
            }
        }
    }
    return problems;
}

std::size_t accumulating_variables(const RmseTable& table) {
    if (table.steps() < 2) return 0;
    std::size_t count = 0;
    for (std::size_t v = 0; v < ts::kReplicated; ++v) {
        if (table.cells.back()[v].median > table.cells.front()[v].median) ++count;
    }
    return count;
}

std::string format_rmse_csv(const RmseTable& table) {
    std::ostringstream out;
    out << "step,variable,median,q_low,q_high\n";
    for (std::size_t s = 0; s < table.steps(); ++s) {
        for (std::size_t v = 0; v < ts::kReplicated; ++v) {
            const auto& c = table.cells[s][v];
            out << s + 1 << ',' << ts::kVarNames[v] << ',' << ts::format_double(c.median) << ','
                << ts::format_double(c.lower) << ',' << ts::format_double(c.upper) << '\n';
        }
    }
    return out.str();
}

TimingStats timing_stats(std::span<const double> samples) {
    if (samples.empty()) throw EvalError(EvalError::Kind::InvalidArgument, "timing_stats: no samples");
    TimingStats st;
    st.n = samples.size();
    st.min = *std::min_element(samples.begin(), samples.end());
    st.max = *std::max_element(samples.begin(), samples.end());
    double sum = 0.0;
    for (double x : samples) sum += x;
    // the mean of values that are all equal can drift by an ulp; keep min <= mean <= max exact
    st.mean = std::clamp(sum / static_cast<double>(samples.size()), st.min, st.max);
    return st;
}

TimingStats bench(const std::function<void()>& step, std::size_t n, Clock& clock, std::size_t warmup) {
    if (n == 0) throw EvalError(EvalError::Kind::InvalidArgument, "bench: n must be >= 1");
    for (std::size_t k = 0; k < warmup; ++k) step();
    std::vector<double> samples(n);
    for (auto& s : samples) {
        const double t0 = clock.now();
        step();
        s = clock.now() - t0;
    }
    return timing_stats(samples);
}

TimingStats bench_producer(const gen::CompositeGenerator& gen, const Matrix& seed_lookback, std::size_t n,
                           Clock& clock) {
    Matrix window = seed_lookback;
    std::uint64_t sequence = 0;
    return bench(
        [&] {
            const Matrix normalized = gen.next_normalized(window);
            [[maybe_unused]] const gen::Segment seg{gen.scaler().denormalize(normalized), sequence++};
            gen::advance_window(window, normalized);
        },
        n, clock);
}

}  // namespace honeypot::eval
