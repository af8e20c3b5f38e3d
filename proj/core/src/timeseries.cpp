#include "honeypot/timeseries.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace honeypot::ts {

namespace {

double SampleFrame::* const kReplicatedFields[kReplicated] = {
    &SampleFrame::u0,         &SampleFrame::u1,           &SampleFrame::yaw,     &SampleFrame::pitch,
    &SampleFrame::target_yaw, &SampleFrame::target_pitch, &SampleFrame::yaw_dot, &SampleFrame::pitch_dot};

std::string_view trim_cr(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim_cr(line.substr(start)));
            break;
        }
        out.push_back(trim_cr(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

bool parse_number(std::string_view field, double& out) {
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

double infer_rate(const std::vector<SampleFrame>& frames, double fallback) {
    if (frames.size() < 2) return fallback;
    std::vector<double> deltas;
    deltas.reserve(frames.size() - 1);
    for (std::size_t i = 1; i < frames.size(); ++i) deltas.push_back(frames[i].t - frames[i - 1].t);
    const auto mid = deltas.begin() + static_cast<std::ptrdiff_t>(deltas.size() / 2);
    std::nth_element(deltas.begin(), mid, deltas.end());
    double rate = 1.0 / *mid;
    const double rounded = std::round(rate);
    if (rounded > 0 && std::abs(rate - rounded) <= 1e-6 * rounded) rate = rounded;
    return rate;
}

}  // namespace

double SampleFrame::replicated(std::size_t k) const { return this->*kReplicatedFields[k]; }

void SampleFrame::set_replicated(std::size_t k, double value) { this->*kReplicatedFields[k] = value; }

std::array<double, 13> SampleFrame::columns() const {
    return {t, u0, u1, i0, i1, s0, s1, yaw, pitch, target_yaw, target_pitch, yaw_dot, pitch_dot};
}

SampleFrame SampleFrame::from_columns(const std::array<double, 13>& c) {
    return {c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7], c[8], c[9], c[10], c[11], c[12]};
}

std::string validate(const Dataset& dataset) {
    if (!(dataset.rate_hz > 0) || !std::isfinite(dataset.rate_hz)) return "rate_hz must be positive";
    const double step = 1.0 / dataset.rate_hz;
    for (std::size_t i = 0; i < dataset.frames.size(); ++i) {
        const auto& f = dataset.frames[i];
        for (double v : f.columns()) {
            if (!std::isfinite(v)) return "non-finite value in frame " + std::to_string(i);
        }
        if (std::abs(f.u0) > kVoltageLimit || std::abs(f.u1) > kVoltageLimit) {
            return "voltage outside +-24 V in frame " + std::to_string(i);
        }
        if (i > 0 && std::abs(f.t - dataset.frames[i - 1].t - step) > 1e-9) {
            return "time step deviates from 1/rate_hz at frame " + std::to_string(i);
        }
    }
    return {};
}

Dataset parse_csv(std::string_view text, double fallback_rate_hz) {
    Dataset ds;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        const auto line = trim_cr(text.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty()) continue;

        const auto fields = split_fields(line);
        if (!header_seen) {
            header_seen = true;
            for (std::size_t c = 0; c < kCsvColumns.size(); ++c) {
                if (c >= fields.size() || fields[c] != kCsvColumns[c]) {
                    throw CsvError(CsvError::Kind::MissingColumn,
                                   "missing column '" + std::string(kCsvColumns[c]) + "' at position " +
                                       std::to_string(c) +
                                       (c < fields.size() ? ", found '" + std::string(fields[c]) + "'" : ""));
                }
            }
            if (fields.size() != kCsvColumns.size()) {
                throw CsvError(CsvError::Kind::MissingColumn, "unexpected extra column '" +
                                                                  std::string(fields[kCsvColumns.size()]) + "'");
            }
            continue;
        }

        const std::size_t row = ds.frames.size();
        if (fields.size() != kCsvColumns.size()) {
            throw CsvError(CsvError::Kind::MalformedRow, "row " + std::to_string(row) + " (line " +
                                                             std::to_string(line_no) + "): expected 13 fields, got " +
                                                             std::to_string(fields.size()));
        }
        std::array<double, 13> values{};
        for (std::size_t c = 0; c < values.size(); ++c) {
            if (!parse_number(fields[c], values[c])) {
                throw CsvError(CsvError::Kind::MalformedRow,
                               "row " + std::to_string(row) + " (line " + std::to_string(line_no) +
                                   "): non-numeric value '" + std::string(fields[c]) + "' in column " +
                                   std::string(kCsvColumns[c]));
            }
        }
        auto frame = SampleFrame::from_columns(values);
        if (!ds.frames.empty() && !(frame.t > ds.frames.back().t)) {
            throw CsvError(CsvError::Kind::NonMonotoneTime,
                           "time does not increase at row " + std::to_string(row));
        }
        ds.frames.push_back(frame);
    }
    if (!header_seen) throw CsvError(CsvError::Kind::MissingColumn, "missing column 'Time': empty file");
    ds.rate_hz = infer_rate(ds.frames, fallback_rate_hz);
    return ds;
}

Dataset read_csv(const std::filesystem::path& path, double fallback_rate_hz) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CsvError(CsvError::Kind::IoFailure, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), fallback_rate_hz);
}

std::string format_double(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

std::string format_csv(const Dataset& dataset) {
    std::string out;
    out.reserve(64 + dataset.frames.size() * 160);
    for (std::size_t c = 0; c < kCsvColumns.size(); ++c) {
        if (c) out += ',';
        out += kCsvColumns[c];
    }
    out += '\n';
    const double t0 = dataset.frames.empty() ? 0.0 : dataset.frames.front().t;
    for (std::size_t i = 0; i < dataset.frames.size(); ++i) {
        auto cols = dataset.frames[i].columns();
        cols[0] = t0 + static_cast<double>(i) / dataset.rate_hz;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (c) out += ',';
            out += format_double(cols[c]);
        }
        out += '\n';
    }
    return out;
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CsvError(CsvError::Kind::IoFailure, "cannot open " + path.string() + " for writing");
    const auto text = format_csv(dataset);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw CsvError(CsvError::Kind::IoFailure, "write failed for " + path.string());
}

double ScalerParams::normalize(std::size_t var, double x) const {
    const auto [lo, hi] = ranges[var];
    if (hi == lo) return 0.0;
    return (x - lo) / (hi - lo);
}

double ScalerParams::denormalize(std::size_t var, double x) const {
    const auto [lo, hi] = ranges[var];
    if (hi == lo) return lo;
    return lo + x * (hi - lo);
}

Matrix ScalerParams::normalize(const Matrix& raw) const {
    Matrix out(raw.rows(), raw.cols());
    for (std::size_t r = 0; r < raw.rows(); ++r)
        for (std::size_t c = 0; c < raw.cols(); ++c) out(r, c) = normalize(c, raw(r, c));
    return out;
}

Matrix ScalerParams::denormalize(const Matrix& normalized) const {
    Matrix out(normalized.rows(), normalized.cols());
    for (std::size_t r = 0; r < normalized.rows(); ++r)
        for (std::size_t c = 0; c < normalized.cols(); ++c) out(r, c) = denormalize(c, normalized(r, c));
    return out;
}

ScalerParams fit_scaler(const Dataset& dataset) {
    if (dataset.empty()) throw DatasetError(DatasetError::Kind::EmptyDataset, "cannot fit scaler on empty dataset");
    ScalerParams p;
    for (std::size_t k = 0; k < kReplicated; ++k) {
        const double first = dataset.frames.front().replicated(k);
        p.ranges[k] = {first, first};
    }
    for (const auto& f : dataset.frames) {
        for (std::size_t k = 0; k < kReplicated; ++k) {
            const double v = f.replicated(k);
            p.ranges[k].min = std::min(p.ranges[k].min, v);
            p.ranges[k].max = std::max(p.ranges[k].max, v);
        }
    }
    return p;
}

Matrix replicated_block(const Dataset& dataset, std::size_t first, std::size_t count) {
    Matrix m(count, kReplicated);
    for (std::size_t r = 0; r < count; ++r) {
        const auto& f = dataset.frames[first + r];
        for (std::size_t k = 0; k < kReplicated; ++k) m(r, k) = f.replicated(k);
    }
    return m;
}

std::size_t window_count(std::size_t n, std::size_t lookback, std::size_t lookahead, std::size_t stride) {
    if (stride == 0 || n < lookback + lookahead) return 0;
    return (n - lookback - lookahead) / stride + 1;
}

std::vector<WindowPair> make_windows(const Dataset& dataset, std::size_t lookback, std::size_t lookahead,
                                     std::size_t stride, const ScalerParams& params) {
    if (lookback == 0 || lookahead == 0 || stride == 0) {
        throw DatasetError(DatasetError::Kind::InvalidArgument, "lookback, lookahead and stride must be >= 1");
    }
    if (dataset.size() < lookback + lookahead) {
        throw DatasetError(DatasetError::Kind::DatasetTooShort,
                           "dataset has " + std::to_string(dataset.size()) + " frames, need at least " +
                               std::to_string(lookback + lookahead));
    }
    const auto count = window_count(dataset.size(), lookback, lookahead, stride);
    std::vector<WindowPair> windows;
    windows.reserve(count);
    for (std::size_t w = 0; w < count; ++w) {
        const std::size_t origin = w * stride;
        windows.push_back({params.normalize(replicated_block(dataset, origin, lookback)),
                           params.normalize(replicated_block(dataset, origin + lookback, lookahead)), origin});
    }
    return windows;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw DatasetError(DatasetError::Kind::InvalidArgument, "train_fraction must lie in (0, 1)");
    }
    if (dataset.empty()) throw DatasetError(DatasetError::Kind::EmptyDataset, "cannot split empty dataset");
    const auto n = dataset.size();
    auto head = static_cast<std::size_t>(std::round(static_cast<double>(n) * train_fraction));
    head = std::min(head, n);
    Dataset a{{dataset.frames.begin(), dataset.frames.begin() + static_cast<std::ptrdiff_t>(head)}, dataset.rate_hz};
    Dataset b{{dataset.frames.begin() + static_cast<std::ptrdiff_t>(head), dataset.frames.end()}, dataset.rate_hz};
    return {std::move(a), std::move(b)};
}

}  // namespace honeypot::ts
