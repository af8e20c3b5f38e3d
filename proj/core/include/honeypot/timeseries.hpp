#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "honeypot/matrix.hpp"

namespace honeypot::ts {

/// The eight variables the generative model replicates, in model order.
enum class Var : std::size_t { U0, U1, Yaw, Pitch, TargetYaw, TargetPitch, YawDot, PitchDot };

inline constexpr std::size_t kReplicated = 8;

/// Column names of the published recording, in file order.
inline constexpr std::array<std::string_view, 13> kCsvColumns = {
    "Time",  "Voltage0",  "Voltage1",    "Current0", "Current1", "MotorSpeed0", "MotorSpeed1",
    "Yaw",   "Pitch",     "TargetYaw",   "TargetPitch", "YawDot", "PitchDot"};

/// Short names of the replicated variables, indexed by Var.
inline constexpr std::array<std::string_view, kReplicated> kVarNames = {
    "U0", "U1", "Yaw", "Pitch", "TargetYaw", "TargetPitch", "YawDot", "PitchDot"};

inline constexpr double kVoltageLimit = 24.0;

/// One sample of the recording. Angles in rad, rates in rad/s, voltages in V,
/// currents in A, motor speeds in rpm.
struct SampleFrame {
    double t = 0.0;
    double u0 = 0.0, u1 = 0.0;
    double i0 = 0.0, i1 = 0.0;
    double s0 = 0.0, s1 = 0.0;
    double yaw = 0.0, pitch = 0.0;
    double target_yaw = 0.0, target_pitch = 0.0;
    double yaw_dot = 0.0, pitch_dot = 0.0;

    double replicated(std::size_t k) const;
    void set_replicated(std::size_t k, double value);

    /// All 13 columns in file order.
    std::array<double, 13> columns() const;
    static SampleFrame from_columns(const std::array<double, 13>& c);

    bool operator==(const SampleFrame&) const = default;
};

struct Dataset {
    std::vector<SampleFrame> frames;
    double rate_hz = 500.0;

    std::size_t size() const noexcept { return frames.size(); }
    bool empty() const noexcept { return frames.empty(); }
};

/// Checks the frame invariants: finite fields, voltages within the actuator
/// limit, time strictly increasing at 1/rate_hz steps (1e-9 s tolerance).
/// Returns an empty string when valid, otherwise a description of the first
/// violation.
std::string validate(const Dataset& dataset);

class CsvError : public std::runtime_error {
public:
    enum class Kind { MissingColumn, MalformedRow, NonMonotoneTime, IoFailure };

    CsvError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Parses a 13-column recording. The sample rate is inferred from the median
/// time step; files with fewer than two rows get `fallback_rate_hz`.
Dataset read_csv(const std::filesystem::path& path, double fallback_rate_hz = 500.0);
Dataset parse_csv(std::string_view text, double fallback_rate_hz = 500.0);

/// Writes header plus one row per frame. Time is regenerated as
/// t0 + i / rate_hz; numbers use the shortest round-trip representation.
void write_csv(const Dataset& dataset, const std::filesystem::path& path);
std::string format_csv(const Dataset& dataset);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

struct MinMax {
    double min = 0.0;
    double max = 0.0;
    bool operator==(const MinMax&) const = default;
};

class DatasetError : public std::runtime_error {
public:
    enum class Kind { EmptyDataset, DatasetTooShort, InvalidArgument };

    DatasetError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Per-variable min-max scaling for the eight replicated variables.
struct ScalerParams {
    std::array<MinMax, kReplicated> ranges{};

    double normalize(std::size_t var, double x) const;
    double denormalize(std::size_t var, double x) const;

    /// Row-wise over an (n x 8) matrix.
    Matrix normalize(const Matrix& raw) const;
    Matrix denormalize(const Matrix& normalized) const;

    bool operator==(const ScalerParams&) const = default;
};

ScalerParams fit_scaler(const Dataset& dataset);

/// (n x 8) matrix of raw replicated values for frames [first, first + count).
Matrix replicated_block(const Dataset& dataset, std::size_t first, std::size_t count);

struct WindowPair {
    Matrix lookback;   // L x 8, normalized
    Matrix lookahead;  // H x 8, normalized
    std::size_t origin_index = 0;
};

/// Number of windows make_windows produces for the given geometry.
std::size_t window_count(std::size_t n, std::size_t lookback, std::size_t lookahead, std::size_t stride);

std::vector<WindowPair> make_windows(const Dataset& dataset, std::size_t lookback, std::size_t lookahead,
                                     std::size_t stride, const ScalerParams& params);

/// Contiguous prefix/suffix split; the prefix gets round(n * train_fraction)
/// frames with halves rounded up.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction);

}  // namespace honeypot::ts
