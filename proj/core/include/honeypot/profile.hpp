#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace honeypot {

/// Preset run sizes. `full` is the 500 Hz, two-hour configuration; `desk` is the
/// scaled-down configuration that trains in minutes on a CPU.
struct Profile {
    std::string name;
    double rate_hz;
    double duration_s;  // simulated recording length
    std::size_t lookback;
    std::size_t lookahead;
    std::size_t hidden;
    std::size_t epochs;
    double lr;
    std::size_t batch;
    std::size_t stride;
    double train_fraction;
    std::size_t eval_seeds;
    std::size_t eval_segments;
    std::size_t generate_segments;
    std::size_t bench_n;
    double publish_rate_hz;
};

inline Profile full_profile() {
    return {"full", 500.0, 7200.0, 2000, 200, 64, 1000, 1e-3, 32, 1, 0.8, 301, 20, 16, 300, 500.0};
}

inline Profile desk_profile() {
    return {"desk", 50.0, 120.0, 200, 20, 32, 150, 1e-3, 32, 20, 0.8, 301, 20, 16, 300, 500.0};
}

inline Profile profile_by_name(std::string_view name) {
    if (name == "full") return full_profile();
    if (name == "desk") return desk_profile();
    throw std::invalid_argument("unknown profile '" + std::string(name) + "' (expected full or desk)");
}

}  // namespace honeypot
