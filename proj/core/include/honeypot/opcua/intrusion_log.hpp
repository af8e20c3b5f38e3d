#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "honeypot/opcua/codec.hpp"

namespace honeypot::opcua {

struct IntrusionEvent {
    DateTime timestamp;
    std::uint32_t session = 0;  // 0 when no session is involved
    std::string op;             // Hello, OpenSecureChannel, CreateSession, ActivateSession, CloseSession, Write, ...
    std::string node;           // NodeId text form, empty if not applicable
    std::string value;          // textual rendering of the written value
    std::uint32_t status = 0;
    std::string peer;
};

/// Append-only line-delimited JSON record of client activity. Every line is
/// flushed as it is written. The most recent events are also kept in memory.
class IntrusionLog {
public:
    IntrusionLog() = default;
    explicit IntrusionLog(const std::filesystem::path& path);

    void record(IntrusionEvent event);

    /// Most recent events, oldest first (bounded to `memory_limit`).
    std::vector<IntrusionEvent> recent() const;
    std::size_t total() const;

    static std::string to_json_line(const IntrusionEvent& event);
    static std::string render(const Variant& value);

    std::size_t memory_limit = 10000;

private:
    mutable std::mutex mutex_;
    std::optional<std::ofstream> file_;
    std::deque<IntrusionEvent> recent_;
    std::size_t total_ = 0;
};

}  // namespace honeypot::opcua
