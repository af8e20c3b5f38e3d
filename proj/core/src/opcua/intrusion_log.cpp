#include "honeypot/opcua/intrusion_log.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <stdexcept>

#include <json.hpp>

#include "honeypot/opcua/status.hpp"
#include "honeypot/timeseries.hpp"

namespace honeypot::opcua {

namespace {

std::string iso8601(DateTime t) {
    constexpr std::int64_t kTicksPerSecond = 10000000;
    constexpr std::int64_t kUnixEpochSeconds = 11644473600LL;
    std::int64_t secs = t.ticks / kTicksPerSecond;
    std::int64_t frac = t.ticks % kTicksPerSecond;
    if (frac < 0) {
        frac += kTicksPerSecond;
        --secs;
    }
    const std::time_t unix_secs = static_cast<std::time_t>(secs - kUnixEpochSeconds);
    std::tm tm{};
    gmtime_r(&unix_secs, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%07lldZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<long long>(frac));
    return buf;
}

template <typename... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

}  // namespace

IntrusionLog::IntrusionLog(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    file_.emplace(path, std::ios::app);
    if (!*file_) throw std::runtime_error("cannot open intrusion log " + path.string());
}

std::string IntrusionLog::render(const Variant& value) {
    return std::visit(overloaded{[](std::monostate) -> std::string { return "null"; },
                                 [](bool b) -> std::string { return b ? "true" : "false"; },
                                 [](double d) { return ts::format_double(d); },
                                 [](float f) { return ts::format_double(f); },
                                 [](const String& s) { return s ? *s : std::string("null"); },
                                 [](const ByteString& b) {
                                     return "<" + std::to_string(b.bytes ? b.bytes->size() : 0) + " bytes>";
                                 },
                                 [](const NodeId& n) { return n.to_string(); },
                                 [](DateTime t) { return iso8601(t); },
                                 [](StatusCode s) { return status::name(s.code); },
                                 [](const QualifiedName& q) { return q.name.value_or(""); },
                                 [](const LocalizedText& t) { return t.text.value_or(""); },
                                 [](auto integral) { return std::to_string(integral); }},
                      value.value);
}

std::string IntrusionLog::to_json_line(const IntrusionEvent& e) {
    nlohmann::ordered_json j;
    j["timestamp"] = iso8601(e.timestamp);
    j["session"] = e.session;
    j["op"] = e.op;
    j["node"] = e.node;
    j["value"] = e.value;
    j["status"] = status::name(e.status);
    j["peer"] = e.peer;
    // attacker-controlled strings may be invalid UTF-8
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

void IntrusionLog::record(IntrusionEvent event) {
    const std::string line = to_json_line(event);
    std::lock_guard lock(mutex_);
    if (file_) {
        *file_ << line << '\n';
        file_->flush();
    }
    ++total_;
    recent_.push_back(std::move(event));
    while (recent_.size() > memory_limit) recent_.pop_front();
}

std::vector<IntrusionEvent> IntrusionLog::recent() const {
    std::lock_guard lock(mutex_);
    return {recent_.begin(), recent_.end()};
}

std::size_t IntrusionLog::total() const {
    std::lock_guard lock(mutex_);
    return total_;
}

}  // namespace honeypot::opcua
