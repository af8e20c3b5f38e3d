#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "honeypot/opcua/messages.hpp"
#include "honeypot/rng.hpp"

namespace honeypot::test_support {

/// Fills any wire type with random but encodable content. Structured types
/// are walked through their fields() list.
class RandomOpcua {
public:
    explicit RandomOpcua(Rng& rng) : rng_(rng) {}

    opcua::Message message();
    opcua::ServiceBody service_body();

    void fill(bool& v) { v = rng_.below(2) != 0; }
    void fill(std::uint8_t& v) { v = static_cast<std::uint8_t>(rng_.next()); }
    void fill(std::uint16_t& v) { v = static_cast<std::uint16_t>(rng_.next()); }
    void fill(std::uint32_t& v) { v = small_or_big<std::uint32_t>(); }
    void fill(std::int32_t& v) { v = static_cast<std::int32_t>(small_or_big<std::uint32_t>()); }
    void fill(std::int64_t& v) { v = static_cast<std::int64_t>(rng_.next()); }
    void fill(double& v) { v = finite_double(); }
    void fill(float& v) { v = static_cast<float>(rng_.uniform(-1e6, 1e6)); }
    void fill(opcua::String& v);
    void fill(opcua::ByteString& v) { fill(v.bytes); }
    void fill(opcua::DateTime& v) { fill(v.ticks); }
    void fill(opcua::StatusCode& v) { fill(v.code); }
    void fill(opcua::Guid& v) {
        for (auto& b : v) fill(b);
    }
    void fill(opcua::NodeId& v);
    void fill(opcua::ExpandedNodeId& v);
    void fill(opcua::QualifiedName& v) {
        fill(v.ns);
        fill(v.name);
    }
    void fill(opcua::LocalizedText& v) {
        fill(v.locale);
        fill(v.text);
    }
    void fill(opcua::ExtensionObject& v);
    void fill(opcua::DiagnosticInfo& v);
    void fill(opcua::Variant& v);
    void fill(opcua::DataValue& v);

    template <typename T>
    void fill(std::vector<T>& v) {
        v.resize(static_cast<std::size_t>(rng_.below(4)));
        for (auto& x : v) fill(x);
    }

    template <typename T>
        requires requires(T& t) { t.fields(); }
    void fill(T& v) {
        std::apply([this](auto&... f) { (fill(f), ...); }, v.fields());
    }

private:
    template <typename U>
    U small_or_big() {
        return rng_.below(3) == 0 ? static_cast<U>(rng_.next()) : static_cast<U>(rng_.below(300));
    }
    double finite_double() {
        switch (rng_.below(4)) {
            case 0: return 0.0;
            case 1: return static_cast<double>(rng_.below(1000)) - 500.0;
            case 2: return rng_.uniform(-1.0, 1.0);
            default: {
                double d;
                do {
                    const auto bits = rng_.next();
                    std::memcpy(&d, &bits, sizeof d);
                } while (!std::isfinite(d));
                return d;
            }
        }
    }
    std::string text(std::size_t max_len);
    template <typename T>
    void optional_of(std::optional<T>& v) {
        if (rng_.below(2)) {
            T x{};
            fill(x);
            v = x;
        } else {
            v.reset();
        }
    }

    Rng& rng_;
    int depth_ = 0;
};

inline std::string RandomOpcua::text(std::size_t max_len) {
    std::string s(static_cast<std::size_t>(rng_.below(max_len + 1)), '\0');
    for (auto& ch : s) ch = static_cast<char>(rng_.next());
    return s;
}

inline void RandomOpcua::fill(opcua::String& v) {
    if (rng_.below(5) == 0) {
        v.reset();
    } else {
        v = text(24);
    }
}

inline void RandomOpcua::fill(opcua::NodeId& v) {
    fill(v.ns);
    switch (rng_.below(6)) {
        case 0: v.id = std::uint32_t(rng_.below(256)); break;
        case 1: v.id = std::uint32_t(rng_.below(65536)); break;
        case 2: v.id = static_cast<std::uint32_t>(rng_.next()); break;
        case 3: v.id = text(16); break;
        case 4: {
            opcua::Guid g{};
            fill(g);
            v.id = g;
            break;
        }
        default: v.id = opcua::ByteString{text(16)}; break;
    }
    if (rng_.below(3) == 0) v.ns = 0;
}

inline void RandomOpcua::fill(opcua::ExpandedNodeId& v) {
    fill(v.node);
    v.namespace_uri.reset();
    v.server_index.reset();
    if (rng_.below(3) == 0) v.namespace_uri = text(20);
    if (rng_.below(3) == 0) v.server_index = static_cast<std::uint32_t>(rng_.next());
}

inline void RandomOpcua::fill(opcua::ExtensionObject& v) {
    fill(v.type_id);
    v.encoding = static_cast<std::uint8_t>(rng_.below(2));
    v.body = v.encoding == 1 ? text(32) : std::string();
}

inline void RandomOpcua::fill(opcua::DiagnosticInfo& v) {
    v = {};
    auto maybe_i32 = [this](std::optional<std::int32_t>& x) {
        if (rng_.below(2)) x = static_cast<std::int32_t>(rng_.next());
    };
    maybe_i32(v.symbolic_id);
    maybe_i32(v.namespace_uri);
    maybe_i32(v.localized_text);
    maybe_i32(v.locale);
    if (rng_.below(2)) v.additional_info = text(16);
    if (rng_.below(2)) v.inner_status = opcua::StatusCode{static_cast<std::uint32_t>(rng_.next())};
    if (depth_ < 3 && rng_.below(3) == 0) {
        ++depth_;
        v.inner.emplace_back();
        fill(v.inner.back());
        --depth_;
    }
}

inline void RandomOpcua::fill(opcua::Variant& v) {
    switch (rng_.below(15)) {
        case 0: v.value = std::monostate{}; break;
        case 1: { bool x; fill(x); v.value = x; break; }
        case 2: { std::uint8_t x; fill(x); v.value = x; break; }
        case 3: { std::int32_t x; fill(x); v.value = x; break; }
        case 4: { std::uint32_t x; fill(x); v.value = x; break; }
        case 5: { std::int64_t x; fill(x); v.value = x; break; }
        case 6: { float x; fill(x); v.value = x; break; }
        case 7: { double x; fill(x); v.value = x; break; }
        case 8: { opcua::String x; fill(x); v.value = x; break; }
        case 9: { opcua::DateTime x; fill(x); v.value = x; break; }
        case 10: { opcua::ByteString x; fill(x); v.value = x; break; }
        case 11: { opcua::NodeId x; fill(x); v.value = x; break; }
        case 12: { opcua::StatusCode x; fill(x); v.value = x; break; }
        case 13: { opcua::QualifiedName x; fill(x); v.value = x; break; }
        default: { opcua::LocalizedText x; fill(x); v.value = x; break; }
    }
}

inline void RandomOpcua::fill(opcua::DataValue& v) {
    optional_of(v.value);
    optional_of(v.status);
    optional_of(v.source_timestamp);
    optional_of(v.server_timestamp);
}

inline opcua::ServiceBody RandomOpcua::service_body() {
    opcua::ServiceBody body;
    // Every alternative except UnsupportedRequest, which is decode-only.
    const auto index = rng_.below(std::variant_size_v<opcua::ServiceBody> - 1);
    [&]<std::size_t... I>(std::index_sequence<I...>) {
        ((index == I ? (body.emplace<I>(), fill(std::get<I>(body)), void()) : void()), ...);
    }(std::make_index_sequence<std::variant_size_v<opcua::ServiceBody> - 1>{});
    return body;
}

inline opcua::Message RandomOpcua::message() {
    switch (rng_.below(6)) {
        case 0: { opcua::Hello m; fill(m); return m; }
        case 1: { opcua::Acknowledge m; fill(m); return m; }
        case 2: { opcua::ErrorMessage m; fill(m); return m; }
        default: break;
    }
    opcua::SecureMessage m;
    const auto kind = rng_.below(3);
    m.type = kind == 0 ? opcua::MessageType::Open : kind == 1 ? opcua::MessageType::Message : opcua::MessageType::Close;
    fill(m.channel_id);
    fill(m.sequence_number);
    fill(m.request_id);
    if (m.type == opcua::MessageType::Open) {
        fill(m.policy_uri);
        fill(m.sender_certificate);
        fill(m.receiver_thumbprint);
    } else {
        fill(m.token_id);
    }
    m.body = service_body();
    return m;
}

}  // namespace honeypot::test_support
