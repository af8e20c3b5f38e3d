#include "honeypot/opcua/messages.hpp"

#include <array>
#include <cstring>
#include <string_view>
#include <utility>

#include "honeypot/opcua/status.hpp"

namespace honeypot::opcua {

namespace {

// Primitive overloads must be visible before the generic templates below.
void put(Encoder& e, std::uint8_t v) { e.u8(v); }
void put(Encoder& e, bool v) { e.boolean(v); }
void put(Encoder& e, std::uint32_t v) { e.u32(v); }
void put(Encoder& e, double v) { e.f64(v); }
void put(Encoder& e, const String& v) { e.string(v); }
void put(Encoder& e, const ByteString& v) { e.bytestring(v); }
void put(Encoder& e, DateTime v) { e.datetime(v); }
void put(Encoder& e, StatusCode v) { e.status(v); }
void put(Encoder& e, const NodeId& v) { e.node_id(v); }
void put(Encoder& e, const ExpandedNodeId& v) { e.expanded_node_id(v); }
void put(Encoder& e, const QualifiedName& v) { e.qualified_name(v); }
void put(Encoder& e, const LocalizedText& v) { e.localized_text(v); }
void put(Encoder& e, const ExtensionObject& v) { e.extension_object(v); }
void put(Encoder& e, const DiagnosticInfo& v) { e.diagnostic_info(v); }
void put(Encoder& e, const DataValue& v) { e.data_value(v); }

void get(Decoder& d, std::uint8_t& v) { v = d.u8(); }
void get(Decoder& d, bool& v) { v = d.boolean(); }
void get(Decoder& d, std::uint32_t& v) { v = d.u32(); }
void get(Decoder& d, double& v) { v = d.f64(); }
void get(Decoder& d, String& v) { v = d.string(); }
void get(Decoder& d, ByteString& v) { v = d.bytestring(); }
void get(Decoder& d, DateTime& v) { v = d.datetime(); }
void get(Decoder& d, StatusCode& v) { v = d.status(); }
void get(Decoder& d, NodeId& v) { v = d.node_id(); }
void get(Decoder& d, ExpandedNodeId& v) { v = d.expanded_node_id(); }
void get(Decoder& d, QualifiedName& v) { v = d.qualified_name(); }
void get(Decoder& d, LocalizedText& v) { v = d.localized_text(); }
void get(Decoder& d, ExtensionObject& v) { v = d.extension_object(); }
void get(Decoder& d, DiagnosticInfo& v) { v = d.diagnostic_info(); }
void get(Decoder& d, DataValue& v) { v = d.data_value(); }

template <typename T>
concept Structured = requires(T& t) { t.fields(); };

template <Structured T>
void put(Encoder& e, const T& v);
template <Structured T>
void get(Decoder& d, T& v);

template <typename T>
void put(Encoder& e, const std::vector<T>& items) {
    e.i32(static_cast<std::int32_t>(items.size()));
    for (const auto& x : items) put(e, x);
}

template <typename T>
void get(Decoder& d, std::vector<T>& items) {
    const std::size_t n = d.array_length();
    items.clear();
    items.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        T x{};
        get(d, x);
        items.push_back(std::move(x));
    }
}

template <Structured T>
void put(Encoder& e, const T& v) {
    std::apply([&](const auto&... f) { (put(e, f), ...); }, v.fields());
}

template <Structured T>
void get(Decoder& d, T& v) {
    std::apply([&](auto&... f) { (get(d, f), ...); }, v.fields());
}

constexpr std::array<std::string_view, 6> kTypeCodes = {"HEL", "ACK", "ERR", "OPN", "MSG", "CLO"};

MessageType type_from_code(std::span<const std::uint8_t> header) {
    const std::string_view code(reinterpret_cast<const char*>(header.data()), 3);
    for (std::size_t k = 0; k < kTypeCodes.size(); ++k) {
        if (kTypeCodes[k] == code) return static_cast<MessageType>(k);
    }
    throw DecodeError(DecodeError::Kind::InvalidEncodingByte, "unknown message type");
}

template <std::size_t I = 0>
ServiceBody decode_service(std::uint32_t type_id, Decoder& d) {
    if constexpr (I + 1 == std::variant_size_v<ServiceBody>) {
        UnsupportedRequest u;
        u.type_id = type_id;
        get(d, u.header);
        d.raw(d.remaining());
        return u;
    } else {
        using T = std::variant_alternative_t<I, ServiceBody>;
        if (T::kTypeId == type_id) {
            T body;
            get(d, body);
            return body;
        }
        return decode_service<I + 1>(type_id, d);
    }
}

}  // namespace

std::uint32_t service_type_id(const ServiceBody& body) {
    return std::visit(
        [](const auto& b) -> std::uint32_t {
            if constexpr (std::is_same_v<std::decay_t<decltype(b)>, UnsupportedRequest>) {
                return b.type_id;
            } else {
                return std::decay_t<decltype(b)>::kTypeId;
            }
        },
        body);
}

std::vector<std::uint8_t> encode_message(const Message& message, std::uint32_t max_size) {
    Encoder e;
    const auto type = std::visit(
        [](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Hello>) return MessageType::Hello;
            else if constexpr (std::is_same_v<T, Acknowledge>) return MessageType::Acknowledge;
            else if constexpr (std::is_same_v<T, ErrorMessage>) return MessageType::Error;
            else return m.type;
        },
        message);
    if (const auto* sm = std::get_if<SecureMessage>(&message);
        sm && sm->type != MessageType::Open && sm->type != MessageType::Message && sm->type != MessageType::Close) {
        throw DecodeError(DecodeError::Kind::InvalidValue, "secure message with a transport type code");
    }
    e.raw(kTypeCodes[static_cast<std::size_t>(type)]);
    e.u8('F');
    e.u32(0);  // patched below

    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, SecureMessage>) {
                e.u32(m.channel_id);
                if (m.type == MessageType::Open) {
                    e.string(m.policy_uri);
                    e.bytestring(m.sender_certificate);
                    e.bytestring(m.receiver_thumbprint);
                } else {
                    e.u32(m.token_id);
                }
                e.u32(m.sequence_number);
                e.u32(m.request_id);
                e.node_id(NodeId(0, service_type_id(m.body)));
                std::visit(
                    [&](const auto& body) {
                        if constexpr (std::is_same_v<std::decay_t<decltype(body)>, UnsupportedRequest>) {
                            put(e, body.header);
                        } else {
                            put(e, body);
                        }
                    },
                    m.body);
            } else {
                put(e, m);
            }
        },
        message);

    if (e.size() > max_size) {
        throw DecodeError(DecodeError::Kind::LimitExceeded,
                          "message of " + std::to_string(e.size()) + " bytes exceeds " + std::to_string(max_size));
    }
    e.patch_u32(4, static_cast<std::uint32_t>(e.size()));
    return e.take();
}

std::optional<std::size_t> frame_length(std::span<const std::uint8_t> buffered, std::uint32_t max_size) {
    if (buffered.size() < kHeaderSize) {
        // reject a bad type code as early as it is visible
        if (buffered.size() >= 3) type_from_code(buffered.first(3));
        return std::nullopt;
    }
    type_from_code(buffered.first(3));
    if (buffered[3] != 'F') {
        throw DecodeError(DecodeError::Kind::Unsupported, "only final chunks ('F') are supported");
    }
    Decoder d(buffered.subspan(4, 4));
    const std::uint32_t size = d.u32();
    if (size < kHeaderSize) throw DecodeError(DecodeError::Kind::InvalidValue, "message size below header size");
    if (size > max_size) {
        throw DecodeError(DecodeError::Kind::LimitExceeded, "message size " + std::to_string(size) + " exceeds limit");
    }
    return size;
}

Message decode_message(std::span<const std::uint8_t> frame, std::uint32_t max_size) {
    const auto size = frame_length(frame, max_size);
    if (!size) throw DecodeError(DecodeError::Kind::Truncated, "incomplete message header");
    if (*size != frame.size()) {
        throw DecodeError(frame.size() < *size ? DecodeError::Kind::Truncated : DecodeError::Kind::InvalidValue,
                          "size field " + std::to_string(*size) + " does not match frame length " +
                              std::to_string(frame.size()));
    }
    const MessageType type = type_from_code(frame.first(3));
    Decoder d(frame.subspan(kHeaderSize));
    Message out;
    switch (type) {
        case MessageType::Hello: {
            Hello m;
            get(d, m);
            out = m;
            break;
        }
        case MessageType::Acknowledge: {
            Acknowledge m;
            get(d, m);
            out = m;
            break;
        }
        case MessageType::Error: {
            ErrorMessage m;
            get(d, m);
            out = m;
            break;
        }
        default: {
            SecureMessage m;
            m.type = type;
            m.channel_id = d.u32();
            if (type == MessageType::Open) {
                m.policy_uri = d.string();
                m.sender_certificate = d.bytestring();
                m.receiver_thumbprint = d.bytestring();
            } else {
                m.token_id = d.u32();
            }
            m.sequence_number = d.u32();
            m.request_id = d.u32();
            const NodeId type_node = d.node_id();
            if (type_node.ns != 0 || !type_node.is_numeric()) {
                throw DecodeError(DecodeError::Kind::InvalidValue, "service type id must be numeric in namespace 0");
            }
            m.body = decode_service(type_node.numeric(), d);
            out = std::move(m);
        }
    }
    d.expect_end();
    return out;
}

std::uint32_t error_status_for(const DecodeError& e) {
    switch (e.kind()) {
        case DecodeError::Kind::LimitExceeded: return status::BadTcpMessageTooLarge;
        case DecodeError::Kind::InvalidEncodingByte: return status::BadTcpMessageTypeInvalid;
        default: return status::BadDecodingError;
    }
}

}  // namespace honeypot::opcua
