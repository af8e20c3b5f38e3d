#include "honeypot/opcua/codec.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <sstream>

namespace honeypot::opcua {

namespace {

constexpr std::int64_t kUnixEpochTicks = 116444736000000000LL;
constexpr int kMaxDiagnosticDepth = 8;

template <typename... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

}  // namespace

DateTime datetime_now() {
    const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count();
    return {kUnixEpochTicks + ns / 100};
}

DateTime datetime_from_unix(double seconds) {
    return {kUnixEpochTicks + static_cast<std::int64_t>(std::llround(seconds * 1e7))};
}

double datetime_to_unix(DateTime t) { return static_cast<double>(t.ticks - kUnixEpochTicks) / 1e7; }

bool NodeId::is_null() const noexcept {
    if (ns != 0) return false;
    return std::visit(overloaded{[](std::uint32_t v) { return v == 0; },
                                 [](const std::string& s) { return s.empty(); },
                                 [](const Guid& g) {
                                     for (auto b : g)
                                         if (b) return false;
                                     return true;
                                 },
                                 [](const ByteString& b) { return !b.bytes || b.bytes->empty(); }},
                      id);
}

std::string NodeId::to_string() const {
    std::ostringstream out;
    if (ns) out << "ns=" << ns << ';';
    std::visit(overloaded{[&](std::uint32_t v) { out << "i=" << v; },
                          [&](const std::string& s) { out << "s=" << s; },
                          [&](const Guid& g) {
                              out << "g=" << std::hex << std::setfill('0');
                              for (auto b : g) out << std::setw(2) << static_cast<int>(b);
                          },
                          [&](const ByteString& b) {
                              out << "b=" << std::hex << std::setfill('0');
                              if (b.bytes)
                                  for (unsigned char c : *b.bytes) out << std::setw(2) << static_cast<int>(c);
                          }},
               id);
    return out.str();
}

VariantType Variant::type() const noexcept {
    static constexpr VariantType kTypes[] = {
        VariantType::Null,     VariantType::Boolean,    VariantType::Byte,       VariantType::Int32,
        VariantType::UInt32,   VariantType::Int64,      VariantType::Float,      VariantType::Double,
        VariantType::String,   VariantType::DateTime,   VariantType::ByteString, VariantType::NodeId,
        VariantType::StatusCode, VariantType::QualifiedName, VariantType::LocalizedText};
    return kTypes[value.index()];
}

// ---------------------------------------------------------------- Encoder

void Encoder::u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v));
    u8(static_cast<std::uint8_t>(v >> 8));
}

void Encoder::u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) u8(static_cast<std::uint8_t>(v >> (8 * k)));
}

void Encoder::u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) u8(static_cast<std::uint8_t>(v >> (8 * k)));
}

void Encoder::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
void Encoder::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void Encoder::raw(std::string_view bytes) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(bytes.data());
    buf_.insert(buf_.end(), p, p + bytes.size());
}

void Encoder::string(const String& s) {
    if (!s) {
        i32(-1);
        return;
    }
    i32(static_cast<std::int32_t>(s->size()));
    raw(*s);
}

void Encoder::node_id_with_flags(const NodeId& n, std::uint8_t flags) {
    std::visit(overloaded{[&](std::uint32_t v) {
                              if (n.ns == 0 && v <= 0xFF) {
                                  u8(0x00 | flags);
                                  u8(static_cast<std::uint8_t>(v));
                              } else if (n.ns <= 0xFF && v <= 0xFFFF) {
                                  u8(0x01 | flags);
                                  u8(static_cast<std::uint8_t>(n.ns));
                                  u16(static_cast<std::uint16_t>(v));
                              } else {
                                  u8(0x02 | flags);
                                  u16(n.ns);
                                  u32(v);
                              }
                          },
                          [&](const std::string& s) {
                              u8(0x03 | flags);
                              u16(n.ns);
                              string(s);
                          },
                          [&](const Guid& g) {
                              u8(0x04 | flags);
                              u16(n.ns);
                              guid(g);
                          },
                          [&](const ByteString& b) {
                              u8(0x05 | flags);
                              u16(n.ns);
                              bytestring(b);
                          }},
               n.id);
}

void Encoder::expanded_node_id(const ExpandedNodeId& n) {
    std::uint8_t flags = 0;
    if (n.namespace_uri) flags |= 0x80;
    if (n.server_index) flags |= 0x40;
    node_id_with_flags(n.node, flags);
    if (n.namespace_uri) string(n.namespace_uri);
    if (n.server_index) u32(*n.server_index);
}

void Encoder::qualified_name(const QualifiedName& q) {
    u16(q.ns);
    string(q.name);
}

void Encoder::localized_text(const LocalizedText& t) {
    u8(static_cast<std::uint8_t>((t.locale ? 0x01 : 0) | (t.text ? 0x02 : 0)));
    if (t.locale) string(t.locale);
    if (t.text) string(t.text);
}

void Encoder::extension_object(const ExtensionObject& x) {
    node_id(x.type_id);
    u8(x.encoding);
    if (x.encoding != 0) string(x.body);
}

void Encoder::diagnostic_info(const DiagnosticInfo& d) {
    std::uint8_t mask = 0;
    if (d.symbolic_id) mask |= 0x01;
    if (d.namespace_uri) mask |= 0x02;
    if (d.localized_text) mask |= 0x04;
    if (d.locale) mask |= 0x08;
    if (d.additional_info) mask |= 0x10;
    if (d.inner_status) mask |= 0x20;
    if (!d.inner.empty()) mask |= 0x40;
    u8(mask);
    if (d.symbolic_id) i32(*d.symbolic_id);
    if (d.namespace_uri) i32(*d.namespace_uri);
    if (d.locale) i32(*d.locale);
    if (d.localized_text) i32(*d.localized_text);
    if (d.additional_info) string(d.additional_info);
    if (d.inner_status) status(*d.inner_status);
    if (!d.inner.empty()) diagnostic_info(d.inner.front());
}

void Encoder::variant(const Variant& v) {
    u8(static_cast<std::uint8_t>(v.type()));
    std::visit(overloaded{[](std::monostate) {},
                          [&](bool b) { boolean(b); },
                          [&](std::uint8_t b) { u8(b); },
                          [&](std::int32_t x) { i32(x); },
                          [&](std::uint32_t x) { u32(x); },
                          [&](std::int64_t x) { i64(x); },
                          [&](float x) { f32(x); },
                          [&](double x) { f64(x); },
                          [&](const String& s) { string(s); },
                          [&](DateTime t) { datetime(t); },
                          [&](const ByteString& b) { bytestring(b); },
                          [&](const NodeId& n) { node_id(n); },
                          [&](StatusCode s) { status(s); },
                          [&](const QualifiedName& q) { qualified_name(q); },
                          [&](const LocalizedText& t) { localized_text(t); }},
               v.value);
}

void Encoder::data_value(const DataValue& v) {
    std::uint8_t mask = 0;
    if (v.value) mask |= 0x01;
    if (v.status) mask |= 0x02;
    if (v.source_timestamp) mask |= 0x04;
    if (v.server_timestamp) mask |= 0x08;
    u8(mask);
    if (v.value) variant(*v.value);
    if (v.status) status(*v.status);
    if (v.source_timestamp) datetime(*v.source_timestamp);
    if (v.server_timestamp) datetime(*v.server_timestamp);
}

void Encoder::patch_u32(std::size_t offset, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) buf_.at(offset + k) = static_cast<std::uint8_t>(v >> (8 * k));
}

// ---------------------------------------------------------------- Decoder

void Decoder::need(std::size_t n) const {
    if (n > remaining()) {
        throw DecodeError(DecodeError::Kind::Truncated,
                          "need " + std::to_string(n) + " bytes at offset " + std::to_string(pos_) + ", have " +
                              std::to_string(remaining()));
    }
}

std::uint8_t Decoder::u8() {
    need(1);
    return data_[pos_++];
}

std::uint16_t Decoder::u16() {
    need(2);
    const std::uint16_t v = static_cast<std::uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
}

std::uint32_t Decoder::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(data_[pos_ + k]) << (8 * k);
    pos_ += 4;
    return v;
}

std::uint64_t Decoder::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(data_[pos_ + k]) << (8 * k);
    pos_ += 8;
    return v;
}

float Decoder::f32() { return std::bit_cast<float>(u32()); }
double Decoder::f64() { return std::bit_cast<double>(u64()); }

std::span<const std::uint8_t> Decoder::raw(std::size_t n) {
    need(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

String Decoder::string() {
    const std::int32_t len = i32();
    if (len == -1) return std::nullopt;
    if (len < -1) throw DecodeError(DecodeError::Kind::InvalidValue, "negative string length");
    const auto bytes = raw(static_cast<std::size_t>(len));
    return std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

Guid Decoder::guid() {
    Guid g;
    const auto bytes = raw(16);
    std::copy(bytes.begin(), bytes.end(), g.begin());
    return g;
}

NodeId Decoder::node_id_body(std::uint8_t encoding) {
    NodeId n;
    switch (encoding) {
        case 0x00:
            n.id = std::uint32_t{u8()};
            break;
        case 0x01:
            n.ns = u8();
            n.id = std::uint32_t{u16()};
            break;
        case 0x02:
            n.ns = u16();
            n.id = u32();
            break;
        case 0x03: {
            n.ns = u16();
            auto s = string();
            if (!s) throw DecodeError(DecodeError::Kind::InvalidValue, "null string NodeId");
            n.id = std::move(*s);
            break;
        }
        case 0x04:
            n.ns = u16();
            n.id = guid();
            break;
        case 0x05: {
            n.ns = u16();
            auto b = bytestring();
            if (!b.bytes) throw DecodeError(DecodeError::Kind::InvalidValue, "null opaque NodeId");
            n.id = std::move(b);
            break;
        }
        default:
            throw DecodeError(DecodeError::Kind::InvalidEncodingByte,
                              "NodeId encoding byte " + std::to_string(encoding));
    }
    return n;
}

NodeId Decoder::node_id() {
    const std::uint8_t encoding = u8();
    if (encoding & 0xC0) throw DecodeError(DecodeError::Kind::InvalidEncodingByte, "expanded flags on a NodeId");
    return node_id_body(encoding);
}

ExpandedNodeId Decoder::expanded_node_id() {
    const std::uint8_t encoding = u8();
    ExpandedNodeId out;
    out.node = node_id_body(encoding & 0x3F);
    if (encoding & 0x80) {
        out.namespace_uri = string();
        if (!out.namespace_uri) throw DecodeError(DecodeError::Kind::InvalidValue, "null namespace URI");
    }
    if (encoding & 0x40) out.server_index = u32();
    return out;
}

QualifiedName Decoder::qualified_name() {
    QualifiedName q;
    q.ns = u16();
    q.name = string();
    return q;
}

LocalizedText Decoder::localized_text() {
    const std::uint8_t mask = u8();
    if (mask & ~0x03) throw DecodeError(DecodeError::Kind::InvalidEncodingByte, "LocalizedText mask");
    LocalizedText t;
    if (mask & 0x01) {
        t.locale = string();
        if (!t.locale) throw DecodeError(DecodeError::Kind::InvalidValue, "null locale with mask bit set");
    }
    if (mask & 0x02) {
        t.text = string();
        if (!t.text) throw DecodeError(DecodeError::Kind::InvalidValue, "null text with mask bit set");
    }
    return t;
}

ExtensionObject Decoder::extension_object() {
    ExtensionObject x;
    x.type_id = node_id();
    x.encoding = u8();
    if (x.encoding == 0) return x;
    if (x.encoding > 2) throw DecodeError(DecodeError::Kind::InvalidEncodingByte, "ExtensionObject encoding");
    auto body = string();
    if (!body) throw DecodeError(DecodeError::Kind::InvalidValue, "null ExtensionObject body");
    x.body = std::move(*body);
    return x;
}

DiagnosticInfo Decoder::diagnostic_info_at(int depth) {
    if (depth > kMaxDiagnosticDepth) throw DecodeError(DecodeError::Kind::LimitExceeded, "DiagnosticInfo nesting");
    const std::uint8_t mask = u8();
    if (mask & 0x80) throw DecodeError(DecodeError::Kind::InvalidEncodingByte, "DiagnosticInfo mask");
    DiagnosticInfo d;
    if (mask & 0x01) d.symbolic_id = i32();
    if (mask & 0x02) d.namespace_uri = i32();
    if (mask & 0x08) d.locale = i32();
    if (mask & 0x04) d.localized_text = i32();
    if (mask & 0x10) {
        d.additional_info = string();
        if (!d.additional_info) throw DecodeError(DecodeError::Kind::InvalidValue, "null additional info");
    }
    if (mask & 0x20) d.inner_status = status();
    if (mask & 0x40) d.inner.push_back(diagnostic_info_at(depth + 1));
    return d;
}

Variant Decoder::variant() {
    const std::uint8_t encoding = u8();
    if (encoding & 0xC0) throw DecodeError(DecodeError::Kind::Unsupported, "array variants are not supported");
    Variant v;
    switch (static_cast<VariantType>(encoding)) {
        case VariantType::Null: break;
        case VariantType::Boolean: v.value = boolean(); break;
        case VariantType::Byte: v.value = u8(); break;
        case VariantType::Int32: v.value = i32(); break;
        case VariantType::UInt32: v.value = u32(); break;
        case VariantType::Int64: v.value = i64(); break;
        case VariantType::Float: v.value = f32(); break;
        case VariantType::Double: v.value = f64(); break;
        case VariantType::String: v.value = string(); break;
        case VariantType::DateTime: v.value = datetime(); break;
        case VariantType::ByteString: v.value = bytestring(); break;
        case VariantType::NodeId: v.value = node_id(); break;
        case VariantType::StatusCode: v.value = status(); break;
        case VariantType::QualifiedName: v.value = qualified_name(); break;
        case VariantType::LocalizedText: v.value = localized_text(); break;
        default:
            throw DecodeError(DecodeError::Kind::Unsupported, "variant type " + std::to_string(encoding));
    }
    return v;
}

DataValue Decoder::data_value() {
    const std::uint8_t mask = u8();
    if (mask & ~0x0F) throw DecodeError(DecodeError::Kind::Unsupported, "DataValue picoseconds are not supported");
    DataValue v;
    if (mask & 0x01) v.value = variant();
    if (mask & 0x02) v.status = status();
    if (mask & 0x04) v.source_timestamp = datetime();
    if (mask & 0x08) v.server_timestamp = datetime();
    return v;
}

std::size_t Decoder::array_length(std::size_t min_element_size) {
    const std::int32_t n = i32();
    if (n == -1) return 0;
    if (n < -1) throw DecodeError(DecodeError::Kind::InvalidValue, "negative array length");
    const auto count = static_cast<std::size_t>(n);
    if (count > remaining() / std::max<std::size_t>(min_element_size, 1)) {
        throw DecodeError(DecodeError::Kind::Truncated, "array length exceeds message size");
    }
    return count;
}

void Decoder::expect_end() const {
    if (remaining() != 0) {
        throw DecodeError(DecodeError::Kind::InvalidValue, std::to_string(remaining()) + " trailing bytes");
    }
}

}  // namespace honeypot::opcua
