#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace honeypot::opcua {

class DecodeError : public std::runtime_error {
public:
    enum class Kind { Truncated, InvalidEncodingByte, InvalidValue, Unsupported, LimitExceeded };
    DecodeError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Null strings (length -1) are kept distinct from empty ones.
using String = std::optional<std::string>;

struct ByteString {
    std::optional<std::string> bytes;
    bool operator==(const ByteString&) const = default;
};

/// 100 ns ticks since 1601-01-01 UTC.
struct DateTime {
    std::int64_t ticks = 0;
    bool operator==(const DateTime&) const = default;
};

DateTime datetime_now();
DateTime datetime_from_unix(double seconds);
double datetime_to_unix(DateTime t);

struct StatusCode {
    std::uint32_t code = 0;
    bool good() const noexcept { return (code & 0xC0000000u) == 0; }
    bool operator==(const StatusCode&) const = default;
};

using Guid = std::array<std::uint8_t, 16>;

struct NodeId {
    std::uint16_t ns = 0;
    std::variant<std::uint32_t, std::string, Guid, ByteString> id = std::uint32_t{0};

    NodeId() = default;
    NodeId(std::uint16_t n, std::uint32_t numeric) : ns(n), id(numeric) {}
    NodeId(std::uint16_t n, std::string s) : ns(n), id(std::move(s)) {}

    bool is_null() const noexcept;
    bool is_numeric() const noexcept { return std::holds_alternative<std::uint32_t>(id); }
    std::uint32_t numeric() const { return std::get<std::uint32_t>(id); }
    std::string to_string() const;
    bool operator==(const NodeId&) const = default;
};

struct ExpandedNodeId {
    NodeId node;
    String namespace_uri;  // present only when flag 0x80 is set
    std::optional<std::uint32_t> server_index;
    bool operator==(const ExpandedNodeId&) const = default;
};

struct QualifiedName {
    std::uint16_t ns = 0;
    String name;
    bool operator==(const QualifiedName&) const = default;
};

struct LocalizedText {
    String locale;
    String text;
    bool operator==(const LocalizedText&) const = default;
};

/// Body kept opaque; `encoding` 0 = no body, 1 = ByteString body.
struct ExtensionObject {
    NodeId type_id;
    std::uint8_t encoding = 0;
    std::string body;
    bool operator==(const ExtensionObject&) const = default;
};

struct DiagnosticInfo {
    std::optional<std::int32_t> symbolic_id;
    std::optional<std::int32_t> namespace_uri;
    std::optional<std::int32_t> localized_text;
    std::optional<std::int32_t> locale;
    String additional_info;
    std::optional<StatusCode> inner_status;
    std::vector<DiagnosticInfo> inner;  // zero or one element
    bool operator==(const DiagnosticInfo&) const = default;
};

enum class VariantType : std::uint8_t {
    Null = 0,
    Boolean = 1,
    Byte = 3,
    Int32 = 6,
    UInt32 = 7,
    Int64 = 8,
    Float = 10,
    Double = 11,
    String = 12,
    DateTime = 13,
    ByteString = 15,
    NodeId = 17,
    StatusCode = 19,
    QualifiedName = 20,
    LocalizedText = 21,
};

/// Scalar variants only; arrays are rejected as Unsupported.
struct Variant {
    std::variant<std::monostate, bool, std::uint8_t, std::int32_t, std::uint32_t, std::int64_t, float, double, String,
                 DateTime, ByteString, NodeId, StatusCode, QualifiedName, LocalizedText>
        value;

    VariantType type() const noexcept;
    bool operator==(const Variant&) const = default;
};

struct DataValue {
    std::optional<Variant> value;
    std::optional<StatusCode> status;
    std::optional<DateTime> source_timestamp;
    std::optional<DateTime> server_timestamp;
    bool operator==(const DataValue&) const = default;
};

class Encoder {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void boolean(bool v) { u8(v ? 1 : 0); }
    void u16(std::uint16_t v);
    void u32(std::uint32_t v);
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void u64(std::uint64_t v);
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f32(float v);
    void f64(double v);
    void raw(std::span<const std::uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }
    void raw(std::string_view bytes);

    void string(const String& s);
    void bytestring(const ByteString& b) { string(b.bytes); }
    void datetime(DateTime t) { i64(t.ticks); }
    void status(StatusCode s) { u32(s.code); }
    void guid(const Guid& g) { raw(std::span<const std::uint8_t>(g)); }
    void node_id(const NodeId& n) { node_id_with_flags(n, 0); }
    void expanded_node_id(const ExpandedNodeId& n);
    void qualified_name(const QualifiedName& q);
    void localized_text(const LocalizedText& t);
    void extension_object(const ExtensionObject& x);
    void diagnostic_info(const DiagnosticInfo& d);
    void variant(const Variant& v);
    void data_value(const DataValue& v);

    /// Overwrites 4 bytes at `offset` (used to patch message sizes).
    void patch_u32(std::size_t offset, std::uint32_t v);

    std::size_t size() const noexcept { return buf_.size(); }
    std::vector<std::uint8_t>& bytes() noexcept { return buf_; }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
    void node_id_with_flags(const NodeId& n, std::uint8_t flags);
    std::vector<std::uint8_t> buf_;
};

class Decoder {
public:
    explicit Decoder(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8();
    bool boolean() { return u8() != 0; }
    std::uint16_t u16();
    std::uint32_t u32();
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    std::uint64_t u64();
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    float f32();
    double f64();
    std::span<const std::uint8_t> raw(std::size_t n);

    String string();
    ByteString bytestring() { return {string()}; }
    DateTime datetime() { return {i64()}; }
    StatusCode status() { return {u32()}; }
    Guid guid();
    NodeId node_id();
    ExpandedNodeId expanded_node_id();
    QualifiedName qualified_name();
    LocalizedText localized_text();
    ExtensionObject extension_object();
    DiagnosticInfo diagnostic_info() { return diagnostic_info_at(0); }
    Variant variant();
    DataValue data_value();

    /// Array length prefix; -1 (null) reads as 0. Bounded by the remaining
    /// bytes so hostile lengths cannot trigger large allocations.
    std::size_t array_length(std::size_t min_element_size = 1);

    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    std::size_t position() const noexcept { return pos_; }
    void expect_end() const;

private:
    NodeId node_id_body(std::uint8_t encoding);
    DiagnosticInfo diagnostic_info_at(int depth);
    void need(std::size_t n) const;

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

}  // namespace honeypot::opcua
