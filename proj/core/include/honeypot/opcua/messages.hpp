#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <tuple>
#include <variant>
#include <vector>

#include "honeypot/opcua/codec.hpp"

namespace honeypot::opcua {

// Field lists drive the generic binary encoder; order is the wire order.
#define HONEYPOT_OPCUA_FIELDS(...)                                   \
    auto fields() const { return std::tie(__VA_ARGS__); }            \
    auto fields() { return std::tie(__VA_ARGS__); }

inline constexpr std::size_t kHeaderSize = 8;
inline constexpr std::uint32_t kDefaultBufferSize = 65536;
inline constexpr std::uint32_t kMaxMessageSize = 65536;
inline constexpr std::uint32_t kMinBufferSize = 8192;

inline constexpr const char* kSecurityPolicyNone = "http://opcfoundation.org/UA/SecurityPolicy#None";
inline constexpr const char* kTransportProfileBinary =
    "http://opcfoundation.org/UA-Profile/Transport/uatcp-uasc-uabinary";

namespace ids {
inline constexpr std::uint32_t RootFolder = 84;
inline constexpr std::uint32_t ObjectsFolder = 85;
inline constexpr std::uint32_t References = 31;
inline constexpr std::uint32_t HierarchicalReferences = 33;
inline constexpr std::uint32_t Organizes = 35;
inline constexpr std::uint32_t HasTypeDefinition = 40;
inline constexpr std::uint32_t HasComponent = 47;
inline constexpr std::uint32_t BaseObjectType = 58;
inline constexpr std::uint32_t FolderType = 61;
inline constexpr std::uint32_t BaseDataVariableType = 63;
inline constexpr std::uint32_t Double = 11;
inline constexpr std::uint32_t AnonymousIdentityToken = 321;
}  // namespace ids

namespace attr {
inline constexpr std::uint32_t NodeId = 1;
inline constexpr std::uint32_t NodeClass = 2;
inline constexpr std::uint32_t BrowseName = 3;
inline constexpr std::uint32_t DisplayName = 4;
inline constexpr std::uint32_t Description = 5;
inline constexpr std::uint32_t WriteMask = 6;
inline constexpr std::uint32_t UserWriteMask = 7;
inline constexpr std::uint32_t EventNotifier = 12;
inline constexpr std::uint32_t Value = 13;
inline constexpr std::uint32_t DataType = 14;
inline constexpr std::uint32_t ValueRank = 15;
inline constexpr std::uint32_t AccessLevel = 17;
inline constexpr std::uint32_t UserAccessLevel = 18;
}  // namespace attr

enum class NodeClass : std::uint32_t { Unspecified = 0, Object = 1, Variable = 2, ObjectType = 8 };

// ------------------------------------------------------------ transport

enum class MessageType { Hello, Acknowledge, Error, Open, Message, Close };

struct Hello {
    std::uint32_t protocol_version = 0;
    std::uint32_t receive_buffer_size = kDefaultBufferSize;
    std::uint32_t send_buffer_size = kDefaultBufferSize;
    std::uint32_t max_message_size = 0;
    std::uint32_t max_chunk_count = 0;
    String endpoint_url;
    HONEYPOT_OPCUA_FIELDS(protocol_version, receive_buffer_size, send_buffer_size, max_message_size, max_chunk_count,
                          endpoint_url)
    bool operator==(const Hello&) const = default;
};

struct Acknowledge {
    std::uint32_t protocol_version = 0;
    std::uint32_t receive_buffer_size = kDefaultBufferSize;
    std::uint32_t send_buffer_size = kDefaultBufferSize;
    std::uint32_t max_message_size = kMaxMessageSize;
    std::uint32_t max_chunk_count = 1;
    HONEYPOT_OPCUA_FIELDS(protocol_version, receive_buffer_size, send_buffer_size, max_message_size, max_chunk_count)
    bool operator==(const Acknowledge&) const = default;
};

struct ErrorMessage {
    StatusCode error;
    String reason;
    HONEYPOT_OPCUA_FIELDS(error, reason)
    bool operator==(const ErrorMessage&) const = default;
};

// ------------------------------------------------------------ common service structures

struct RequestHeader {
    NodeId authentication_token;
    DateTime timestamp;
    std::uint32_t request_handle = 0;
    std::uint32_t return_diagnostics = 0;
    String audit_entry_id;
    std::uint32_t timeout_hint = 0;
    ExtensionObject additional_header;
    HONEYPOT_OPCUA_FIELDS(authentication_token, timestamp, request_handle, return_diagnostics, audit_entry_id,
                          timeout_hint, additional_header)
    bool operator==(const RequestHeader&) const = default;
};

struct ResponseHeader {
    DateTime timestamp;
    std::uint32_t request_handle = 0;
    StatusCode service_result;
    DiagnosticInfo service_diagnostics;
    std::vector<String> string_table;
    ExtensionObject additional_header;
    HONEYPOT_OPCUA_FIELDS(timestamp, request_handle, service_result, service_diagnostics, string_table,
                          additional_header)
    bool operator==(const ResponseHeader&) const = default;
};

struct ApplicationDescription {
    String application_uri;
    String product_uri;
    LocalizedText application_name;
    std::uint32_t application_type = 0;  // 0 server, 1 client
    String gateway_server_uri;
    String discovery_profile_uri;
    std::vector<String> discovery_urls;
    HONEYPOT_OPCUA_FIELDS(application_uri, product_uri, application_name, application_type, gateway_server_uri,
                          discovery_profile_uri, discovery_urls)
    bool operator==(const ApplicationDescription&) const = default;
};

struct UserTokenPolicy {
    String policy_id;
    std::uint32_t token_type = 0;  // 0 anonymous
    String issued_token_type;
    String issuer_endpoint_url;
    String security_policy_uri;
    HONEYPOT_OPCUA_FIELDS(policy_id, token_type, issued_token_type, issuer_endpoint_url, security_policy_uri)
    bool operator==(const UserTokenPolicy&) const = default;
};

struct EndpointDescription {
    String endpoint_url;
    ApplicationDescription server;
    ByteString server_certificate;
    std::uint32_t security_mode = 1;  // None
    String security_policy_uri;
    std::vector<UserTokenPolicy> user_identity_tokens;
    String transport_profile_uri;
    std::uint8_t security_level = 0;
    HONEYPOT_OPCUA_FIELDS(endpoint_url, server, server_certificate, security_mode, security_policy_uri,
                          user_identity_tokens, transport_profile_uri, security_level)
    bool operator==(const EndpointDescription&) const = default;
};

struct SignatureData {
    String algorithm;
    ByteString signature;
    HONEYPOT_OPCUA_FIELDS(algorithm, signature)
    bool operator==(const SignatureData&) const = default;
};

struct SignedSoftwareCertificate {
    ByteString certificate_data;
    ByteString signature;
    HONEYPOT_OPCUA_FIELDS(certificate_data, signature)
    bool operator==(const SignedSoftwareCertificate&) const = default;
};

struct ChannelSecurityToken {
    std::uint32_t channel_id = 0;
    std::uint32_t token_id = 0;
    DateTime created_at;
    std::uint32_t revised_lifetime = 0;  // ms
    HONEYPOT_OPCUA_FIELDS(channel_id, token_id, created_at, revised_lifetime)
    bool operator==(const ChannelSecurityToken&) const = default;
};

struct ViewDescription {
    NodeId view_id;
    DateTime timestamp;
    std::uint32_t view_version = 0;
    HONEYPOT_OPCUA_FIELDS(view_id, timestamp, view_version)
    bool operator==(const ViewDescription&) const = default;
};

struct BrowseDescription {
    NodeId node_id;
    std::uint32_t browse_direction = 0;  // 0 forward, 1 inverse, 2 both
    NodeId reference_type_id;
    bool include_subtypes = true;
    std::uint32_t node_class_mask = 0;
    std::uint32_t result_mask = 0x3F;
    HONEYPOT_OPCUA_FIELDS(node_id, browse_direction, reference_type_id, include_subtypes, node_class_mask,
                          result_mask)
    bool operator==(const BrowseDescription&) const = default;
};

struct ReferenceDescription {
    NodeId reference_type_id;
    bool is_forward = true;
    ExpandedNodeId node_id;
    QualifiedName browse_name;
    LocalizedText display_name;
    std::uint32_t node_class = 0;
    ExpandedNodeId type_definition;
    HONEYPOT_OPCUA_FIELDS(reference_type_id, is_forward, node_id, browse_name, display_name, node_class,
                          type_definition)
    bool operator==(const ReferenceDescription&) const = default;
};

struct BrowseResult {
    StatusCode status;
    ByteString continuation_point;
    std::vector<ReferenceDescription> references;
    HONEYPOT_OPCUA_FIELDS(status, continuation_point, references)
    bool operator==(const BrowseResult&) const = default;
};

struct ReadValueId {
    NodeId node_id;
    std::uint32_t attribute_id = attr::Value;
    String index_range;
    QualifiedName data_encoding;
    HONEYPOT_OPCUA_FIELDS(node_id, attribute_id, index_range, data_encoding)
    bool operator==(const ReadValueId&) const = default;
};

struct WriteValue {
    NodeId node_id;
    std::uint32_t attribute_id = attr::Value;
    String index_range;
    DataValue value;
    HONEYPOT_OPCUA_FIELDS(node_id, attribute_id, index_range, value)
    bool operator==(const WriteValue&) const = default;
};

// ------------------------------------------------------------ services

struct OpenSecureChannelRequest {
    static constexpr std::uint32_t kTypeId = 446;
    RequestHeader header;
    std::uint32_t client_protocol_version = 0;
    std::uint32_t request_type = 0;  // 0 issue, 1 renew
    std::uint32_t security_mode = 1;
    ByteString client_nonce;
    std::uint32_t requested_lifetime = 3600000;
    HONEYPOT_OPCUA_FIELDS(header, client_protocol_version, request_type, security_mode, client_nonce,
                          requested_lifetime)
    bool operator==(const OpenSecureChannelRequest&) const = default;
};

struct OpenSecureChannelResponse {
    static constexpr std::uint32_t kTypeId = 449;
    ResponseHeader header;
    std::uint32_t server_protocol_version = 0;
    ChannelSecurityToken token;
    ByteString server_nonce;
    HONEYPOT_OPCUA_FIELDS(header, server_protocol_version, token, server_nonce)
    bool operator==(const OpenSecureChannelResponse&) const = default;
};

struct CloseSecureChannelRequest {
    static constexpr std::uint32_t kTypeId = 452;
    RequestHeader header;
    HONEYPOT_OPCUA_FIELDS(header)
    bool operator==(const CloseSecureChannelRequest&) const = default;
};

struct GetEndpointsRequest {
    static constexpr std::uint32_t kTypeId = 428;
    RequestHeader header;
    String endpoint_url;
    std::vector<String> locale_ids;
    std::vector<String> profile_uris;
    HONEYPOT_OPCUA_FIELDS(header, endpoint_url, locale_ids, profile_uris)
    bool operator==(const GetEndpointsRequest&) const = default;
};

struct GetEndpointsResponse {
    static constexpr std::uint32_t kTypeId = 431;
    ResponseHeader header;
    std::vector<EndpointDescription> endpoints;
    HONEYPOT_OPCUA_FIELDS(header, endpoints)
    bool operator==(const GetEndpointsResponse&) const = default;
};

struct CreateSessionRequest {
    static constexpr std::uint32_t kTypeId = 461;
    RequestHeader header;
    ApplicationDescription client_description;
    String server_uri;
    String endpoint_url;
    String session_name;
    ByteString client_nonce;
    ByteString client_certificate;
    double requested_session_timeout = 60000.0;
    std::uint32_t max_response_message_size = 0;
    HONEYPOT_OPCUA_FIELDS(header, client_description, server_uri, endpoint_url, session_name, client_nonce,
                          client_certificate, requested_session_timeout, max_response_message_size)
    bool operator==(const CreateSessionRequest&) const = default;
};

struct CreateSessionResponse {
    static constexpr std::uint32_t kTypeId = 464;
    ResponseHeader header;
    NodeId session_id;
    NodeId authentication_token;
    double revised_session_timeout = 0.0;
    ByteString server_nonce;
    ByteString server_certificate;
    std::vector<EndpointDescription> server_endpoints;
    std::vector<SignedSoftwareCertificate> server_software_certificates;
    SignatureData server_signature;
    std::uint32_t max_request_message_size = 0;
    HONEYPOT_OPCUA_FIELDS(header, session_id, authentication_token, revised_session_timeout, server_nonce,
                          server_certificate, server_endpoints, server_software_certificates, server_signature,
                          max_request_message_size)
    bool operator==(const CreateSessionResponse&) const = default;
};

struct ActivateSessionRequest {
    static constexpr std::uint32_t kTypeId = 467;
    RequestHeader header;
    SignatureData client_signature;
    std::vector<SignedSoftwareCertificate> client_software_certificates;
    std::vector<String> locale_ids;
    ExtensionObject user_identity_token;
    SignatureData user_token_signature;
    HONEYPOT_OPCUA_FIELDS(header, client_signature, client_software_certificates, locale_ids, user_identity_token,
                          user_token_signature)
    bool operator==(const ActivateSessionRequest&) const = default;
};

struct ActivateSessionResponse {
    static constexpr std::uint32_t kTypeId = 470;
    ResponseHeader header;
    ByteString server_nonce;
    std::vector<StatusCode> results;
    std::vector<DiagnosticInfo> diagnostic_infos;
    HONEYPOT_OPCUA_FIELDS(header, server_nonce, results, diagnostic_infos)
    bool operator==(const ActivateSessionResponse&) const = default;
};

struct CloseSessionRequest {
    static constexpr std::uint32_t kTypeId = 473;
    RequestHeader header;
    bool delete_subscriptions = true;
    HONEYPOT_OPCUA_FIELDS(header, delete_subscriptions)
    bool operator==(const CloseSessionRequest&) const = default;
};

struct CloseSessionResponse {
    static constexpr std::uint32_t kTypeId = 476;
    ResponseHeader header;
    HONEYPOT_OPCUA_FIELDS(header)
    bool operator==(const CloseSessionResponse&) const = default;
};

struct BrowseRequest {
    static constexpr std::uint32_t kTypeId = 527;
    RequestHeader header;
    ViewDescription view;
    std::uint32_t requested_max_references_per_node = 0;
    std::vector<BrowseDescription> nodes_to_browse;
    HONEYPOT_OPCUA_FIELDS(header, view, requested_max_references_per_node, nodes_to_browse)
    bool operator==(const BrowseRequest&) const = default;
};

struct BrowseResponse {
    static constexpr std::uint32_t kTypeId = 530;
    ResponseHeader header;
    std::vector<BrowseResult> results;
    std::vector<DiagnosticInfo> diagnostic_infos;
    HONEYPOT_OPCUA_FIELDS(header, results, diagnostic_infos)
    bool operator==(const BrowseResponse&) const = default;
};

struct ReadRequest {
    static constexpr std::uint32_t kTypeId = 631;
    RequestHeader header;
    double max_age = 0.0;
    std::uint32_t timestamps_to_return = 2;  // both
    std::vector<ReadValueId> nodes_to_read;
    HONEYPOT_OPCUA_FIELDS(header, max_age, timestamps_to_return, nodes_to_read)
    bool operator==(const ReadRequest&) const = default;
};

struct ReadResponse {
    static constexpr std::uint32_t kTypeId = 634;
    ResponseHeader header;
    std::vector<DataValue> results;
    std::vector<DiagnosticInfo> diagnostic_infos;
    HONEYPOT_OPCUA_FIELDS(header, results, diagnostic_infos)
    bool operator==(const ReadResponse&) const = default;
};

struct WriteRequest {
    static constexpr std::uint32_t kTypeId = 673;
    RequestHeader header;
    std::vector<WriteValue> nodes_to_write;
    HONEYPOT_OPCUA_FIELDS(header, nodes_to_write)
    bool operator==(const WriteRequest&) const = default;
};

struct WriteResponse {
    static constexpr std::uint32_t kTypeId = 676;
    ResponseHeader header;
    std::vector<StatusCode> results;
    std::vector<DiagnosticInfo> diagnostic_infos;
    HONEYPOT_OPCUA_FIELDS(header, results, diagnostic_infos)
    bool operator==(const WriteResponse&) const = default;
};

struct ServiceFault {
    static constexpr std::uint32_t kTypeId = 397;
    ResponseHeader header;
    HONEYPOT_OPCUA_FIELDS(header)
    bool operator==(const ServiceFault&) const = default;
};

/// A request whose type id we do not implement. Only the request header is
/// kept so the fault can echo its handle; the rest of the body is skipped.
struct UnsupportedRequest {
    std::uint32_t type_id = 0;
    RequestHeader header;
    bool operator==(const UnsupportedRequest&) const = default;
};

using ServiceBody =
    std::variant<OpenSecureChannelRequest, OpenSecureChannelResponse, CloseSecureChannelRequest, GetEndpointsRequest,
                 GetEndpointsResponse, CreateSessionRequest, CreateSessionResponse, ActivateSessionRequest,
                 ActivateSessionResponse, CloseSessionRequest, CloseSessionResponse, BrowseRequest, BrowseResponse,
                 ReadRequest, ReadResponse, WriteRequest, WriteResponse, ServiceFault, UnsupportedRequest>;

std::uint32_t service_type_id(const ServiceBody& body);

struct SecureMessage {
    MessageType type = MessageType::Message;  // Open, Message or Close
    std::uint32_t channel_id = 0;
    // asymmetric header (Open only)
    String policy_uri;
    ByteString sender_certificate;
    ByteString receiver_thumbprint;
    // symmetric header (Message / Close)
    std::uint32_t token_id = 0;
    std::uint32_t sequence_number = 0;
    std::uint32_t request_id = 0;
    ServiceBody body;
    bool operator==(const SecureMessage&) const = default;
};

using Message = std::variant<Hello, Acknowledge, ErrorMessage, SecureMessage>;

/// Complete frame including the 8-byte header. Throws DecodeError if the
/// message would exceed `max_size`.
std::vector<std::uint8_t> encode_message(const Message& message, std::uint32_t max_size = kMaxMessageSize);

/// Decodes exactly one complete frame.
Message decode_message(std::span<const std::uint8_t> frame, std::uint32_t max_size = kMaxMessageSize);

/// Total size announced by a frame header, or nullopt if fewer than 8 bytes
/// are buffered. Throws DecodeError on an unknown type code, a non-final
/// chunk flag or an out-of-range size.
std::optional<std::size_t> frame_length(std::span<const std::uint8_t> buffered,
                                        std::uint32_t max_size = kMaxMessageSize);

/// Status code carried by ERR for a given decode failure.
std::uint32_t error_status_for(const DecodeError& e);

}  // namespace honeypot::opcua
