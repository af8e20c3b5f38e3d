#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "honeypot/opcua/messages.hpp"
#include "honeypot/opcua/server.hpp"

namespace honeypot::opcua {

class ClientError : public std::runtime_error {
public:
    ClientError(std::uint32_t status, const std::string& what) : std::runtime_error(what), status_(status) {}
    /// Status carried by an ERR message or ServiceFault, 0 for transport failures.
    std::uint32_t status() const noexcept { return status_; }

private:
    std::uint32_t status_;
};

/// Moves whole frames between a client and a server.
class Transport {
public:
    virtual ~Transport() = default;
    virtual void send(std::span<const std::uint8_t> frame) = 0;
    /// Next complete frame; throws ClientError if the peer closed the connection.
    virtual std::vector<std::uint8_t> receive() = 0;
};

class TcpTransport final : public Transport {
public:
    TcpTransport(const std::string& host, std::uint16_t port, double timeout_seconds = 5.0);
    ~TcpTransport() override;
    void send(std::span<const std::uint8_t> frame) override;
    std::vector<std::uint8_t> receive() override;
    /// Raw bytes, for protocol-violation tests.
    void send_raw(std::span<const std::uint8_t> bytes) { send(bytes); }
    /// True if the server closed the socket (reads return EOF).
    bool peer_closed(double wait_seconds = 1.0);

private:
    int fd_ = -1;
    int timeout_ms_;
    std::vector<std::uint8_t> buffer_;
};

/// In-process transport driving a Connection directly.
class LoopbackTransport final : public Transport {
public:
    LoopbackTransport(ServerContext& context, std::string peer = "loopback");
    void send(std::span<const std::uint8_t> frame) override;
    std::vector<std::uint8_t> receive() override;
    Connection& connection() noexcept { return conn_; }

private:
    Connection conn_;
    std::deque<std::vector<std::uint8_t>> pending_;
};

/// AnonymousIdentityToken with policy id "anonymous".
ExtensionObject anonymous_identity();

/// Minimal synchronous client for conformance tests and the smoke client.
class Client {
public:
    explicit Client(std::unique_ptr<Transport> transport);

    Acknowledge hello(std::uint32_t buffer_size = kDefaultBufferSize, std::string endpoint_url = "opc.tcp://localhost");
    /// request_type 0 issues a channel, 1 renews its token.
    OpenSecureChannelResponse open_channel(std::uint32_t request_type = 0,
                                           std::string policy_uri = kSecurityPolicyNone);
    void close_channel();

    GetEndpointsResponse get_endpoints();
    CreateSessionResponse create_session(std::string name = "client");
    ActivateSessionResponse activate_session(ExtensionObject identity = anonymous_identity());
    CloseSessionResponse close_session();

    /// Forward references of `node`; a null reference type matches every reference.
    BrowseResult browse(const NodeId& node, NodeId reference_type = {});
    std::vector<DataValue> read(const std::vector<ReadValueId>& nodes);
    DataValue read_value(const NodeId& node);
    std::vector<StatusCode> write(const std::vector<WriteValue>& values);
    StatusCode write_value(const NodeId& node, Variant value);

    /// Sends any service request on the open channel and returns the raw
    /// response body (which may be a ServiceFault).
    ServiceBody call(ServiceBody request);

    /// Convenience: connect, hello, open, create and activate.
    void connect_session();

    std::uint32_t channel_id() const noexcept { return channel_id_; }
    std::uint32_t token_id() const noexcept { return token_id_; }
    const NodeId& auth_token() const noexcept { return auth_token_; }
    void set_auth_token(NodeId token) { auth_token_ = std::move(token); }
    Transport& transport() noexcept { return *transport_; }

private:
    RequestHeader next_header();
    Message exchange(const Message& message);
    template <typename T>
    T expect(ServiceBody body, const char* what);

    std::unique_ptr<Transport> transport_;
    std::uint32_t channel_id_ = 0;
    std::uint32_t token_id_ = 0;
    std::uint32_t sequence_ = 0;
    std::uint32_t request_id_ = 0;
    std::uint32_t handle_ = 0;
    NodeId auth_token_;
    std::uint32_t max_message_ = kMaxMessageSize;
};

}  // namespace honeypot::opcua
