#include "honeypot/opcua/client.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "honeypot/opcua/status.hpp"

namespace honeypot::opcua {

// ---------------------------------------------------------------- TcpTransport

TcpTransport::TcpTransport(const std::string& host, std::uint16_t port, double timeout_seconds)
    : timeout_ms_(static_cast<int>(timeout_seconds * 1000)) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res) {
        throw ClientError(0, "cannot resolve " + host);
    }
    fd_ = ::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC, res->ai_protocol);
    if (fd_ < 0 || ::connect(fd_, res->ai_addr, res->ai_addrlen) < 0) {
        const std::string err = std::strerror(errno);
        ::freeaddrinfo(res);
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
        throw ClientError(0, "connect " + host + ":" + std::to_string(port) + ": " + err);
    }
    ::freeaddrinfo(res);
    const int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

TcpTransport::~TcpTransport() {
    if (fd_ >= 0) ::close(fd_);
}

void TcpTransport::send(std::span<const std::uint8_t> frame) {
    std::size_t sent = 0;
    while (sent < frame.size()) {
        const ssize_t n = ::send(fd_, frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
        if (n <= 0) throw ClientError(0, "send failed");
        sent += static_cast<std::size_t>(n);
    }
}

std::vector<std::uint8_t> TcpTransport::receive() {
    for (;;) {
        if (buffer_.size() >= kHeaderSize) {
            std::uint32_t size = 0;
            for (int k = 0; k < 4; ++k) size |= static_cast<std::uint32_t>(buffer_[4 + k]) << (8 * k);
            if (size < kHeaderSize) throw ClientError(0, "invalid frame size from server");
            if (buffer_.size() >= size) {
                std::vector<std::uint8_t> frame(buffer_.begin(), buffer_.begin() + size);
                buffer_.erase(buffer_.begin(), buffer_.begin() + size);
                return frame;
            }
        }
        pollfd pfd{fd_, POLLIN, 0};
        const int ready = ::poll(&pfd, 1, timeout_ms_);
        if (ready == 0) throw ClientError(0, "receive timed out");
        if (ready < 0) {
            if (errno == EINTR) continue;
            throw ClientError(0, "poll failed");
        }
        std::uint8_t chunk[16384];
        const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
        if (n <= 0) throw ClientError(0, "connection closed by server");
        buffer_.insert(buffer_.end(), chunk, chunk + n);
    }
}

bool TcpTransport::peer_closed(double wait_seconds) {
    pollfd pfd{fd_, POLLIN, 0};
    if (::poll(&pfd, 1, static_cast<int>(wait_seconds * 1000)) <= 0) return false;
    std::uint8_t chunk[256];
    for (;;) {
        const ssize_t n = ::recv(fd_, chunk, sizeof chunk, MSG_DONTWAIT);
        if (n == 0) return true;
        if (n < 0) return errno == ECONNRESET;
        buffer_.insert(buffer_.end(), chunk, chunk + n);
    }
}

// ---------------------------------------------------------------- LoopbackTransport

LoopbackTransport::LoopbackTransport(ServerContext& context, std::string peer) : conn_(context, std::move(peer)) {}

void LoopbackTransport::send(std::span<const std::uint8_t> frame) {
    for (auto& f : conn_.on_bytes(frame)) pending_.push_back(std::move(f));
}

std::vector<std::uint8_t> LoopbackTransport::receive() {
    if (pending_.empty()) throw ClientError(0, conn_.closed() ? "connection closed by server" : "no response");
    auto f = std::move(pending_.front());
    pending_.pop_front();
    return f;
}

// ---------------------------------------------------------------- Client

ExtensionObject anonymous_identity() {
    Encoder e;
    e.string(std::string("anonymous"));
    const auto bytes = e.take();
    return {NodeId(0, ids::AnonymousIdentityToken), 1, std::string(bytes.begin(), bytes.end())};
}

Client::Client(std::unique_ptr<Transport> transport) : transport_(std::move(transport)) {}

Message Client::exchange(const Message& message) {
    transport_->send(encode_message(message, max_message_));
    auto reply = decode_message(transport_->receive(), kMaxMessageSize);
    if (const auto* err = std::get_if<ErrorMessage>(&reply)) {
        throw ClientError(err->error.code, "server error " + status::name(err->error.code) + ": " +
                                               err->reason.value_or(""));
    }
    return reply;
}

template <typename T>
T Client::expect(ServiceBody body, const char* what) {
    if (const auto* f = std::get_if<ServiceFault>(&body)) {
        const auto code = f->header.service_result.code;
        throw ClientError(code, std::string(what) + " failed: " + status::name(code));
    }
    if (auto* r = std::get_if<T>(&body)) return std::move(*r);
    throw ClientError(0, std::string(what) + ": unexpected response type");
}

RequestHeader Client::next_header() {
    RequestHeader h;
    h.authentication_token = auth_token_;
    h.timestamp = datetime_now();
    h.request_handle = ++handle_;
    h.timeout_hint = 10000;
    return h;
}

Acknowledge Client::hello(std::uint32_t buffer_size, std::string endpoint_url) {
    Hello h;
    h.receive_buffer_size = buffer_size;
    h.send_buffer_size = buffer_size;
    h.endpoint_url = std::move(endpoint_url);
    auto reply = exchange(h);
    const auto* ack = std::get_if<Acknowledge>(&reply);
    if (!ack) throw ClientError(0, "expected ACK");
    max_message_ = ack->receive_buffer_size;
    return *ack;
}

OpenSecureChannelResponse Client::open_channel(std::uint32_t request_type, std::string policy_uri) {
    OpenSecureChannelRequest req;
    req.header = next_header();
    req.request_type = request_type;
    req.client_nonce = {std::string()};
    SecureMessage m;
    m.type = MessageType::Open;
    m.channel_id = channel_id_;
    m.policy_uri = std::move(policy_uri);
    m.sequence_number = ++sequence_;
    m.request_id = ++request_id_;
    m.body = req;
    auto reply = exchange(m);
    auto* sm = std::get_if<SecureMessage>(&reply);
    if (!sm) throw ClientError(0, "expected OPN response");
    auto resp = expect<OpenSecureChannelResponse>(sm->body, "OpenSecureChannel");
    channel_id_ = resp.token.channel_id;
    token_id_ = resp.token.token_id;
    return resp;
}

void Client::close_channel() {
    SecureMessage m;
    m.type = MessageType::Close;
    m.channel_id = channel_id_;
    m.token_id = token_id_;
    m.sequence_number = ++sequence_;
    m.request_id = ++request_id_;
    m.body = CloseSecureChannelRequest{next_header()};
    transport_->send(encode_message(m, max_message_));
}

ServiceBody Client::call(ServiceBody request) {
    SecureMessage m;
    m.type = MessageType::Message;
    m.channel_id = channel_id_;
    m.token_id = token_id_;
    m.sequence_number = ++sequence_;
    m.request_id = ++request_id_;
    m.body = std::move(request);
    auto reply = exchange(m);
    auto* sm = std::get_if<SecureMessage>(&reply);
    if (!sm) throw ClientError(0, "expected MSG response");
    if (sm->request_id != m.request_id) throw ClientError(0, "response request id mismatch");
    return std::move(sm->body);
}

GetEndpointsResponse Client::get_endpoints() {
    GetEndpointsRequest req;
    req.header = next_header();
    return expect<GetEndpointsResponse>(call(req), "GetEndpoints");
}

CreateSessionResponse Client::create_session(std::string name) {
    CreateSessionRequest req;
    req.header = next_header();
    req.client_description.application_uri = "urn:honeypot:test-client";
    req.client_description.application_name = {"en", "test client"};
    req.client_description.application_type = 1;
    req.session_name = std::move(name);
    req.client_nonce = {std::string(32, '\x5a')};
    req.max_response_message_size = kMaxMessageSize;
    auto resp = expect<CreateSessionResponse>(call(req), "CreateSession");
    auth_token_ = resp.authentication_token;
    return resp;
}

ActivateSessionResponse Client::activate_session(ExtensionObject identity) {
    ActivateSessionRequest req;
    req.header = next_header();
    req.locale_ids = {std::string("en")};
    req.user_identity_token = std::move(identity);
    return expect<ActivateSessionResponse>(call(req), "ActivateSession");
}

CloseSessionResponse Client::close_session() {
    CloseSessionRequest req;
    req.header = next_header();
    auto resp = expect<CloseSessionResponse>(call(req), "CloseSession");
    auth_token_ = {};
    return resp;
}

BrowseResult Client::browse(const NodeId& node, NodeId reference_type) {
    BrowseRequest req;
    req.header = next_header();
    BrowseDescription d;
    d.node_id = node;
    d.reference_type_id = std::move(reference_type);
    d.include_subtypes = true;
    req.nodes_to_browse = {d};
    auto resp = expect<BrowseResponse>(call(req), "Browse");
    if (resp.results.size() != 1) throw ClientError(0, "Browse: expected one result");
    return std::move(resp.results.front());
}

std::vector<DataValue> Client::read(const std::vector<ReadValueId>& nodes) {
    ReadRequest req;
    req.header = next_header();
    req.nodes_to_read = nodes;
    auto resp = expect<ReadResponse>(call(req), "Read");
    if (resp.results.size() != nodes.size()) throw ClientError(0, "Read: result count mismatch");
    return std::move(resp.results);
}

DataValue Client::read_value(const NodeId& node) {
    ReadValueId r;
    r.node_id = node;
    return read({r}).front();
}

std::vector<StatusCode> Client::write(const std::vector<WriteValue>& values) {
    WriteRequest req;
    req.header = next_header();
    req.nodes_to_write = values;
    auto resp = expect<WriteResponse>(call(req), "Write");
    if (resp.results.size() != values.size()) throw ClientError(0, "Write: result count mismatch");
    return std::move(resp.results);
}

StatusCode Client::write_value(const NodeId& node, Variant value) {
    WriteValue w;
    w.node_id = node;
    w.value.value = std::move(value);
    return write({w}).front();
}

void Client::connect_session() {
    hello();
    open_channel();
    create_session();
    activate_session();
}

}  // namespace honeypot::opcua
