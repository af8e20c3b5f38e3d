#include "honeypot/opcua/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <system_error>

#include "honeypot/opcua/status.hpp"

namespace honeypot::opcua {

namespace {

constexpr std::uint16_t kSessionNamespace = 1;
constexpr int kPollMillis = 50;

template <typename T>
T response_for(const RequestHeader& request, std::uint32_t service_result = status::Good) {
    T r;
    r.header.timestamp = datetime_now();
    r.header.request_handle = request.request_handle;
    r.header.service_result = {service_result};
    return r;
}

ServiceFault fault(const RequestHeader& request, std::uint32_t code) {
    return response_for<ServiceFault>(request, code);
}

const RequestHeader* request_header(const ServiceBody& body) {
    return std::visit(
        [](const auto& b) -> const RequestHeader* {
            if constexpr (requires { b.header.request_handle; b.header.authentication_token; }) {
                return &b.header;
            } else {
                return nullptr;
            }
        },
        body);
}

const char* service_name(const ServiceBody& body) {
    switch (body.index()) {
        case 0: return "OpenSecureChannel";
        case 2: return "CloseSecureChannel";
        case 3: return "GetEndpoints";
        case 5: return "CreateSession";
        case 7: return "ActivateSession";
        case 9: return "CloseSession";
        case 11: return "Browse";
        case 13: return "Read";
        case 15: return "Write";
        default: return "Unsupported";
    }
}

bool anonymous_identity(const ExtensionObject& token) {
    if (token.type_id.is_null() && token.encoding == 0) return true;
    return token.type_id == NodeId(0, ids::AnonymousIdentityToken);
}

}  // namespace

// ---------------------------------------------------------------- ServerContext

ServerContext::ServerContext(AddressSpace& space, IntrusionLog& log, ServerConfig config)
    : space_(space), log_(log), config_(std::move(config)), token_rng_(std::random_device{}()) {}

EndpointDescription ServerContext::endpoint() const {
    EndpointDescription e;
    e.endpoint_url = config_.endpoint_url;
    e.server.application_uri = config_.application_uri;
    e.server.product_uri = config_.product_uri;
    e.server.application_name = {"en", config_.application_name};
    e.server.application_type = 0;
    e.server.discovery_urls = {config_.endpoint_url};
    e.server_certificate = {std::nullopt};
    e.security_mode = 1;
    e.security_policy_uri = kSecurityPolicyNone;
    e.user_identity_tokens = {UserTokenPolicy{"anonymous", 0, std::nullopt, std::nullopt, std::nullopt}};
    e.transport_profile_uri = kTransportProfileBinary;
    e.security_level = 0;
    return e;
}

std::optional<ServerContext::Session> ServerContext::create_session(std::uint32_t channel_id, std::string name) {
    std::lock_guard lock(sessions_mutex_);
    if (sessions_.size() >= config_.max_sessions) return std::nullopt;
    std::uint32_t token = 0;
    do {
        token = static_cast<std::uint32_t>(token_rng_());
    } while (token == 0 || sessions_.count(token));
    Session s{++session_counter_, NodeId(kSessionNamespace, token), channel_id, false, std::move(name)};
    sessions_.emplace(token, s);
    return s;
}

std::optional<ServerContext::Session> ServerContext::find_session(const NodeId& auth_token) const {
    if (auth_token.ns != kSessionNamespace || !auth_token.is_numeric()) return std::nullopt;
    std::lock_guard lock(sessions_mutex_);
    const auto it = sessions_.find(auth_token.numeric());
    if (it == sessions_.end()) return std::nullopt;
    return it->second;
}

bool ServerContext::activate_session(const NodeId& auth_token, std::uint32_t channel_id) {
    if (auth_token.ns != kSessionNamespace || !auth_token.is_numeric()) return false;
    std::lock_guard lock(sessions_mutex_);
    const auto it = sessions_.find(auth_token.numeric());
    if (it == sessions_.end()) return false;
    it->second.activated = true;
    it->second.channel_id = channel_id;
    return true;
}

bool ServerContext::close_session(const NodeId& auth_token) {
    if (auth_token.ns != kSessionNamespace || !auth_token.is_numeric()) return false;
    std::lock_guard lock(sessions_mutex_);
    return sessions_.erase(auth_token.numeric()) > 0;
}

void ServerContext::drop_channel_sessions(std::uint32_t channel_id) {
    std::lock_guard lock(sessions_mutex_);
    std::erase_if(sessions_, [&](const auto& kv) { return kv.second.channel_id == channel_id; });
}

std::size_t ServerContext::session_count() const {
    std::lock_guard lock(sessions_mutex_);
    return sessions_.size();
}

ByteString ServerContext::random_nonce(std::size_t bytes) {
    std::lock_guard lock(sessions_mutex_);
    std::string out(bytes, '\0');
    for (auto& c : out) c = static_cast<char>(token_rng_() & 0xFF);
    return {out};
}

// ---------------------------------------------------------------- Connection

Connection::Connection(ServerContext& context, std::string peer) : ctx_(context), peer_(std::move(peer)) {
    limits_.receive_buffer_size = kDefaultBufferSize;
    limits_.send_buffer_size = kDefaultBufferSize;
    limits_.max_message_size = kMaxMessageSize;
}

Connection::~Connection() {
    if (channel_id_) ctx_.drop_channel_sessions(channel_id_);
}

void Connection::record(std::string op, std::uint32_t session, std::string node, std::string value,
                        std::uint32_t code) {
    ctx_.log().record({datetime_now(), session, std::move(op), std::move(node), std::move(value), code, peer_});
}

std::vector<std::vector<std::uint8_t>> Connection::on_bytes(std::span<const std::uint8_t> bytes) {
    Frames out;
    if (state_ == State::Closed) return out;
    buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
    std::size_t consumed = 0;
    while (state_ != State::Closed) {
        const auto pending = std::span<const std::uint8_t>(buffer_).subspan(consumed);
        try {
            const auto size = frame_length(pending, limits_.receive_buffer_size);
            if (!size || pending.size() < *size) break;
            auto message = decode_message(pending.first(*size), limits_.receive_buffer_size);
            consumed += *size;
            handle(std::move(message), out);
        } catch (const DecodeError& e) {
            fail(error_status_for(e), e.what(), out);
        }
    }
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(consumed));
    if (state_ == State::Closed) buffer_.clear();
    return out;
}

void Connection::fail(std::uint32_t code, const std::string& reason, Frames& out) {
    record("Error", 0, "", reason, code);
    out.push_back(encode_message(ErrorMessage{{code}, reason.substr(0, 256)}));
    state_ = State::Closed;
}

void Connection::send(SecureMessage message, Frames& out) {
    message.channel_id = channel_id_;
    message.sequence_number = ++send_sequence_;
    try {
        out.push_back(encode_message(message, limits_.send_buffer_size));
    } catch (const DecodeError&) {
        const auto* req = request_header(message.body);
        RequestHeader handle;
        if (!req) {
            // responses carry a ResponseHeader; recover its handle
            std::visit(
                [&](const auto& b) {
                    if constexpr (requires { b.header.service_result; }) handle.request_handle = b.header.request_handle;
                },
                message.body);
        }
        message.body = fault(handle, status::BadResponseTooLarge);
        out.push_back(encode_message(message, limits_.send_buffer_size));
    }
}

void Connection::handle(Message message, Frames& out) {
    if (auto* hello = std::get_if<Hello>(&message)) {
        on_hello(*hello, out);
        return;
    }
    auto* secure = std::get_if<SecureMessage>(&message);
    if (!secure || state_ == State::AwaitHello) {
        fail(status::BadTcpMessageTypeInvalid, "unexpected message type", out);
        return;
    }
    switch (secure->type) {
        case MessageType::Open: on_open(*secure, out); break;
        case MessageType::Close:
            record("CloseSecureChannel", 0, "", "", status::Good);
            if (channel_id_) ctx_.drop_channel_sessions(channel_id_);
            state_ = State::Closed;
            break;
        default: on_message(*secure, out); break;
    }
}

void Connection::on_hello(const Hello& hello, Frames& out) {
    if (state_ != State::AwaitHello) {
        fail(status::BadTcpMessageTypeInvalid, "repeated Hello", out);
        return;
    }
    record("Hello", 0, "", hello.endpoint_url.value_or(""), status::Good);
    if (hello.receive_buffer_size < kMinBufferSize || hello.send_buffer_size < kMinBufferSize) {
        fail(status::BadTcpInternalError, "buffer sizes below 8192", out);
        return;
    }
    if (hello.endpoint_url && hello.endpoint_url->size() > 4096) {
        fail(status::BadTcpEndpointUrlInvalid, "endpoint URL too long", out);
        return;
    }
    // our receive buffer is bounded by what the client sends, and vice versa
    limits_.protocol_version = 0;
    limits_.receive_buffer_size = std::min(hello.send_buffer_size, kDefaultBufferSize);
    limits_.send_buffer_size = std::min(hello.receive_buffer_size, kDefaultBufferSize);
    limits_.max_message_size = kMaxMessageSize;
    if (hello.max_message_size) limits_.send_buffer_size = std::min(limits_.send_buffer_size, hello.max_message_size);
    limits_.max_chunk_count = 1;
    out.push_back(encode_message(limits_));
    state_ = State::AwaitOpen;
}

void Connection::on_open(const SecureMessage& message, Frames& out) {
    const auto* req = std::get_if<OpenSecureChannelRequest>(&message.body);
    if (!req) {
        fail(status::BadDecodingError, "OPN without OpenSecureChannelRequest", out);
        return;
    }
    SecureMessage reply;
    reply.type = MessageType::Open;
    reply.policy_uri = kSecurityPolicyNone;
    reply.request_id = message.request_id;

    auto reject = [&](std::uint32_t code, const std::string& why) {
        record("OpenSecureChannel", 0, "", why, code);
        reply.body = fault(req->header, code);
        const auto saved = channel_id_;
        if (state_ != State::Open) channel_id_ = 0;
        send(std::move(reply), out);
        channel_id_ = saved;
    };

    if (message.policy_uri != std::optional<std::string>(kSecurityPolicyNone)) {
        reject(status::BadSecurityPolicyRejected, message.policy_uri.value_or("<null>"));
        return;
    }
    if (req->security_mode != 1) {
        reject(status::BadSecurityModeRejected, "mode " + std::to_string(req->security_mode));
        return;
    }
    if (req->request_type == 1) {
        if (state_ != State::Open || message.channel_id != channel_id_) {
            reject(status::BadSecureChannelIdInvalid, "renew on unknown channel");
            return;
        }
        previous_token_id_ = token_id_;
        ++token_id_;
    } else if (req->request_type == 0) {
        if (state_ == State::Open) {
            reject(status::BadSecureChannelIdInvalid, "channel already open");
            return;
        }
        channel_id_ = ctx_.next_channel_id();
        token_id_ = 1;
        state_ = State::Open;
    } else {
        reject(status::BadDecodingError, "request type " + std::to_string(req->request_type));
        return;
    }

    auto resp = response_for<OpenSecureChannelResponse>(req->header);
    resp.server_protocol_version = 0;
    resp.token.channel_id = channel_id_;
    resp.token.token_id = token_id_;
    resp.token.created_at = datetime_now();
    const std::uint32_t requested = req->requested_lifetime ? req->requested_lifetime : ctx_.config().max_token_lifetime_ms;
    resp.token.revised_lifetime = std::min(requested, ctx_.config().max_token_lifetime_ms);
    resp.server_nonce = {std::string()};
    record("OpenSecureChannel", 0, "", req->request_type == 1 ? "renew" : "issue", status::Good);
    reply.body = std::move(resp);
    send(std::move(reply), out);
}

void Connection::on_message(const SecureMessage& message, Frames& out) {
    if (state_ != State::Open || message.channel_id != channel_id_) {
        fail(status::BadTcpSecureChannelUnknown, "message on an unknown secure channel", out);
        return;
    }
    if (message.token_id != token_id_ && message.token_id != previous_token_id_) {
        fail(status::BadSecureChannelIdInvalid, "unknown security token", out);
        return;
    }
    SecureMessage reply;
    reply.type = MessageType::Message;
    reply.token_id = token_id_;
    reply.request_id = message.request_id;
    reply.body = dispatch(message.body);
    send(std::move(reply), out);
}

ServiceBody Connection::dispatch(const ServiceBody& request) {
    const RequestHeader* header = request_header(request);
    if (!header) return fault(RequestHeader{}, status::BadServiceUnsupported);

    if (std::holds_alternative<UnsupportedRequest>(request) ||
        std::holds_alternative<OpenSecureChannelRequest>(request) ||
        std::holds_alternative<CloseSecureChannelRequest>(request)) {
        record(service_name(request), 0, "", std::to_string(service_type_id(request)), status::BadServiceUnsupported);
        return fault(*header, status::BadServiceUnsupported);
    }

    if (const auto* req = std::get_if<GetEndpointsRequest>(&request)) {
        auto resp = response_for<GetEndpointsResponse>(*header);
        resp.endpoints = {ctx_.endpoint()};
        record("GetEndpoints", 0, "", req->endpoint_url.value_or(""), status::Good);
        return resp;
    }

    if (const auto* req = std::get_if<CreateSessionRequest>(&request)) {
        auto session = ctx_.create_session(channel_id_, req->session_name.value_or(""));
        if (!session) {
            record("CreateSession", 0, "", req->session_name.value_or(""), status::BadTooManySessions);
            return fault(*header, status::BadTooManySessions);
        }
        auto resp = response_for<CreateSessionResponse>(*header);
        resp.session_id = NodeId(kSessionNamespace, session->id);
        resp.authentication_token = session->auth_token;
        resp.revised_session_timeout = std::clamp(req->requested_session_timeout, 10000.0,
                                                  ctx_.config().max_session_timeout_ms);
        resp.server_nonce = ctx_.random_nonce(32);
        resp.server_certificate = {std::nullopt};
        resp.server_endpoints = {ctx_.endpoint()};
        resp.max_request_message_size = kMaxMessageSize;
        record("CreateSession", session->id, "", req->session_name.value_or(""), status::Good);
        return resp;
    }

    const auto session = ctx_.find_session(header->authentication_token);
    if (!session || session->channel_id != channel_id_) {
        record(service_name(request), 0, "", "", status::BadSessionIdInvalid);
        return fault(*header, status::BadSessionIdInvalid);
    }

    if (const auto* req = std::get_if<ActivateSessionRequest>(&request)) {
        if (!anonymous_identity(req->user_identity_token)) {
            record("ActivateSession", session->id, "", req->user_identity_token.type_id.to_string(),
                   status::BadIdentityTokenInvalid);
            return fault(*header, status::BadIdentityTokenInvalid);
        }
        ctx_.activate_session(header->authentication_token, channel_id_);
        auto resp = response_for<ActivateSessionResponse>(*header);
        resp.server_nonce = ctx_.random_nonce(32);
        record("ActivateSession", session->id, "", "anonymous", status::Good);
        return resp;
    }

    if (std::holds_alternative<CloseSessionRequest>(request)) {
        ctx_.close_session(header->authentication_token);
        record("CloseSession", session->id, "", "", status::Good);
        return response_for<CloseSessionResponse>(*header);
    }

    if (!session->activated) {
        record(service_name(request), session->id, "", "", status::BadSessionNotActivated);
        return fault(*header, status::BadSessionNotActivated);
    }

    auto check_count = [&](std::size_t n) -> std::uint32_t {
        if (n == 0) return status::BadNothingToDo;
        if (n > ctx_.config().max_operations) return status::BadTooManyOperations;
        return status::Good;
    };

    if (const auto* req = std::get_if<BrowseRequest>(&request)) {
        if (auto code = check_count(req->nodes_to_browse.size()); code != status::Good) return fault(*header, code);
        auto resp = response_for<BrowseResponse>(*header);
        for (const auto& d : req->nodes_to_browse) {
            resp.results.push_back(ctx_.space().browse(d));
            if (ctx_.config().log_reads) {
                record("Browse", session->id, d.node_id.to_string(), "", resp.results.back().status.code);
            }
        }
        return resp;
    }

    if (const auto* req = std::get_if<ReadRequest>(&request)) {
        if (auto code = check_count(req->nodes_to_read.size()); code != status::Good) return fault(*header, code);
        if (req->timestamps_to_return > 3) return fault(*header, status::BadTimestampsToReturnInvalid);
        if (!(req->max_age >= 0.0)) return fault(*header, status::BadMaxAgeInvalid);
        auto resp = response_for<ReadResponse>(*header);
        const DateTime now = datetime_now();
        const bool want_source = req->timestamps_to_return == 0 || req->timestamps_to_return == 2;
        const bool want_server = req->timestamps_to_return == 1 || req->timestamps_to_return == 2;
        for (const auto& r : req->nodes_to_read) {
            DataValue v = r.index_range ? DataValue{std::nullopt, StatusCode{status::BadIndexRangeInvalid}, std::nullopt, now}
                                        : ctx_.space().read_attribute(r.node_id, r.attribute_id, now);
            if (!want_source) v.source_timestamp.reset();
            if (!want_server) v.server_timestamp.reset();
            if (ctx_.config().log_reads) {
                record("Read", session->id, r.node_id.to_string(), "", v.status.value_or(StatusCode{}).code);
            }
            resp.results.push_back(std::move(v));
        }
        return resp;
    }

    if (const auto* req = std::get_if<WriteRequest>(&request)) {
        if (auto code = check_count(req->nodes_to_write.size()); code != status::Good) {
            record("Write", session->id, "", "", code);
            return fault(*header, code);
        }
        auto resp = response_for<WriteResponse>(*header);
        const DateTime now = datetime_now();
        for (const auto& w : req->nodes_to_write) {
            StatusCode code = w.index_range ? StatusCode{status::BadIndexRangeInvalid}
                                            : ctx_.space().write_value(w.node_id, w.attribute_id, w.value, now);
            const std::string value = w.value.value ? IntrusionLog::render(*w.value.value) : "";
            record("Write", session->id, w.node_id.to_string(), value, code.code);
            resp.results.push_back(code);
        }
        return resp;
    }

    // response types sent by a client
    record(service_name(request), session->id, "", std::to_string(service_type_id(request)),
           status::BadServiceUnsupported);
    return fault(*header, status::BadServiceUnsupported);
}

// ---------------------------------------------------------------- TcpServer

TcpServer::TcpServer(ServerContext& context, std::string host, std::uint16_t port)
    : ctx_(context), host_(std::move(host)), port_(port) {}

TcpServer::~TcpServer() { stop(); }

void TcpServer::start() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (listen_fd_ < 0) throw std::system_error(errno, std::generic_category(), "socket");
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port_);
    if (::inet_pton(AF_INET, host_.c_str(), &addr.sin_addr) != 1) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw std::system_error(EINVAL, std::generic_category(), "invalid listen address " + host_);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 16) < 0) {
        const int err = errno;
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw std::system_error(err, std::generic_category(), "bind " + host_ + ":" + std::to_string(port_));
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    bound_port_ = ntohs(addr.sin_port);
    acceptor_ = std::jthread([this](std::stop_token st) { accept_loop(st); });
}

void TcpServer::stop() {
    if (acceptor_.joinable()) {
        acceptor_.request_stop();
        acceptor_.join();
    }
    std::vector<Worker> workers;
    {
        std::lock_guard lock(workers_mutex_);
        workers.swap(workers_);
    }
    for (auto& w : workers) w.thread.request_stop();
    workers.clear();
    if (listen_fd_ >= 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
}

void TcpServer::accept_loop(std::stop_token stop) {
    while (!stop.stop_requested()) {
        pollfd pfd{listen_fd_, POLLIN, 0};
        if (::poll(&pfd, 1, kPollMillis) <= 0) continue;
        sockaddr_in peer{};
        socklen_t len = sizeof peer;
        const int fd = ::accept4(listen_fd_, reinterpret_cast<sockaddr*>(&peer), &len, SOCK_CLOEXEC);
        if (fd < 0) continue;
        const int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        char ip[INET_ADDRSTRLEN] = {};
        ::inet_ntop(AF_INET, &peer.sin_addr, ip, sizeof ip);
        std::string peer_name = std::string(ip) + ":" + std::to_string(ntohs(peer.sin_port));

        std::lock_guard lock(workers_mutex_);
        std::erase_if(workers_, [](const Worker& w) { return w.done->load(); });
        auto done = std::make_shared<std::atomic<bool>>(false);
        workers_.push_back({std::jthread([this, fd, peer_name, done](std::stop_token st) {
                               serve_connection(st, fd, peer_name);
                               done->store(true);
                           }),
                            done});
    }
}

void TcpServer::serve_connection(std::stop_token stop, int fd, std::string peer) {
    ++active_;
    {
        Connection conn(ctx_, std::move(peer));
        std::vector<std::uint8_t> buf(16384);
        bool open = true;
        while (open && !stop.stop_requested() && !conn.closed()) {
            pollfd pfd{fd, POLLIN, 0};
            const int ready = ::poll(&pfd, 1, kPollMillis);
            if (ready < 0 && errno != EINTR) break;
            if (ready <= 0) continue;
            const ssize_t n = ::recv(fd, buf.data(), buf.size(), 0);
            if (n <= 0) break;
            for (const auto& frame : conn.on_bytes(std::span(buf.data(), static_cast<std::size_t>(n)))) {
                std::size_t sent = 0;
                while (sent < frame.size()) {
                    const ssize_t w = ::send(fd, frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
                    if (w <= 0) {
                        open = false;
                        break;
                    }
                    sent += static_cast<std::size_t>(w);
                }
                if (!open) break;
            }
        }
    }
    ::shutdown(fd, SHUT_RDWR);
    ::close(fd);
    --active_;
}

}  // namespace honeypot::opcua
