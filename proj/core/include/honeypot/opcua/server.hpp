#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "honeypot/opcua/address_space.hpp"
#include "honeypot/opcua/intrusion_log.hpp"
#include "honeypot/opcua/messages.hpp"

namespace honeypot::opcua {

struct ServerConfig {
    std::string endpoint_url = "opc.tcp://localhost:4840";
    std::string application_uri = "urn:cps:beam-controller";
    std::string product_uri = "urn:cps:beam-controller:server";
    std::string application_name = "Beam Controller";
    std::uint32_t max_token_lifetime_ms = 3600000;
    double max_session_timeout_ms = 3600000.0;
    std::size_t max_sessions = 100;
    std::size_t max_operations = 1000;
    bool log_reads = false;
};

/// State shared by every connection: address space, intrusion log, channel
/// counter and the session table.
class ServerContext {
public:
    ServerContext(AddressSpace& space, IntrusionLog& log, ServerConfig config = {});

    AddressSpace& space() noexcept { return space_; }
    IntrusionLog& log() noexcept { return log_; }
    const ServerConfig& config() const noexcept { return config_; }

    std::uint32_t next_channel_id() { return ++channel_counter_; }
    EndpointDescription endpoint() const;

    struct Session {
        std::uint32_t id = 0;
        NodeId auth_token;
        std::uint32_t channel_id = 0;
        bool activated = false;
        std::string name;
    };

    std::optional<Session> create_session(std::uint32_t channel_id, std::string name);
    std::optional<Session> find_session(const NodeId& auth_token) const;
    bool activate_session(const NodeId& auth_token, std::uint32_t channel_id);
    bool close_session(const NodeId& auth_token);
    void drop_channel_sessions(std::uint32_t channel_id);
    std::size_t session_count() const;

    ByteString random_nonce(std::size_t bytes);

private:
    AddressSpace& space_;
    IntrusionLog& log_;
    ServerConfig config_;
    std::atomic<std::uint32_t> channel_counter_{0};
    mutable std::mutex sessions_mutex_;
    std::map<std::uint32_t, Session> sessions_;  // keyed by authentication token value
    std::uint32_t session_counter_ = 0;
    std::mt19937_64 token_rng_;
};

/// Protocol state machine for one client connection, independent of the
/// socket layer: bytes in, response frames out.
class Connection {
public:
    Connection(ServerContext& context, std::string peer);
    ~Connection();
    Connection(const Connection&) = delete;
    Connection& operator=(const Connection&) = delete;

    /// Consumes received bytes (any fragmentation) and returns the frames to send.
    std::vector<std::vector<std::uint8_t>> on_bytes(std::span<const std::uint8_t> bytes);

    /// True once the connection must be torn down (after ERR or CLO).
    bool closed() const noexcept { return state_ == State::Closed; }
    std::uint32_t channel_id() const noexcept { return channel_id_; }
    const Acknowledge& limits() const noexcept { return limits_; }

private:
    enum class State { AwaitHello, AwaitOpen, Open, Closed };
    using Frames = std::vector<std::vector<std::uint8_t>>;

    void handle(Message message, Frames& out);
    void on_hello(const Hello& hello, Frames& out);
    void on_open(const SecureMessage& message, Frames& out);
    void on_message(const SecureMessage& message, Frames& out);
    void fail(std::uint32_t code, const std::string& reason, Frames& out);
    void send(SecureMessage message, Frames& out);
    ServiceBody dispatch(const ServiceBody& request);
    void record(std::string op, std::uint32_t session, std::string node, std::string value, std::uint32_t status);

    ServerContext& ctx_;
    std::string peer_;
    State state_ = State::AwaitHello;
    Acknowledge limits_;
    std::vector<std::uint8_t> buffer_;
    std::uint32_t channel_id_ = 0;
    std::uint32_t token_id_ = 0;
    std::uint32_t previous_token_id_ = 0;
    std::uint32_t send_sequence_ = 0;
};

/// POSIX TCP listener; one thread per accepted connection.
class TcpServer {
public:
    TcpServer(ServerContext& context, std::string host = "0.0.0.0", std::uint16_t port = 4840);
    ~TcpServer();
    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    /// Binds and starts accepting. Throws std::system_error on failure.
    void start();
    void stop();
    /// Bound port (useful when constructed with port 0).
    std::uint16_t port() const noexcept { return bound_port_; }
    std::size_t active_connections() const noexcept { return active_.load(); }

private:
    void accept_loop(std::stop_token stop);
    void serve_connection(std::stop_token stop, int fd, std::string peer);

    ServerContext& ctx_;
    std::string host_;
    std::uint16_t port_;
    std::uint16_t bound_port_ = 0;
    int listen_fd_ = -1;
    std::atomic<std::size_t> active_{0};
    struct Worker {
        std::jthread thread;
        std::shared_ptr<std::atomic<bool>> done;
    };
    std::mutex workers_mutex_;
    std::vector<Worker> workers_;
    std::jthread acceptor_;
};

}  // namespace honeypot::opcua
