#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <exception>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <stop_token>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "honeypot/clock.hpp"
#include "honeypot/generator.hpp"
#include "honeypot/opcua/address_space.hpp"
#include "honeypot/opcua/intrusion_log.hpp"
#include "honeypot/opcua/server.hpp"
#include "honeypot/sim/plant.hpp"

namespace honeypot::runtime {

class RuntimeError : public std::runtime_error {
public:
    enum class Kind { SeedTooShort, SeedSchemaMismatch, InvalidConfig, Startup };
    RuntimeError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Bounded blocking FIFO between producer and consumer.
class SegmentQueue {
public:
    explicit SegmentQueue(std::size_t capacity = 4);

    /// Blocks while full. Returns false if the queue was stopped or closed.
    bool push(gen::Segment segment);
    /// Blocks while empty. nullopt once stopped, or closed and drained.
    std::optional<gen::Segment> pop();
    std::optional<gen::Segment> try_pop();

    /// No further pushes; queued segments can still be popped.
    void close();
    /// Wakes every waiter; pending segments are discarded.
    void stop();

    bool closed() const;
    bool stopped() const;
    std::size_t size() const;
    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t high_water() const;

private:
    mutable std::mutex mutex_;
    std::condition_variable not_empty_;
    std::condition_variable not_full_;
    std::deque<gen::Segment> items_;
    std::size_t capacity_;
    std::size_t high_water_ = 0;
    bool closed_ = false;
    bool stopped_ = false;
};

struct CsvSeed {
    std::filesystem::path path;
};

struct SimulatorSeed {
    std::uint64_t seed = 42;
    std::optional<std::filesystem::path> config;  // plant config file; defaults if empty
};

using SeedSource = std::variant<CsvSeed, SimulatorSeed>;

/// Last L frames of the source, normalized with `scaler` (L x 8).
Matrix init_lookback(const SeedSource& source, std::size_t lookback, double rate_hz, const ts::ScalerParams& scaler);
Matrix init_lookback(const ts::Dataset& source, std::size_t lookback, const ts::ScalerParams& scaler);

/// Produces segment `sequence`.
using SegmentFn = std::function<gen::Segment(std::uint64_t sequence)>;

/// Generation step backed by the composite: keeps a private look-back that
/// each generated block is appended to.
SegmentFn composite_source(const gen::CompositeGenerator& gen, Matrix lookback);

/// Generates and pushes until the queue refuses a push or `stop` is
/// requested. A generation failure stops the queue and is rethrown.
void producer_loop(const SegmentFn& next, SegmentQueue& queue, std::stop_token stop);

class Publisher {
public:
    virtual ~Publisher() = default;
    /// One row of the eight variables; `t` is the monotonic publish time.
    virtual void publish(std::span<const double> row, double t) = 0;
    virtual void underrun(double /*t*/, double /*starved_for*/) {}
};

/// Writes rows into the address space with a wall-clock source timestamp
/// and logs underruns to the intrusion log.
class AddressSpacePublisher final : public Publisher {
public:
    AddressSpacePublisher(opcua::AddressSpace& space, opcua::IntrusionLog* log = nullptr)
        : space_(space), log_(log) {}
    void publish(std::span<const double> row, double t) override;
    void underrun(double t, double starved_for) override;

private:
    opcua::AddressSpace& space_;
    opcua::IntrusionLog* log_;
};

struct ConsumerStats {
    std::atomic<std::uint64_t> rows{0};
    std::atomic<std::uint64_t> segments{0};
    std::atomic<std::uint64_t> underruns{0};
    std::atomic<std::uint64_t> order_violations{0};

    /// Publish times of the most recent rows (bounded ring).
    std::vector<double> recent_times() const;
    double median_interval() const;
    void note_time(double t);

    std::size_t ring_capacity = 1 << 16;

private:
    mutable std::mutex mutex_;
    std::vector<double> ring_;
    std::size_t next_ = 0;
};

struct ConsumerOptions {
    double rate_hz = 500.0;
    /// Underrun threshold: starvation longer than this many segment periods.
    double underrun_periods = 2.0;
};

/// Pops segments and publishes one row every 1/rate seconds against absolute
/// deadlines t0 + k/rate. Returns when `stop` is requested, the queue is
/// stopped, or the queue is closed and drained.
void consumer_loop(SegmentQueue& queue, Publisher& sink, Clock& clock, const ConsumerOptions& options,
                   std::stop_token stop, ConsumerStats* stats = nullptr);

struct RuntimeConfig {
    std::filesystem::path manifest;
    SeedSource seed = SimulatorSeed{};
    double publish_rate_hz = 500.0;
    std::size_t queue_capacity = 4;
    std::string host = "0.0.0.0";
    std::uint16_t port = 4840;
    std::filesystem::path intrusion_log;  // empty: memory only
    bool log_reads = false;
    bool parallel_models = true;
    /// Reserved: feed Target writes back into the look-back. Not implemented.
    bool inject_target_writes = false;
};

/// FNV-1a 64 over the manifest and every model file it references.
std::uint64_t manifest_hash(const std::filesystem::path& manifest);

/// Running decoy: producer, consumer and protocol listener.
class Honeypot {
public:
    explicit Honeypot(RuntimeConfig config, std::shared_ptr<Clock> clock = std::make_shared<SteadyClock>());
    ~Honeypot();

    /// Loads the composite, seeds the look-back, binds the port and starts all roles.
    void start();
    /// Idempotent; joins every thread.
    void stop();

    std::string status_line() const;
    std::uint16_t port() const;
    const ConsumerStats& stats() const noexcept { return stats_; }
    opcua::AddressSpace& space() noexcept { return space_; }
    opcua::IntrusionLog& log() noexcept { return *log_; }
    const gen::CompositeGenerator& generator() const { return *gen_; }
    std::uint64_t segments_produced() const noexcept { return produced_.load(); }
    /// Failure raised by the producer, if any.
    std::exception_ptr producer_error() const;

private:
    RuntimeConfig config_;
    std::shared_ptr<Clock> clock_;
    opcua::AddressSpace space_;
    std::unique_ptr<opcua::IntrusionLog> log_;
    std::unique_ptr<opcua::ServerContext> context_;
    std::unique_ptr<opcua::TcpServer> server_;
    std::unique_ptr<gen::CompositeGenerator> gen_;
    std::unique_ptr<SegmentQueue> queue_;
    std::unique_ptr<AddressSpacePublisher> publisher_;
    ConsumerStats stats_;
    std::atomic<std::uint64_t> produced_{0};
    std::uint64_t hash_ = 0;
    mutable std::mutex error_mutex_;
    std::exception_ptr producer_error_;
    std::jthread producer_;
    std::jthread consumer_;
    bool started_ = false;
};

}  // namespace honeypot::runtime
