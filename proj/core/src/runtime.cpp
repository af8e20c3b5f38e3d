#include "honeypot/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "honeypot/opcua/status.hpp"

namespace honeypot::runtime {

// ---------------------------------------------------------------- SegmentQueue

SegmentQueue::SegmentQueue(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw RuntimeError(RuntimeError::Kind::InvalidConfig, "queue capacity must be >= 1");
}

bool SegmentQueue::push(gen::Segment segment) {
    std::unique_lock lock(mutex_);
    not_full_.wait(lock, [&] { return stopped_ || closed_ || items_.size() < capacity_; });
    if (stopped_ || closed_) return false;
    items_.push_back(std::move(segment));
    high_water_ = std::max(high_water_, items_.size());
    not_empty_.notify_one();
    return true;
}

std::optional<gen::Segment> SegmentQueue::pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return stopped_ || closed_ || !items_.empty(); });
    if (stopped_ || items_.empty()) return std::nullopt;
    auto s = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return s;
}

std::optional<gen::Segment> SegmentQueue::try_pop() {
    std::lock_guard lock(mutex_);
    if (stopped_ || items_.empty()) return std::nullopt;
    auto s = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return s;
}

void SegmentQueue::close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
}

void SegmentQueue::stop() {
    std::lock_guard lock(mutex_);
    stopped_ = true;
    items_.clear();
    not_empty_.notify_all();
    not_full_.notify_all();
}

bool SegmentQueue::closed() const {
    std::lock_guard lock(mutex_);
    return closed_;
}

bool SegmentQueue::stopped() const {
    std::lock_guard lock(mutex_);
    return stopped_;
}

std::size_t SegmentQueue::size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
}

std::size_t SegmentQueue::high_water() const {
    std::lock_guard lock(mutex_);
    return high_water_;
}

// ---------------------------------------------------------------- seeding

Matrix init_lookback(const ts::Dataset& source, std::size_t lookback, const ts::ScalerParams& scaler) {
    if (lookback == 0) throw RuntimeError(RuntimeError::Kind::InvalidConfig, "look-back length must be >= 1");
    if (source.size() < lookback) {
        throw RuntimeError(RuntimeError::Kind::SeedTooShort, "seed provides " + std::to_string(source.size()) +
                                                                 " samples, look-back needs " +
                                                                 std::to_string(lookback));
    }
    return scaler.normalize(ts::replicated_block(source, source.size() - lookback, lookback));
}

Matrix init_lookback(const SeedSource& source, std::size_t lookback, double rate_hz, const ts::ScalerParams& scaler) {
    if (const auto* csv = std::get_if<CsvSeed>(&source)) {
        ts::Dataset ds;
        try {
            ds = ts::read_csv(csv->path, rate_hz);
        } catch (const ts::CsvError& e) {
            if (e.kind() == ts::CsvError::Kind::IoFailure) throw RuntimeError(RuntimeError::Kind::Startup, e.what());
            throw RuntimeError(RuntimeError::Kind::SeedSchemaMismatch, e.what());
        }
        if (ds.size() >= 2 && std::abs(ds.rate_hz - rate_hz) > 1e-6 * rate_hz) {
            std::ostringstream msg;
            msg << csv->path.string() << " is sampled at " << ds.rate_hz << " Hz, the model expects " << rate_hz
                << " Hz";
            throw RuntimeError(RuntimeError::Kind::SeedSchemaMismatch, msg.str());
        }
        return init_lookback(ds, lookback, scaler);
    }
    const auto& sim_seed = std::get<SimulatorSeed>(source);
    auto [params, schedule] = sim_seed.config ? sim::load_sim_config(*sim_seed.config)
                                              : std::pair{sim::PlantParams{}, sim::SequenceSchedule::default_cycle()};
    // one full cycle first so the seed does not start in the rest state
    const double duration = schedule.cycle_duration() + static_cast<double>(lookback + 1) / rate_hz;
    const auto ds = sim::run_cycle(params, schedule, duration, rate_hz, sim_seed.seed);
    return init_lookback(ds, lookback, scaler);
}

// ---------------------------------------------------------------- producer

SegmentFn composite_source(const gen::CompositeGenerator& gen, Matrix lookback) {
    auto window = std::make_shared<Matrix>(std::move(lookback));
    return [&gen, window](std::uint64_t sequence) {
        Matrix normalized = gen.next_normalized(*window);
        gen::advance_window(*window, normalized);
        return gen::Segment{gen.scaler().denormalize(normalized), sequence};
    };
}

void producer_loop(const SegmentFn& next, SegmentQueue& queue, std::stop_token stop) {
    std::stop_callback wake(stop, [&] { queue.stop(); });
    try {
        for (std::uint64_t seq = 0; !stop.stop_requested(); ++seq) {
            if (!queue.push(next(seq))) break;
        }
    } catch (...) {
        queue.stop();
        throw;
    }
}

// ---------------------------------------------------------------- consumer

void AddressSpacePublisher::publish(std::span<const double> row, double) {
    space_.publish(row, opcua::datetime_now());
}

void AddressSpacePublisher::underrun(double, double starved_for) {
    if (!log_) return;
    std::ostringstream value;
    value << "queue empty for " << std::fixed << std::setprecision(3) << starved_for << " s; holding last values";
    log_->record({opcua::datetime_now(), 0, "Underrun", "", value.str(), opcua::status::Good, "runtime"});
}

void ConsumerStats::note_time(double t) {
    std::lock_guard lock(mutex_);
    if (ring_.size() < ring_capacity) {
        ring_.push_back(t);
    } else {
        ring_[next_] = t;
        next_ = (next_ + 1) % ring_capacity;
    }
}

std::vector<double> ConsumerStats::recent_times() const {
    std::lock_guard lock(mutex_);
    std::vector<double> out;
    out.reserve(ring_.size());
    for (std::size_t k = 0; k < ring_.size(); ++k) out.push_back(ring_[(next_ + k) % ring_.size()]);
    return out;
}

double ConsumerStats::median_interval() const {
    const auto times = recent_times();
    if (times.size() < 2) return 0.0;
    std::vector<double> gaps(times.size() - 1);
    for (std::size_t k = 1; k < times.size(); ++k) gaps[k - 1] = times[k] - times[k - 1];
    const auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
    std::nth_element(gaps.begin(), mid, gaps.end());
    if (gaps.size() % 2) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(gaps.begin(), mid);
    return 0.5 * (lower + upper);
}

void consumer_loop(SegmentQueue& queue, Publisher& sink, Clock& clock, const ConsumerOptions& options,
                   std::stop_token stop, ConsumerStats* stats) {
    if (!(options.rate_hz > 0.0)) throw RuntimeError(RuntimeError::Kind::InvalidConfig, "publish rate must be > 0");
    const double period = 1.0 / options.rate_hz;
    const double t0 = clock.now();
    std::uint64_t tick = 0;
    std::optional<gen::Segment> current;
    std::size_t row = 0;
    std::optional<std::uint64_t> last_sequence;
    std::optional<std::uint64_t> starving_since;  // tick
    bool underrun_reported = false;
    std::size_t segment_rows = 0;

    while (!stop.stop_requested()) {
        const double deadline = t0 + static_cast<double>(tick) * period;
        clock.sleep_until(deadline);

        if (!current || row >= current->values.rows()) {
            current = queue.try_pop();
            row = 0;
            if (current) {
                if (last_sequence && current->sequence <= *last_sequence && stats) ++stats->order_violations;
                last_sequence = current->sequence;
                segment_rows = current->values.rows();
                starving_since.reset();
                underrun_reported = false;
                if (stats) ++stats->segments;
            }
        }

        if (current && row < current->values.rows()) {
            const double t = clock.now();
            sink.publish(current->values.row(row), t);
            ++row;
            if (stats) {
                ++stats->rows;
                stats->note_time(t);
            }
        } else {
            if (queue.stopped() || (queue.closed() && queue.size() == 0)) break;
            if (!starving_since) starving_since = tick;
            // counted in whole ticks so the threshold is not subject to rounding
            const double starved_ticks = static_cast<double>(tick - *starving_since);
            const double threshold = options.underrun_periods * static_cast<double>(std::max<std::size_t>(segment_rows, 1));
            if (!underrun_reported && segment_rows > 0 && starved_ticks > threshold) {
                sink.underrun(deadline, starved_ticks * period);
                underrun_reported = true;
                if (stats) ++stats->underruns;
            }
        }

        ++tick;
        // after a long stall (suspend, debugger) resynchronise instead of bursting
        const double lag = clock.now() - (t0 + static_cast<double>(tick) * period);
        if (lag > 10 * period) tick = static_cast<std::uint64_t>(std::ceil((clock.now() - t0) / period));
    }
}

// ---------------------------------------------------------------- Honeypot

std::uint64_t manifest_hash(const std::filesystem::path& manifest) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw RuntimeError(RuntimeError::Kind::Startup, "cannot read " + p.string());
        char buf[65536];
        while (in.read(buf, sizeof buf) || in.gcount() > 0) {
            for (std::streamsize k = 0; k < in.gcount(); ++k) {
                h ^= static_cast<unsigned char>(buf[k]);
                h *= 0x100000001b3ULL;
            }
        }
    };
    mix(manifest);
    for (const auto& f : gen::read_manifest(manifest).model_files) mix(manifest.parent_path() / f);
    return h;
}

Honeypot::Honeypot(RuntimeConfig config, std::shared_ptr<Clock> clock)
    : config_(std::move(config)), clock_(std::move(clock)) {}

Honeypot::~Honeypot() { stop(); }

void Honeypot::start() {
    if (started_) return;
    if (!(config_.publish_rate_hz > 0.0)) {
        throw RuntimeError(RuntimeError::Kind::InvalidConfig, "publish rate must be > 0");
    }
    if (config_.inject_target_writes) {
        throw RuntimeError(RuntimeError::Kind::InvalidConfig, "look-back injection of Target writes is not implemented");
    }
    try {
        auto loaded = gen::load_composite(config_.manifest);
        hash_ = manifest_hash(config_.manifest);
        gen_ = std::make_unique<gen::CompositeGenerator>(std::move(loaded.models), loaded.manifest.scaler,
                                                         gen::GeneratorOptions{false, config_.parallel_models});
        Matrix lookback = init_lookback(config_.seed, gen_->lookback(), loaded.manifest.rate_hz, gen_->scaler());

        // the decoy shows plausible values before the first segment arrives
        const Matrix last = gen_->scaler().denormalize(lookback);
        space_.publish(last.row(last.rows() - 1), opcua::datetime_now());

        log_ = config_.intrusion_log.empty() ? std::make_unique<opcua::IntrusionLog>()
                                             : std::make_unique<opcua::IntrusionLog>(config_.intrusion_log);
        opcua::ServerConfig sc;
        sc.endpoint_url = "opc.tcp://" + (config_.host == "0.0.0.0" ? std::string("localhost") : config_.host) + ":" +
                          std::to_string(config_.port);
        sc.log_reads = config_.log_reads;
        context_ = std::make_unique<opcua::ServerContext>(space_, *log_, sc);
        server_ = std::make_unique<opcua::TcpServer>(*context_, config_.host, config_.port);
        server_->start();

        queue_ = std::make_unique<SegmentQueue>(config_.queue_capacity);
        publisher_ = std::make_unique<AddressSpacePublisher>(space_, log_.get());

        auto source = composite_source(*gen_, std::move(lookback));
        producer_ = std::jthread([this, source = std::move(source)](std::stop_token st) {
            try {
                producer_loop(
                    [&](std::uint64_t seq) {
                        auto s = source(seq);
                        ++produced_;
                        return s;
                    },
                    *queue_, st);
            } catch (...) {
                std::lock_guard lock(error_mutex_);
                producer_error_ = std::current_exception();
            }
        });
        ConsumerOptions co;
        co.rate_hz = config_.publish_rate_hz;
        consumer_ = std::jthread(
            [this, co](std::stop_token st) { consumer_loop(*queue_, *publisher_, *clock_, co, st, &stats_); });
    } catch (const RuntimeError&) {
        stop();
        throw;
    } catch (const std::exception& e) {
        stop();
        throw RuntimeError(RuntimeError::Kind::Startup, e.what());
    }
    started_ = true;
}

void Honeypot::stop() {
    if (producer_.joinable()) producer_.request_stop();
    if (consumer_.joinable()) consumer_.request_stop();
    if (queue_) queue_->stop();
    if (producer_.joinable()) producer_.join();
    if (consumer_.joinable()) consumer_.join();
    if (server_) server_->stop();
    started_ = false;
}

std::uint16_t Honeypot::port() const { return server_ ? server_->port() : 0; }

std::exception_ptr Honeypot::producer_error() const {
    std::lock_guard lock(error_mutex_);
    return producer_error_;
}

std::string Honeypot::status_line() const {
    std::ostringstream out;
    out << "serving opc.tcp://" << config_.host << ':' << port() << " manifest=" << std::hex << std::setw(16)
        << std::setfill('0') << hash_ << std::dec;
    if (gen_) {
        const double segment_rate = config_.publish_rate_hz / static_cast<double>(gen_->lookahead());
        out << " publish=" << ts::format_double(config_.publish_rate_hz) << "Hz segment="
            << ts::format_double(segment_rate) << "Hz L=" << gen_->lookback() << " H=" << gen_->lookahead();
    }
    out << " queue=" << config_.queue_capacity;
    return out.str();
}

}  // namespace honeypot::runtime
