#pragma once

#include <chrono>
#include <mutex>
#include <thread>

namespace honeypot {

/// Monotonic clock abstraction. Durations are in seconds since an arbitrary
/// epoch; only differences are meaningful.
class Clock {
public:
    virtual ~Clock() = default;
    virtual double now() = 0;
    virtual void sleep_until(double deadline) = 0;
};

class SteadyClock final : public Clock {
public:
    SteadyClock() : origin_(std::chrono::steady_clock::now()) {}

    double now() override {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - origin_).count();
    }

    void sleep_until(double deadline) override {
        std::this_thread::sleep_until(origin_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                    std::chrono::duration<double>(deadline)));
    }

private:
    std::chrono::steady_clock::time_point origin_;
};

/// Deterministic clock for tests. sleep_until jumps straight to the deadline;
/// advance() moves time forward explicitly.
class FakeClock final : public Clock {
public:
    explicit FakeClock(double start = 0.0) : t_(start) {}

    double now() override {
        std::lock_guard lock(mutex_);
        return t_;
    }

    void sleep_until(double deadline) override {
        std::lock_guard lock(mutex_);
        if (deadline > t_) t_ = deadline;
    }

    void advance(double seconds) {
        std::lock_guard lock(mutex_);
        t_ += seconds;
    }

private:
    std::mutex mutex_;
    double t_;
};

}  // namespace honeypot
