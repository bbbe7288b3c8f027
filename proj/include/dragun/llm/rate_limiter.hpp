#pragma once

#include <memory>
#include <mutex>

namespace dragun::llm {

/// Seconds on some monotonic timeline.
class Clock {
public:
    virtual ~Clock() = default;
    virtual double now() = 0;
    virtual void sleep_until(double t) = 0;
    void sleep_for(double seconds) { sleep_until(now() + seconds); }
};

class SteadyClock final : public Clock {
public:
    double now() override;
    void sleep_until(double t) override;
};

/// Deterministic clock for tests: sleeping advances time instantly.
class VirtualClock final : public Clock {
public:
    double now() override;
    void sleep_until(double t) override;

private:
    std::mutex mu_;
    double t_ = 0.0;
};

/// Token bucket with capacity one: consecutive issues are spaced at least
/// 1 / rate seconds apart, so no window of length T sees more than
/// floor(T * rate) + 1 requests. Callers block in acquire() until their slot.
class RateLimiter {
public:
    RateLimiter(double requests_per_second, std::shared_ptr<Clock> clock);

    /// Blocks until the caller may issue; returns the issue time.
    double acquire();

private:
    double interval_;
    std::shared_ptr<Clock> clock_;
    std::mutex mu_;
    double next_free_ = -1.0;
};

}  // namespace dragun::llm
