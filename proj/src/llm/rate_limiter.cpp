#include "dragun/llm/rate_limiter.hpp"

#include "dragun/error.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <thread>

namespace dragun::llm {

double SteadyClock::now() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

void SteadyClock::sleep_until(double t) {
    const double wait = t - now();
    if (wait > 0) std::this_thread::sleep_for(std::chrono::duration<double>(wait));
}

double VirtualClock::now() {
    std::lock_guard lock(mu_);
    return t_;
}

void VirtualClock::sleep_until(double t) {
    std::lock_guard lock(mu_);
    t_ = std::max(t_, t);
}

RateLimiter::RateLimiter(double requests_per_second, std::shared_ptr<Clock> clock)
    : interval_(0.0), clock_(std::move(clock)), next_free_(-std::numeric_limits<double>::infinity()) {
    if (!(requests_per_second > 0.0)) throw ConfigError("requests_per_second must be positive");
    interval_ = 1.0 / requests_per_second;
}

double RateLimiter::acquire() {
    double slot = 0.0;
    {
        std::lock_guard lock(mu_);
        slot = std::max(clock_->now(), next_free_);
        next_free_ = slot + interval_;
    }
    clock_->sleep_until(slot);
    return slot;
}

}  // namespace dragun::llm
