#pragma once

#include "dragun/llm/gateway.hpp"
#include "dragun/llm/rate_limiter.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <mutex>
#include <random>
#include <string>

namespace dragun::llm {

/// Splits "http://host:port/v1" into the origin ("http://host:port") and the
/// path prefix ("/v1"). Throws ConfigError on a missing scheme or host.
std::pair<std::string, std::string> split_base_url(const std::string& base_url);

/// Posts JSON to an OpenAI-compatible server, retrying 429 and 5xx replies and
/// connection failures with exponential backoff (base, factor 2, up to 25%
/// jitter). Issue rate is bounded by a token bucket.
class JsonHttpClient {
public:
    struct Options {
        int max_retries = 4;
        double backoff_base_seconds = 1.0;
        double timeout_seconds = 60.0;
        double requests_per_second = 5.0;
        std::uint64_t jitter_seed = 0;
        std::string bearer_token;
    };

    JsonHttpClient(std::string base_url, Options options, std::shared_ptr<Clock> clock = nullptr);

    /// Throws TransportError carrying the last status once retries run out,
    /// or immediately on a non-retryable 4xx.
    nlohmann::json post(const std::string& path, const nlohmann::json& body);

    /// Number of HTTP attempts issued so far (including retries).
    int attempts() const;

private:
    double backoff(int retry);

    std::string origin_;
    std::string prefix_;
    Options options_;
    std::shared_ptr<Clock> clock_;
    RateLimiter limiter_;
    mutable std::mutex mu_;
    std::mt19937_64 jitter_rng_;
    int attempts_ = 0;
};

class OpenAiBackend final : public ModelBackend {
public:
    OpenAiBackend(const GatewayConfig& config, std::string api_key, std::shared_ptr<Clock> clock = nullptr);

    std::string chat(const ChatRequest& request) override;
    std::vector<Embedding> embed(std::span<const std::string> texts) override;

    const JsonHttpClient& client() const { return client_; }

private:
    GatewayConfig config_;
    JsonHttpClient client_;
};

}  // namespace dragun::llm
