#include "dragun/llm/openai_backend.hpp"

#include "dragun/error.hpp"

#include <httplib.h>
#include <fmt/format.h>

#include <cmath>

namespace dragun::llm {
namespace {

bool retryable(int status) { return status == 429 || (status >= 500 && status <= 599); }

}  // namespace

std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("base_url needs a scheme: " + base_url);
    const auto scheme = base_url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw ConfigError("unsupported base_url scheme: " + scheme);
    const auto host_begin = scheme_end + 3;
    const auto path_begin = base_url.find('/', host_begin);
    std::string origin = base_url.substr(0, path_begin);
    std::string prefix = path_begin == std::string::npos ? "" : base_url.substr(path_begin);
    if (origin.size() <= host_begin) throw ConfigError("base_url has no host: " + base_url);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {origin, prefix};
}

JsonHttpClient::JsonHttpClient(std::string base_url, Options options, std::shared_ptr<Clock> clock)
    : options_(std::move(options)),
      clock_(clock ? std::move(clock) : std::make_shared<SteadyClock>()),
      limiter_(options_.requests_per_second, clock_),
      jitter_rng_(options_.jitter_seed) {
    std::tie(origin_, prefix_) = split_base_url(base_url);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (origin_.starts_with("https://")) throw ConfigError("built without TLS support; cannot reach " + origin_);
#endif
}

int JsonHttpClient::attempts() const {
    std::lock_guard lock(mu_);
    return attempts_;
}

double JsonHttpClient::backoff(int retry) {
    std::uint64_t bits = 0;
    {
        std::lock_guard lock(mu_);
        bits = jitter_rng_();
    }
    const double unit = static_cast<double>(bits >> 11) * 0x1.0p-53;
    return options_.backoff_base_seconds * std::pow(2.0, retry) * (1.0 + 0.25 * unit);
}

nlohmann::json JsonHttpClient::post(const std::string& path, const nlohmann::json& body) {
    const std::string payload = body.dump();
    httplib::Headers headers;
    if (!options_.bearer_token.empty()) headers.emplace("Authorization", "Bearer " + options_.bearer_token);

    int last_status = 0;
    std::string last_error;
    for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
        if (attempt > 0) clock_->sleep_for(backoff(attempt - 1));
        limiter_.acquire();
        {
            std::lock_guard lock(mu_);
            ++attempts_;
        }
        httplib::Client cli(origin_);
        const auto timeout = std::chrono::duration<double>(options_.timeout_seconds);
        cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
        cli.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
        auto res = cli.Post(prefix_ + path, headers, payload, "application/json");
        if (!res) {
            last_status = 0;
            last_error = httplib::to_string(res.error());
            continue;
        }
        last_status = res->status;
        if (res->status >= 200 && res->status < 300) {
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                throw TransportError(std::string("invalid JSON from server: ") + e.what(), res->status);
            }
        }
        last_error = res->body.substr(0, 200);
        if (!retryable(res->status)) {
            throw TransportError(fmt::format("POST {} failed with HTTP {}: {}", path, res->status, last_error),
                                 res->status);
        }
    }
    throw TransportError(fmt::format("POST {} failed after {} attempts (last status {}): {}", path,
                                     options_.max_retries + 1, last_status, last_error),
                         last_status);
}

OpenAiBackend::OpenAiBackend(const GatewayConfig& config, std::string api_key, std::shared_ptr<Clock> clock)
    : config_(config),
      client_(config.base_url,
              JsonHttpClient::Options{config.max_retries, config.backoff_base_seconds, config.timeout_seconds,
                                      config.requests_per_second, config.seed, std::move(api_key)},
              std::move(clock)) {
    config_.validate();
}

std::string OpenAiBackend::chat(const ChatRequest& request) {
    nlohmann::json body = {
        {"model", config_.model_chat},
        {"messages",
         {{{"role", "system"}, {"content", request.system_prompt}}, {{"role", "user"}, {"content", request.user_prompt}}}},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
    };
    if (request.seed) body["seed"] = *request.seed;
    const auto reply = client_.post("/chat/completions", body);
    try {
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw TransportError("chat completion reply has no choices[0].message.content", 200);
    }
}

std::vector<Embedding> OpenAiBackend::embed(std::span<const std::string> texts) {
    nlohmann::json body = {{"model", config_.model_embed}, {"input", std::vector<std::string>(texts.begin(), texts.end())}};
    const auto reply = client_.post("/embeddings", body);
    std::vector<Embedding> out(texts.size());
    try {
        const auto& data = reply.at("data");
        if (data.size() != texts.size()) throw TransportError("embedding count mismatch", 200);
        for (std::size_t i = 0; i < data.size(); ++i) {
            const auto index = data[i].value("index", i);
            if (index >= out.size()) throw TransportError("embedding index out of range", 200);
            auto& e = out[index];
            e.vector = data[i].at("embedding").get<std::vector<float>>();
            double sq = 0.0;
            for (float v : e.vector) sq += static_cast<double>(v) * v;
            e.norm = static_cast<float>(std::sqrt(sq));
        }
    } catch (const nlohmann::json::exception&) {
        throw TransportError("embedding reply is missing data[].embedding", 200);
    }
    return out;
}

}  // namespace dragun::llm
