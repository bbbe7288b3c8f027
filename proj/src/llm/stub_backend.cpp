#include "dragun/llm/stub_backend.hpp"

#include "dragun/error.hpp"
#include "dragun/text/analyzer.hpp"

#include <cmath>

namespace dragun::llm {

std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

std::uint64_t keyed_basis(std::uint64_t key) { return 0xcbf29ce484222325ULL ^ (key * 0x9E3779B97F4A7C15ULL); }

}  // namespace

StubBackend::StubBackend() : StubBackend(Options{}) {}

StubBackend::StubBackend(Options options) : options_(options) {
    if (options_.embedding_dim <= 0) throw ConfigError("embedding_dim must be positive");
    if (options_.install_defaults) install_default_responders(*this);
}

void StubBackend::register_canned(std::string template_id, std::vector<std::string> replies) {
    if (replies.empty()) throw ConfigError("canned reply list for '" + template_id + "' is empty");
    register_responder(std::move(template_id), [replies = std::move(replies)](const ChatRequest& req, std::uint64_t h) {
        return render_template(replies[h % replies.size()], req.bindings);
    });
}

void StubBackend::register_responder(std::string template_id, Responder responder) {
    responders_[std::move(template_id)] = std::move(responder);
}

std::uint64_t StubBackend::request_hash(const ChatRequest& request) const {
    std::string key = request.system_prompt;
    key.push_back('\x1e');
    key += request.user_prompt;
    return fnv1a64(key, keyed_basis(options_.key));
}

std::string StubBackend::chat(const ChatRequest& request) {
    const auto h = request_hash(request);
    auto it = responders_.find(request.template_id);
    if (it == responders_.end()) it = responders_.find("*");
    if (it == responders_.end()) return "No reply is registered for this prompt.";
    return it->second(request, h);
}

std::pair<std::size_t, float> StubBackend::feature(std::string_view token) const {
    const auto h = fnv1a64(token, keyed_basis(options_.key));
    const auto bucket = static_cast<std::size_t>(h % static_cast<std::uint64_t>(options_.embedding_dim));
    const float sign = (h >> 63) ? -1.0f : 1.0f;
    return {bucket, sign};
}

std::vector<Embedding> StubBackend::embed(std::span<const std::string> texts) {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        auto tokens = text::analyze(t);
        if (tokens.empty()) tokens = text::raw_words(t);
        if (tokens.empty()) tokens.push_back("\x01" + t);

        std::vector<float> v(static_cast<std::size_t>(options_.embedding_dim), 0.0f);
        for (const auto& tok : tokens) {
            const auto [bucket, sign] = feature(tok);
            v[bucket] += sign;
        }
        double sq = 0.0;
        for (float x : v) sq += static_cast<double>(x) * x;
        if (sq == 0.0) {
            // Every feature cancelled out; fall back to one feature for the whole text.
            const auto [bucket, sign] = feature("\x02" + t);
            v[bucket] = sign;
            sq = 1.0;
        }
        const double norm = std::sqrt(sq);
        double check = 0.0;
        for (float& x : v) {
            x = static_cast<float>(x / norm);
            check += static_cast<double>(x) * x;
        }
        out.push_back(Embedding{std::move(v), static_cast<float>(std::sqrt(check))});
    }
    return out;
}

}  // namespace dragun::llm
