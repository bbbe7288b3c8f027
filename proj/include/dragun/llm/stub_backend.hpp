#pragma once

#include "dragun/llm/gateway.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dragun::llm {

/// 64-bit FNV-1a, stable across platforms and runs.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Offline backend. Chat replies are a pure function of the request: a keyed
/// hash of (system_prompt, user_prompt) selects among the replies registered
/// for the request's template. Embeddings are signed feature hashes of the
/// analyzed tokens, L2-normalized.
class StubBackend final : public ModelBackend {
public:
    /// Computes a reply from the request and a selector hash.
    using Responder = std::function<std::string(const ChatRequest&, std::uint64_t)>;

    struct Options {
        int embedding_dim = 384;
        std::uint64_t key = 0;
        /// Install the responders that cover the built-in prompt templates.
        bool install_defaults = true;
    };

    StubBackend();
    explicit StubBackend(Options options);

    /// Canned reply templates for a template id; placeholders {{name}} are
    /// filled from the request bindings. The hash picks one per request.
    void register_canned(std::string template_id, std::vector<std::string> replies);
    void register_responder(std::string template_id, Responder responder);

    std::string chat(const ChatRequest& request) override;
    std::vector<Embedding> embed(std::span<const std::string> texts) override;

    std::uint64_t request_hash(const ChatRequest& request) const;

    /// Bucket and sign a token hashes to; exposed so tests can pick tokens
    /// whose buckets are known to differ.
    std::pair<std::size_t, float> feature(std::string_view token) const;

private:
    Options options_;
    std::map<std::string, Responder, std::less<>> responders_;
};

/// Installs the default responders for every built-in template.
void install_default_responders(StubBackend& stub);

}  // namespace dragun::llm
