#pragma once

#include "dragun/llm/prompts.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dragun::llm {

struct ChatRequest {
    std::string system_prompt;
    std::string user_prompt;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::optional<std::int64_t> seed;

    // Metadata, never sent over the wire: which template produced the prompts
    // and the values substituted into it.
    std::string template_id;
    Bindings bindings;
};

struct Embedding {
    std::vector<float> vector;
    float norm = 0.0f;
};

enum class BackendKind { live, stub };

struct GatewayConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key_env_var = "OPENAI_API_KEY";
    std::string model_chat = "gpt-4o-nano";
    std::string model_embed = "text-embedding-3-small";
    int max_retries = 4;
    double requests_per_second = 5.0;
    BackendKind backend = BackendKind::stub;

    int embedding_dim = 384;
    double backoff_base_seconds = 1.0;
    double timeout_seconds = 60.0;
    std::uint64_t seed = 0;

    /// Throws ConfigError on negative retries, non-positive rate or dimension.
    void validate() const;
};

/// A model provider. Implementations must be safe to call concurrently.
class ModelBackend {
public:
    virtual ~ModelBackend() = default;
    virtual std::string chat(const ChatRequest& request) = 0;
    virtual std::vector<Embedding> embed(std::span<const std::string> texts) = 0;
};

/// The single entry point for model calls. Validates requests, renders
/// prompt templates and forwards to the configured backend.
class Gateway {
public:
    Gateway(std::shared_ptr<ModelBackend> backend, PromptLibrary prompts);

    /// Throws DataError on an empty user prompt or temperature outside [0, 2].
    std::string chat(const ChatRequest& request) const;

    /// Renders template `name` with `bindings` and sends it.
    std::string chat_template(std::string_view name, const Bindings& bindings, double temperature = 0.0) const;

    /// Same as chat_template with a re-prompt note appended to the user prompt.
    /// Used once when a reply could not be parsed.
    std::string chat_template_retry(std::string_view name, const Bindings& bindings, double temperature = 0.0) const;

    /// One embedding per text, order preserved. Throws DataError on an empty list.
    std::vector<Embedding> embed(std::span<const std::string> texts) const;

    const PromptLibrary& prompts() const { return prompts_; }
    ModelBackend& backend() const { return *backend_; }

private:
    ChatRequest build(std::string_view name, const Bindings& bindings, double temperature, bool retry) const;

    std::shared_ptr<ModelBackend> backend_;
    PromptLibrary prompts_;
};

/// Builds the backend named in the config. Live mode reads the API key from
/// the configured environment variable and throws ConfigError when it is unset.
std::shared_ptr<ModelBackend> make_backend(const GatewayConfig& config);

double cosine(std::span<const float> a, std::span<const float> b);

}  // namespace dragun::llm
