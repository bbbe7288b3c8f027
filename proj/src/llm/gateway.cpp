#include "dragun/llm/gateway.hpp"

#include "dragun/error.hpp"
#include "dragun/llm/openai_backend.hpp"
#include "dragun/llm/stub_backend.hpp"

#include <cmath>
#include <cstdlib>

namespace dragun::llm {

void GatewayConfig::validate() const {
    if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
    if (!(requests_per_second > 0.0)) throw ConfigError("requests_per_second must be > 0");
    if (embedding_dim <= 0) throw ConfigError("embedding_dim must be > 0");
    if (backoff_base_seconds < 0.0) throw ConfigError("backoff_base_seconds must be >= 0");
    if (!(timeout_seconds > 0.0)) throw ConfigError("timeout_seconds must be > 0");
}

Gateway::Gateway(std::shared_ptr<ModelBackend> backend, PromptLibrary prompts)
    : backend_(std::move(backend)), prompts_(std::move(prompts)) {
    if (!backend_) throw ConfigError("gateway needs a backend");
}

std::string Gateway::chat(const ChatRequest& request) const {
    if (request.user_prompt.empty()) throw DataError("chat request with empty user prompt");
    if (!(request.temperature >= 0.0 && request.temperature <= 2.0)) {
        throw DataError("chat temperature must lie in [0, 2]");
    }
    return backend_->chat(request);
}

ChatRequest Gateway::build(std::string_view name, const Bindings& bindings, double temperature, bool retry) const {
    const auto& tmpl = prompts_.get(name);
    ChatRequest req;
    req.system_prompt = render_template(tmpl.system, bindings);
    req.user_prompt = render_template(tmpl.user, bindings);
    if (retry) {
        req.user_prompt += "\n\n";
        req.user_prompt += prompts_.snippet("retry_note");
    }
    req.temperature = temperature;
    req.template_id = std::string(name);
    req.bindings = bindings;
    if (retry) req.bindings["__retry"] = "1";
    return req;
}

std::string Gateway::chat_template(std::string_view name, const Bindings& bindings, double temperature) const {
    return chat(build(name, bindings, temperature, false));
}

std::string Gateway::chat_template_retry(std::string_view name, const Bindings& bindings, double temperature) const {
    return chat(build(name, bindings, temperature, true));
}

std::vector<Embedding> Gateway::embed(std::span<const std::string> texts) const {
    if (texts.empty()) throw DataError("embed called with no texts");
    auto out = backend_->embed(texts);
    if (out.size() != texts.size()) throw DataError("backend returned a different number of embeddings");
    return out;
}

std::shared_ptr<ModelBackend> make_backend(const GatewayConfig& config) {
    config.validate();
    if (config.backend == BackendKind::stub) {
        StubBackend::Options opts;
        opts.embedding_dim = config.embedding_dim;
        opts.key = config.seed;
        return std::make_shared<StubBackend>(opts);
    }
    const char* key = std::getenv(config.api_key_env_var.c_str());
    if (key == nullptr || *key == '\0') {
        throw ConfigError("environment variable " + config.api_key_env_var + " is not set");
    }
    return std::make_shared<OpenAiBackend>(config, key);
}

double cosine(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw DataError("cosine of vectors with different dimensions");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace dragun::llm
