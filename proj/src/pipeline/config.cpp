#include "dragun/pipeline/config.hpp"

#include "dragun/error.hpp"
#include "dragun/io.hpp"

#include <fmt/format.h>

namespace dragun::pipeline {
namespace {

template <typename T>
T typed(const nlohmann::json& v, std::string_view key) {
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError("");
        } else if constexpr (std::is_unsigned_v<T>) {
            if (!v.is_number_unsigned()) throw ConfigError("");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ConfigError("");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError("");
        } else {
            if (!v.is_string()) throw ConfigError("");
        }
        return v.get<T>();
    } catch (const std::exception&) {
        throw ConfigError(fmt::format("config key '{}' has the wrong type", key));
    }
}

void apply_gateway(llm::GatewayConfig& g, const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config key 'gateway' must be an object");
    for (const auto& [key, v] : j.items()) {
        const auto name = "gateway." + key;
        if (key == "base_url") g.base_url = typed<std::string>(v, name);
        else if (key == "api_key_env_var") g.api_key_env_var = typed<std::string>(v, name);
        else if (key == "model_chat") g.model_chat = typed<std::string>(v, name);
        else if (key == "model_embed") g.model_embed = typed<std::string>(v, name);
        else if (key == "max_retries") g.max_retries = typed<int>(v, name);
        else if (key == "requests_per_second") g.requests_per_second = typed<double>(v, name);
        else if (key == "embedding_dim") g.embedding_dim = typed<int>(v, name);
        else if (key == "backoff_base_seconds") g.backoff_base_seconds = typed<double>(v, name);
        else if (key == "timeout_seconds") g.timeout_seconds = typed<double>(v, name);
        else if (key == "backend") {
            const auto s = typed<std::string>(v, name);
            if (s == "stub") g.backend = llm::BackendKind::stub;
            else if (s == "live") g.backend = llm::BackendKind::live;
            else throw ConfigError(fmt::format("gateway.backend must be \"stub\" or \"live\", got '{}'", s));
        } else {
            throw ConfigError(fmt::format("unknown config key '{}'", name));
        }
    }
}

}  // namespace

std::string_view to_string(FilterMode m) { return m == FilterMode::rules ? "rules" : "llm"; }
std::string_view to_string(ScorerKind s) { return s == ScorerKind::stub ? "stub" : "http"; }

void RunConfig::validate() const {
    gateway.validate();
    auto positive = [](int v, const char* name) {
        if (v < 1) throw ConfigError(fmt::format("{} must be >= 1, got {}", name, v));
    };
    positive(questions_per_article, "questions_per_article");
    positive(question_candidates, "question_candidates");
    positive(max_question_words, "max_question_words");
    positive(k_retrieve, "k_retrieve");
    positive(rerank_window, "rerank_window");
    positive(filter_window, "filter_window");
    positive(max_report_words, "max_report_words");
    positive(match_top_m, "match_top_m");
    positive(jobs, "jobs");
    if (question_slack < 0) throw ConfigError("question_slack must be >= 0");
    if (expansion.min_terms < 1 || expansion.max_terms < expansion.min_terms) {
        throw ConfigError("expansion term bounds must satisfy 1 <= min_terms <= max_terms");
    }
    if (!(filter_window <= rerank_window && rerank_window <= k_retrieve)) {
        throw ConfigError(fmt::format("windows must satisfy filter_window ({}) <= rerank_window ({}) <= k_retrieve ({})",
                                      filter_window, rerank_window, k_retrieve));
    }
    if (!(trust_threshold >= 0.0 && trust_threshold <= 1.0)) {
        throw ConfigError(fmt::format("trust_threshold must be in [0, 1], got {}", trust_threshold));
    }
}

void apply_config_json(RunConfig& c, const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, v] : j.items()) {
        if (key == "corpus_path") c.corpus_path = typed<std::string>(v, key);
        else if (key == "index_path") c.index_path = typed<std::string>(v, key);
        else if (key == "trust_csv_path") c.trust_csv_path = typed<std::string>(v, key);
        else if (key == "articles_path") c.articles_path = typed<std::string>(v, key);
        else if (key == "prompts_dir") c.prompts_dir = typed<std::string>(v, key);
        else if (key == "gateway") apply_gateway(c.gateway, v);
        else if (key == "questions_per_article") c.questions_per_article = typed<int>(v, key);
        else if (key == "question_candidates") c.question_candidates = typed<int>(v, key);
        else if (key == "question_slack") c.question_slack = typed<int>(v, key);
        else if (key == "max_question_words") c.max_question_words = typed<int>(v, key);
        else if (key == "filter_mode") {
            const auto s = typed<std::string>(v, key);
            if (s == "rules") c.filter_mode = FilterMode::rules;
            else if (s == "llm") c.filter_mode = FilterMode::llm;
            else throw ConfigError(fmt::format("filter_mode must be \"rules\" or \"llm\", got '{}'", s));
        } else if (key == "expansion_strategy") c.expansion_strategy = expansion::parse_strategy(typed<std::string>(v, key));
        else if (key == "expansion_min_terms") c.expansion.min_terms = typed<int>(v, key);
        else if (key == "expansion_max_terms") c.expansion.max_terms = typed<int>(v, key);
        else if (key == "expansion_combine") {
            const auto s = typed<std::string>(v, key);
            if (s == "or") c.expansion.combine = expansion::Combine::any;
            else if (s == "and") c.expansion.combine = expansion::Combine::all;
            else throw ConfigError(fmt::format("expansion_combine must be \"or\" or \"and\", got '{}'", s));
        } else if (key == "k_retrieve") c.k_retrieve = typed<int>(v, key);
        else if (key == "rerank_window") c.rerank_window = typed<int>(v, key);
        else if (key == "filter_window") c.filter_window = typed<int>(v, key);
        else if (key == "trust_threshold") c.trust_threshold = typed<double>(v, key);
        else if (key == "scorer") {
            const auto s = typed<std::string>(v, key);
            if (s == "stub") c.scorer = ScorerKind::stub;
            else if (s == "http") c.scorer = ScorerKind::http;
            else throw ConfigError(fmt::format("scorer must be \"stub\" or \"http\", got '{}'", s));
        } else if (key == "scorer_url") c.scorer_url = typed<std::string>(v, key);
        else if (key == "max_report_words") c.max_report_words = typed<int>(v, key);
        else if (key == "match_top_m") c.match_top_m = typed<int>(v, key);
        else if (key == "seed") c.seed = typed<std::uint64_t>(v, key);
        else if (key == "jobs") c.jobs = typed<int>(v, key);
        else throw ConfigError(fmt::format("unknown config key '{}'", key));
    }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
    const auto text = read_file(path);
    const auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigError(fmt::format("{}: config is not valid JSON", path.string()));
    apply_config_json(config, j);
}

nlohmann::json to_json(const RunConfig& c) {
    return {
        {"corpus_path", c.corpus_path.string()},
        {"index_path", c.index_path.string()},
        {"trust_csv_path", c.trust_csv_path.string()},
        {"articles_path", c.articles_path.string()},
        {"prompts_dir", c.prompts_dir.string()},
        {"gateway",
         {{"base_url", c.gateway.base_url},
          {"api_key_env_var", c.gateway.api_key_env_var},
          {"model_chat", c.gateway.model_chat},
          {"model_embed", c.gateway.model_embed},
          {"max_retries", c.gateway.max_retries},
          {"requests_per_second", c.gateway.requests_per_second},
          {"embedding_dim", c.gateway.embedding_dim},
          {"backoff_base_seconds", c.gateway.backoff_base_seconds},
          {"timeout_seconds", c.gateway.timeout_seconds},
          {"backend", c.gateway.backend == llm::BackendKind::stub ? "stub" : "live"}}},
        {"questions_per_article", c.questions_per_article},
        {"question_candidates", c.question_candidates},
        {"question_slack", c.question_slack},
        {"max_question_words", c.max_question_words},
        {"filter_mode", to_string(c.filter_mode)},
        {"expansion_strategy", expansion::to_string(c.expansion_strategy)},
        {"expansion_min_terms", c.expansion.min_terms},
        {"expansion_max_terms", c.expansion.max_terms},
        {"expansion_combine", c.expansion.combine == expansion::Combine::any ? "or" : "and"},
        {"k_retrieve", c.k_retrieve},
        {"rerank_window", c.rerank_window},
        {"filter_window", c.filter_window},
        {"trust_threshold", c.trust_threshold},
        {"scorer", to_string(c.scorer)},
        {"scorer_url", c.scorer_url},
        {"max_report_words", c.max_report_words},
        {"match_top_m", c.match_top_m},
        {"seed", c.seed},
        {"jobs", c.jobs},
    };
}

}  // namespace dragun::pipeline
