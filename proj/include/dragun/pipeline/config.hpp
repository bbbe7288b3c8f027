#pragma once

#include "dragun/expansion/query_plan.hpp"
#include "dragun/llm/gateway.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace dragun::pipeline {

enum class FilterMode { rules, llm };
enum class ScorerKind { stub, http };

struct RunConfig {
    std::filesystem::path corpus_path;
    std::filesystem::path index_path;
    std::filesystem::path trust_csv_path;
    std::filesystem::path articles_path;
    /// Directory of prompt overrides; empty uses the bundled templates.
    std::filesystem::path prompts_dir;
    llm::GatewayConfig gateway;

    int questions_per_article = 10;
    int question_candidates = 16;
    int question_slack = 4;
    int max_question_words = 30;
    FilterMode filter_mode = FilterMode::rules;

    expansion::Strategy expansion_strategy = expansion::Strategy::baseline;
    expansion::ExpansionOptions expansion;

    int k_retrieve = 1000;
    int rerank_window = 1000;
    int filter_window = 100;
    double trust_threshold = 0.7;
    ScorerKind scorer = ScorerKind::stub;
    std::string scorer_url = "http://127.0.0.1:8080";

    int max_report_words = 250;
    int match_top_m = 1;

    std::uint64_t seed = 0;
    int jobs = 1;

    /// Throws ConfigError when a field is out of range or the windows are not
    /// nested (filter_window <= rerank_window <= k_retrieve).
    void validate() const;
};

std::string_view to_string(FilterMode m);
std::string_view to_string(ScorerKind s);

/// Overlays a JSON config object onto `config`. Keys mirror the RunConfig
/// field names, with the gateway settings in a nested "gateway" object.
/// Unknown keys and wrongly typed values throw ConfigError.
void apply_config_json(RunConfig& config, const nlohmann::json& j);

/// Reads and applies a JSON config file.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& config);

}  // namespace dragun::pipeline
