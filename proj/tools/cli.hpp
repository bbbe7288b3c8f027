#pragma once

#include "dragun/pipeline/config.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace dragun::cli {

/// Settings given as command-line flags. Each one, when present, wins over
/// the config file, which wins over the built-in default.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<std::string> backend;
    std::optional<std::string> prompts_dir;
    std::optional<int> questions_per_article;
    std::optional<int> question_candidates;
    std::optional<std::string> filter_mode;
    std::optional<std::string> strategy;
    std::optional<int> k_retrieve;
    std::optional<int> rerank_window;
    std::optional<int> filter_window;
    std::optional<double> trust_threshold;
    std::optional<std::string> scorer;
    std::optional<std::string> scorer_url;
    std::optional<int> max_report_words;
    std::optional<int> top_m;
};

pipeline::RunConfig resolve_config(const std::optional<std::filesystem::path>& config_file, const Overrides& o);

/// Exit codes: 0 success, 1 data or validation error, 2 usage or I/O error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dragun::cli
