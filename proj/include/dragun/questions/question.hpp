#pragma once

#include "dragun/llm/gateway.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace dragun::questions {

enum class QuestionStatus { candidate, rejected_compound, rejected_length, selected };

std::string_view to_string(QuestionStatus s);
QuestionStatus parse_status(std::string_view s);

/// CRAAP test component scores, each in [1, 5].
struct CraapScores {
    int currency = 0;
    int relevance = 0;
    int authority = 0;
    int accuracy = 0;
    int purpose = 0;

    static constexpr std::array<std::string_view, 5> kNames{"currency", "relevance", "authority", "accuracy",
                                                             "purpose"};
    std::array<int, 5> values() const { return {currency, relevance, authority, accuracy, purpose}; }
    bool operator==(const CraapScores&) const = default;
};

struct QualityMetrics {
    double tfidf_cosine = 0.0;
    double jaccard = 0.0;
    double embed_cosine = 0.0;
    std::optional<CraapScores> craap;
    /// Set when the CRAAP reply could not be parsed, even after a re-prompt.
    bool craap_flagged = false;
};

struct Question {
    std::string topic_id;
    std::string text;
    std::optional<llm::Embedding> embedding;
    QuestionStatus status = QuestionStatus::candidate;
    std::optional<QualityMetrics> quality;
};

nlohmann::json to_json(const QualityMetrics& q);
QualityMetrics quality_from_json(const nlohmann::json& j);

}  // namespace dragun::questions
