#pragma once

#include "dragun/llm/gateway.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dragun::evaluation {

enum class Importance { have_to_know, good_to_know, nice_to_know };

/// 4, 2 and 1 points.
int weight(Importance i);
std::string_view to_string(Importance i);
Importance parse_importance(std::string_view s);

enum class SimilarityLabel { very_similar, similar, different, very_different };

/// 1, 0.5, 0 and 0 points.
double points(SimilarityLabel l);
std::string_view to_string(SimilarityLabel l);
SimilarityLabel parse_label(std::string_view s);

struct RubricEntry {
    std::string question;
    Importance importance = Importance::nice_to_know;
};

struct LabeledMatch {
    std::size_t system_index = 0;
    SimilarityLabel label = SimilarityLabel::very_different;
};

struct SimilarityJudgment {
    std::size_t rubric_index = 0;
    std::vector<LabeledMatch> matches;
};

/// [{question, importance}]; throws DataError on bad entries.
std::vector<RubricEntry> rubric_from_json(const nlohmann::json& j);
std::vector<RubricEntry> load_rubric(const std::filesystem::path& path);

/// [{rubric_index, matches: [{system_index, label}]}].
std::vector<SimilarityJudgment> judgments_from_json(const nlohmann::json& j);
std::vector<SimilarityJudgment> load_judgments(const std::filesystem::path& path);
nlohmann::json to_json(std::span<const SimilarityJudgment> judgments);

struct QuestionMatch {
    std::size_t rubric_index = 0;
    /// Best first; ties keep the lower system index first.
    std::vector<std::size_t> system_indices;
    std::vector<double> cosines;
};

/// The top_m system questions by embedding cosine for each rubric question.
/// Throws DataError on an empty system list or top_m < 1.
std::vector<QuestionMatch> match_questions(const llm::Gateway& gateway, std::span<const RubricEntry> rubric,
                                           std::span<const std::string> system_questions, int top_m = 1);

/// Score per rubric entry: weight times the best match's points. normalize
/// divides the sum by the sum of weights, otherwise by the entry count.
/// Throws DataError unless every rubric entry has exactly one judgment.
double qgen_score(std::span<const RubricEntry> rubric, std::span<const SimilarityJudgment> judgments,
                  bool normalize = true);

/// "LABEL: similar" style reply; nullopt when no label is found.
std::optional<SimilarityLabel> parse_label_reply(std::string_view reply);

struct LlmJudgeResult {
    std::vector<SimilarityJudgment> judgments;
    /// Matches whose reply stayed unparseable and were scored very_different.
    std::size_t unparseable = 0;
};

/// Unofficial stand-in for assessor labels: asks the model to label each match.
LlmJudgeResult llm_judge(const llm::Gateway& gateway, std::span<const RubricEntry> rubric,
                         std::span<const std::string> system_questions, std::span<const QuestionMatch> matches);

/// Pearson correlation; nullopt with fewer than two points or zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

struct TopicRow {
    std::string topic_id;
    std::size_t questions = 0;
    std::size_t with_metrics = 0;
    /// Mean per dashboard column; nullopt when no question has the value.
    std::vector<std::optional<double>> means;
};

struct Dashboard {
    std::vector<std::string> columns;
    std::vector<TopicRow> rows;
    /// columns x columns; nullopt where undefined.
    std::vector<std::vector<std::optional<double>>> correlation;
};

/// Aggregates the quality metrics of a question-run file (Task-1 JSON).
/// Correlations use every question record where both values are present.
Dashboard quality_dashboard(const nlohmann::json& run);

std::string dashboard_topics_csv(const Dashboard& d);
std::string dashboard_correlation_csv(const Dashboard& d);
std::string dashboard_text(const Dashboard& d);

}  // namespace dragun::evaluation
