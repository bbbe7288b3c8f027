#pragma once

#include "dragun/evaluation/evaluation.hpp"
#include "dragun/evidence/pipeline.hpp"
#include "dragun/index/inverted_index.hpp"
#include "dragun/llm/gateway.hpp"
#include "dragun/pipeline/config.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace dragun::pipeline {

/// Runs fn(0..n-1) on up to `jobs` threads. Each index runs exactly once; the
/// first exception thrown is rethrown after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

/// Gateway over the configured backend and prompt set.
llm::Gateway make_gateway(const RunConfig& config);

std::unique_ptr<evidence::RelevanceScorer> make_scorer(const RunConfig& config);

struct QuestionsOutput {
    /// Task-1 run: [{topic_id, questions: [{text, status, quality}]}].
    nlohmann::json run;
    std::vector<std::string> warnings;
};

/// Generation, filtering, diverse selection and quality metrics per article.
/// Articles with an empty body are skipped with a warning.
QuestionsOutput run_questions(const RunConfig& config, const llm::Gateway& gateway,
                              const std::vector<index::Document>& articles);

/// Selected questions of a Task-1 run, per topic in file order.
std::vector<std::pair<std::string, std::vector<std::string>>> selected_questions(const nlohmann::json& task1);

struct RetrieveOutput {
    /// One JSONL dump per strategy, one line per question.
    std::map<expansion::Strategy, std::string> evidence_jsonl;
    /// Per question and stage.
    std::string metrics_csv;
    /// Per strategy and stage.
    std::string summary_csv;
    std::vector<std::string> warnings;
};

/// Plans, retrieves, re-ranks, judges and filters evidence for every selected
/// question under each strategy.
RetrieveOutput run_retrieve(const RunConfig& config, const llm::Gateway& gateway, const index::InvertedIndex& index,
                            const evidence::TrustTable& trust, const nlohmann::json& task1,
                            const std::vector<expansion::Strategy>& strategies,
                            evidence::RelevanceScorer& scorer);

struct ReportOutput {
    /// Task-2 run: [{topic_id, report_text, citations, answers}].
    nlohmann::json run;
    /// Flags per topic and answer, kept out of the run file.
    nlohmann::json diagnostics;
    std::vector<std::string> warnings;
};

/// Cited answers from the trusted evidence (relevant evidence when none is
/// trusted), then one report per topic. Titles come from `articles` when present.
ReportOutput run_report(const RunConfig& config, const llm::Gateway& gateway, const index::InvertedIndex& index,
                        std::string_view evidence_jsonl, const std::vector<index::Document>& articles);

/// One message per citation in the Task-2 run that is not in the evidence
/// dump of the same topic. Empty when the run is consistent.
std::vector<std::string> check_citations(const nlohmann::json& task2, std::string_view evidence_jsonl);

struct TopicScore {
    std::string topic_id;
    double normalized = 0.0;
    double raw = 0.0;
    std::size_t rubric_size = 0;
};

/// Matches each rubric question to system questions and labels the matches
/// with the model. Unofficial stand-in for assessor judgments.
evaluation::LlmJudgeResult llm_judgments(const RunConfig& config, const llm::Gateway& gateway,
                                         const std::vector<evaluation::RubricEntry>& rubric,
                                         const std::vector<std::string>& system_questions);

/// "topic_id,rubric_size,qgen_normalized,qgen_raw" rows plus a final "mean" row.
std::string scores_csv(const std::vector<TopicScore>& scores);

}  // namespace dragun::pipeline
