#pragma once

#include "dragun/evidence/pipeline.hpp"
#include "dragun/index/inverted_index.hpp"
#include "dragun/llm/gateway.hpp"

#include <nlohmann/json.hpp>

#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dragun::report {

inline constexpr const char* kFlagNoEvidence = "no_evidence";
inline constexpr const char* kFlagNoCitations = "no_citations";
inline constexpr const char* kFlagCitationOutOfRange = "citation_out_of_range";
inline constexpr const char* kFlagVerbatimOverlap = "verbatim_overlap";
inline constexpr const char* kFlagTruncated = "truncated";
inline constexpr const char* kFlagLowEvidence = "low_evidence";

struct CitedAnswer {
    std::string question;
    /// Citations appear inline as "[doc_id]".
    std::string answer_text;
    /// Distinct doc ids in order of first citation.
    std::vector<std::string> citations;
    std::vector<std::string> flags;

    bool has_flag(std::string_view f) const;
};

struct TrustReport {
    std::string topic_id;
    std::vector<CitedAnswer> answers;
    std::string report_text;
    std::vector<std::string> report_citations;
    int word_count = 0;
    std::vector<std::string> flags;

    bool has_flag(std::string_view f) const;
};

struct AnswerOptions {
    /// Words of each evidence body shown to the model.
    int snippet_words = 80;
    /// Longest run of tokens an answer may share with a source before it is flagged.
    int max_verbatim_tokens = 25;
};

/// The trusted set when non-empty, else the relevant set.
const std::vector<evidence::EvidenceItem>& choose_evidence(const std::vector<evidence::EvidenceItem>& trusted,
                                                           const std::vector<evidence::EvidenceItem>& relevant);

/// Numbers the evidence "[1]".."[n]", asks for a cited answer and maps the
/// indices back to doc ids. Out-of-range indices are dropped and flagged; an
/// answer without citations is re-requested once and kept flagged. Empty
/// evidence yields the insufficient-evidence sentence without a model call.
CitedAnswer answer_question(const llm::Gateway& gateway, std::string_view question,
                            std::span<const evidence::EvidenceItem> evidence, const index::InvertedIndex& index,
                            const AnswerOptions& options = {});

struct CitationRewrite {
    std::string text;
    std::vector<std::string> citations;
    int dropped = 0;
};

/// Replaces "[n]" / "[n, m]" markers by "[doc_id]" using 1-based `ids`. A
/// bracketed doc id already in `ids` is kept. Other numeric markers are removed.
CitationRewrite rewrite_citations(std::string_view text, std::span<const std::string> ids);

/// Whitespace-separated words with at least one letter or digit, ignoring citation markers.
int count_words(std::string_view text);

/// Longest run of consecutive lowercased word tokens shared by the two texts.
std::size_t longest_shared_run(std::string_view a, std::string_view b);

/// Keeps whole sentences while the word count stays within max_words. When
/// even the first sentence is too long, cuts at a word boundary.
std::string truncate_to_words(std::string_view text, int max_words);

struct ReportOptions {
    int max_words = 250;
};

/// Compresses the answers into one report. Citations are renumbered across
/// answers, revalidated on the way back, and the length limit is enforced
/// with one re-request followed by truncation. Throws DataError without answers.
TrustReport synthesize_report(const llm::Gateway& gateway, std::string_view topic_id, std::string_view topic_title,
                              std::vector<CitedAnswer> answers, const ReportOptions& options = {});

/// Task-2 record: {topic_id, report_text, citations, answers: [{question, answer_text, citations}]}.
nlohmann::json to_json(const TrustReport& report);
TrustReport report_from_json(const nlohmann::json& j);

/// Doc ids cited by the report or its answers that are not in `allowed`.
std::vector<std::string> citation_violations(const TrustReport& report, const std::set<std::string>& allowed);

}  // namespace dragun::report
