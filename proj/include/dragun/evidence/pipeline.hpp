#pragma once

#include "dragun/evidence/scorer.hpp"
#include "dragun/evidence/trust.hpp"
#include "dragun/expansion/query_plan.hpp"
#include "dragun/index/inverted_index.hpp"
#include "dragun/llm/gateway.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace dragun::evidence {

inline constexpr const char* kFlagScorerFailed = "scorer_failed";
inline constexpr const char* kFlagJudgeUnparseable = "judge_unparseable";
inline constexpr const char* kFlagUrlUnparseable = "url_unparseable";

struct EvidenceItem {
    std::string doc_id;
    std::string url;
    std::uint32_t ordinal = 0;
    double bm25_score = 0.0;
    int bm25_rank = 0;
    std::optional<double> rerank_score;
    std::optional<int> rerank_rank;
    std::optional<bool> relevant;
    double trust = 0.0;
    std::vector<std::string> flags;

    bool has_flag(std::string_view flag) const;
    void add_flag(std::string_view flag);
};

/// Search hits as evidence items with bm25_rank 1..n.
std::vector<EvidenceItem> retrieve(const index::InvertedIndex& index, const query::QueryNode& ast, std::size_t k = 1000,
                                   const index::Bm25Params& params = {});

/// Sets trust (and the URL flag) on every item.
void attach_trust(std::vector<EvidenceItem>& items, const TrustTable& table);

/// Scores each item's body against the question and sorts by descending
/// score, ties by bm25_rank. Items the scorer fails on twice keep their bm25
/// order at the tail, unranked and flagged.
std::vector<EvidenceItem> rerank(std::string_view question, std::vector<EvidenceItem> items, RelevanceScorer& scorer,
                                 const index::InvertedIndex& index);

struct Judgement {
    bool relevant = false;
    bool flagged = false;
};

using JudgeFn = std::function<Judgement(const EvidenceItem&)>;

/// Model-backed relevance judge. Verdicts are cached per (question, doc_id);
/// safe to share between threads.
class RelevanceJudge {
public:
    struct Options {
        /// Document text sent to the model is cut at this many bytes (on a word boundary).
        std::size_t max_document_chars = 4000;
    };

    RelevanceJudge(const llm::Gateway& gateway, const index::InvertedIndex& index, Options options);
    RelevanceJudge(const llm::Gateway& gateway, const index::InvertedIndex& index)
        : RelevanceJudge(gateway, index, Options{}) {}

    /// One re-prompt on an unparseable reply, then not relevant and flagged.
    Judgement judge(std::string_view question, const EvidenceItem& item) const;

    /// Binds the question for use with the filters.
    JudgeFn for_question(std::string question) const;

    /// Model calls issued, re-prompts included.
    std::size_t calls() const;

    /// "RELEVANT..." -> true, "NOT RELEVANT..." -> false, case-insensitive;
    /// nullopt otherwise.
    static std::optional<bool> parse_verdict(std::string_view reply);

private:
    const llm::Gateway& gateway_;
    const index::InvertedIndex& index_;
    Options options_;
    mutable std::mutex mu_;
    mutable std::map<std::pair<std::string, std::string>, Judgement> cache_;
    mutable std::size_t calls_ = 0;
};

/// Sets item.relevant via `judge` unless already known. Without a judge an
/// unknown item counts as not relevant and stays unjudged.
bool ensure_judged(EvidenceItem& item, const JudgeFn& judge);

/// Scans the first `window` items in order, judging lazily, and returns the
/// first `quota` relevant ones (all of them if fewer qualify).
std::vector<EvidenceItem> filter_top10_relevant(std::vector<EvidenceItem>& items, const JudgeFn& judge,
                                                std::size_t window = 100, std::size_t quota = 10);

/// As filter_top10_relevant, additionally requiring trust >= threshold.
std::vector<EvidenceItem> filter_top3_trusted(std::vector<EvidenceItem>& items, const JudgeFn& judge,
                                              double threshold = 0.7, std::size_t window = 100,
                                              std::size_t quota = 3);

enum class Stage { pre_rerank, post_rerank };
std::string_view to_string(Stage s);

struct RetrievalMetrics {
    Stage stage = Stage::pre_rerank;
    double relevance_at_10 = 0.0;
    double mean_trust_at_10 = 0.0;
    /// min(10, n), the denominator of both metrics.
    std::size_t considered = 0;
    /// Set for an empty list.
    bool flagged = false;
};

/// Judges the first min(10, n) items of the stage's ordering and averages
/// relevance and trust over them.
RetrievalMetrics compute_metrics(std::vector<EvidenceItem>& items, Stage stage, const JudgeFn& judge);

struct MetricDelta {
    double relevance = 0.0;
    double trust = 0.0;
};

MetricDelta delta(const RetrievalMetrics& post, const RetrievalMetrics& pre);

nlohmann::json to_json(const EvidenceItem& item);
EvidenceItem evidence_from_json(const nlohmann::json& j);

}  // namespace dragun::evidence
