#pragma once

#include "dragun/index/document.hpp"
#include "dragun/index/inverted_index.hpp"
#include "dragun/llm/gateway.hpp"
#include "dragun/questions/kmeans.hpp"
#include "dragun/questions/question.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dragun::questions {

/// Extracts one question per line. Numbering ("3.", "3)"), bullets ("-", "*",
/// "•") and surrounding whitespace are stripped; lines that do not end with
/// "?" are ignored.
std::vector<std::string> parse_question_lines(std::string_view reply);

struct GenerationOptions {
    /// Questions requested from the model.
    int n_target = 16;
    /// Extra parsed lines kept beyond n_target.
    int slack = 4;
};

struct GenerationResult {
    std::vector<Question> questions;
    bool reprompted = false;
};

/// Asks the model for critical questions about the article. Throws DataError
/// if the article body is empty, n_target < 1, or no question parses after one
/// re-prompt.
GenerationResult generate_questions(const llm::Gateway& gateway, const index::Document& article,
                                    GenerationOptions options = {});

/// True when the question asks more than one thing: several "?" or two
/// interrogative clauses joined by "and"/"or".
bool is_compound(std::string_view question);

std::size_t word_count(std::string_view text);

/// Rule-based filter. Compound questions become rejected_compound, questions
/// over max_words words rejected_length; others keep their status. Input
/// order and texts are preserved.
std::vector<Question> semantic_filter(std::span<const Question> questions, int max_words = 30);

/// Same contract as semantic_filter, but asks the model to classify each
/// candidate. Unparseable replies leave the candidate untouched.
std::vector<Question> llm_filter(const llm::Gateway& gateway, std::span<const Question> questions,
                                 int max_words = 30);

struct SelectionResult {
    /// Selected questions ordered by cluster id, status = selected.
    std::vector<Question> selected;
    /// Set when fewer candidates than k were available; all were kept.
    bool fewer_than_k = false;
    std::optional<ClusterSelection> clusters;
};

/// Embeds candidates, normalizes, clusters into k groups and keeps the
/// candidate nearest each centroid.
SelectionResult select_diverse(const llm::Gateway& gateway, std::span<const Question> candidates, int k,
                               std::uint64_t seed);

/// TF-IDF cosine and Jaccard over analyzed tokens of question vs article body,
/// embedding cosine via the gateway, and model-scored CRAAP components.
QualityMetrics quality_metrics(const llm::Gateway& gateway, const Question& question,
                               const index::Document& article, const index::IndexStats& idf);

/// Token-set Jaccard; 0 when both sets are empty.
double jaccard(std::span<const std::string> a, std::span<const std::string> b);

/// Cosine of raw-count TF x BM25-IDF vectors.
double tfidf_cosine(std::span<const std::string> a, std::span<const std::string> b, const index::IndexStats& idf);

/// Parses "Currency: 4" style lines; nullopt unless all five appear in [1, 5].
std::optional<CraapScores> parse_craap(std::string_view reply);

}  // namespace dragun::questions
