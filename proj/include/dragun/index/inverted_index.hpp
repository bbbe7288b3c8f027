#pragma once

#include "dragun/index/document.hpp"
#include "dragun/query/query_node.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dragun::index {

enum class FieldId : std::uint8_t { title = 0, headings = 1, body = 2 };
inline constexpr std::size_t kFieldCount = 3;

struct Posting {
    std::uint32_t doc = 0;
    FieldId field = FieldId::body;
    std::uint32_t tf = 0;

    bool operator==(const Posting&) const = default;
};

/// Postings sorted by (doc, field); at most one entry per (doc, field); tf >= 1.
struct PostingList {
    std::string term;
    std::vector<Posting> postings;
};

struct IndexStats {
    std::uint64_t doc_count = 0;
    /// Mean analyzed-token length per field. A field that is empty across the
    /// whole corpus reports 1.0 so the normalization term stays defined.
    std::array<double, kFieldCount> avg_field_length{1.0, 1.0, 1.0};
    /// Number of documents containing the term in any field.
    std::map<std::string, std::uint32_t, std::less<>> doc_freq;

    std::uint32_t df(std::string_view term) const;
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
    std::array<double, kFieldCount> field_weights{1.0, 1.0, 1.0};
};

/// ln(1 + (N - df + 0.5) / (df + 0.5)); non-negative for 0 <= df <= N.
double bm25_idf(std::uint64_t doc_count, std::uint64_t df);

/// Saturated, length-normalized term frequency: tf (k1 + 1) / (tf + k1 (1 - b + b len / avglen)).
double bm25_tf_norm(double tf, double len, double avg_len, const Bm25Params& params);

/// Corpus statistics computed directly from documents, without building postings.
IndexStats compute_stats(std::span<const Document> docs);

struct SearchHit {
    std::string doc_id;
    std::uint32_t ordinal = 0;
    double score = 0.0;
};

/// In-memory inverted index over title, headings and body. Immutable once
/// built or opened; concurrent readers are safe.
class InvertedIndex {
public:
    /// A closed index; every query on it throws IoError.
    InvertedIndex() = default;

    /// Throws DataError on a duplicate or empty doc_id.
    static InvertedIndex build(std::vector<Document> docs);

    /// Reads `<dir>/index.bin`; throws IoError on a missing file, bad magic or version.
    static InvertedIndex open(const std::filesystem::path& dir);

    /// Writes `<dir>/index.bin` atomically. Output bytes depend only on the documents.
    void save(const std::filesystem::path& dir) const;

    bool is_open() const { return open_; }
    std::size_t size() const { return docs_.size(); }
    const IndexStats& stats() const { return stats_; }
    const Document& document(std::uint32_t ordinal) const;
    std::optional<std::uint32_t> find(std::string_view doc_id) const;
    const PostingList* postings(std::string_view term) const;
    std::uint32_t field_length(std::uint32_t ordinal, FieldId field) const;
    std::uint32_t term_frequency(std::string_view term, std::uint32_t ordinal, FieldId field) const;

    /// Sum over query terms of the field-weighted BM25 contribution. Unknown
    /// terms contribute zero.
    double bm25_score(std::span<const std::string> query_terms, std::uint32_t ordinal,
                      const Bm25Params& params = {}) const;

    /// Documents matching the boolean tree, scored by the sum of matching term
    /// leaves, sorted by descending score then ascending doc_id, at most k.
    std::vector<SearchHit> search(const query::QueryNode& plan, std::size_t k,
                                  const Bm25Params& params = {}) const;

    /// Files an index directory contains.
    static constexpr const char* kFileName = "index.bin";
    static constexpr std::uint8_t kFormatVersion = 1;

private:
    using ScoredDocs = std::vector<std::pair<std::uint32_t, double>>;

    void require_open() const;
    ScoredDocs evaluate(const query::QueryNode& node, const Bm25Params& params) const;
    ScoredDocs evaluate_term(const query::Term& term, const Bm25Params& params) const;
    void finalize();

    bool open_ = false;
    std::vector<Document> docs_;
    std::vector<std::array<std::uint32_t, kFieldCount>> field_lengths_;
    std::vector<PostingList> terms_;  // sorted by term
    std::unordered_map<std::string, std::size_t> term_lookup_;
    std::unordered_map<std::string, std::uint32_t> doc_lookup_;
    IndexStats stats_;
};

struct IngestOptions {
    bool lenient = false;
};

struct IngestReport {
    IndexStats stats;
    std::size_t skipped_lines = 0;
};

/// Reads corpus JSONL, builds the index and saves it under index_dir.
IngestReport ingest(const std::filesystem::path& corpus_path, const std::filesystem::path& index_dir,
                    IngestOptions options = {});

}  // namespace dragun::index
