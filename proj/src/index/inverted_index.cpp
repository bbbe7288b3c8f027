#include "dragun/index/inverted_index.hpp"

#include "dragun/error.hpp"
#include "dragun/io.hpp"
#include "dragun/text/analyzer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

namespace dragun::index {
namespace {

constexpr char kMagic[8] = {'D', 'R', 'G', 'N', 'I', 'D', 'X', '\n'};

std::string_view field_text(const Document& d, FieldId f) {
    switch (f) {
        case FieldId::title: return d.title;
        case FieldId::headings: return d.headings;
        case FieldId::body: return d.body;
    }
    return d.body;
}

constexpr std::array<FieldId, kFieldCount> kFields{FieldId::title, FieldId::headings, FieldId::body};

class Writer {
public:
    void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
    void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        out_.append(s);
    }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader {
public:
    Reader(std::string_view data, std::string source) : data_(data), source_(std::move(source)) {}

    void need(std::size_t n) const {
        if (pos_ + n > data_.size()) throw IoError(source_ + ": truncated index file");
    }
    std::string_view bytes(std::size_t n) {
        need(n);
        auto v = data_.substr(pos_, n);
        pos_ += n;
        return v;
    }
    std::uint8_t u8() { return static_cast<std::uint8_t>(bytes(1)[0]); }
    std::uint32_t u32() {
        auto b = bytes(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
        return v;
    }
    std::uint64_t u64() {
        auto b = bytes(8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() { return std::string(bytes(u32())); }
    bool done() const { return pos_ == data_.size(); }

private:
    std::string_view data_;
    std::string source_;
    std::size_t pos_ = 0;
};

}  // namespace

std::uint32_t IndexStats::df(std::string_view term) const {
    auto it = doc_freq.find(term);
    return it == doc_freq.end() ? 0 : it->second;
}

double bm25_idf(std::uint64_t doc_count, std::uint64_t df) {
    const double n = static_cast<double>(doc_count);
    const double d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double bm25_tf_norm(double tf, double len, double avg_len, const Bm25Params& params) {
    const double norm = params.k1 * (1.0 - params.b + params.b * len / avg_len);
    return tf * (params.k1 + 1.0) / (tf + norm);
}

IndexStats compute_stats(std::span<const Document> docs) {
    IndexStats stats;
    stats.doc_count = docs.size();
    std::array<double, kFieldCount> totals{};
    for (const auto& d : docs) {
        std::vector<std::string> seen;
        for (auto f : kFields) {
            auto tokens = text::analyze(field_text(d, f));
            totals[static_cast<std::size_t>(f)] += static_cast<double>(tokens.size());
            seen.insert(seen.end(), tokens.begin(), tokens.end());
        }
        std::sort(seen.begin(), seen.end());
        seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
        for (auto& t : seen) ++stats.doc_freq[t];
    }
    for (std::size_t f = 0; f < kFieldCount; ++f) {
        stats.avg_field_length[f] =
            (stats.doc_count > 0 && totals[f] > 0) ? totals[f] / static_cast<double>(stats.doc_count) : 1.0;
    }
    return stats;
}

InvertedIndex InvertedIndex::build(std::vector<Document> docs) {
    InvertedIndex idx;
    idx.docs_ = std::move(docs);
    if (idx.docs_.size() > std::numeric_limits<std::uint32_t>::max()) throw DataError("corpus too large");

    std::map<std::string, std::vector<Posting>> postings;
    idx.field_lengths_.reserve(idx.docs_.size());
    for (std::uint32_t ord = 0; ord < idx.docs_.size(); ++ord) {
        const auto& d = idx.docs_[ord];
        if (d.doc_id.empty()) throw DataError(fmt::format("document at position {} has an empty doc_id", ord));
        std::array<std::uint32_t, kFieldCount> lengths{};
        for (auto f : kFields) {
            auto tokens = text::analyze(field_text(d, f));
            lengths[static_cast<std::size_t>(f)] = static_cast<std::uint32_t>(tokens.size());
            std::map<std::string, std::uint32_t> counts;
            for (auto& t : tokens) ++counts[t];
            for (auto& [t, c] : counts) postings[t].push_back(Posting{ord, f, c});
        }
        idx.field_lengths_.push_back(lengths);
    }
    idx.terms_.reserve(postings.size());
    for (auto& [t, list] : postings) idx.terms_.push_back(PostingList{t, std::move(list)});
    idx.finalize();
    return idx;
}

void InvertedIndex::finalize() {
    doc_lookup_.clear();
    for (std::uint32_t ord = 0; ord < docs_.size(); ++ord) {
        if (!doc_lookup_.emplace(docs_[ord].doc_id, ord).second) {
            throw DataError("duplicate doc_id " + docs_[ord].doc_id);
        }
    }
    term_lookup_.clear();
    stats_ = IndexStats{};
    stats_.doc_count = docs_.size();
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        const auto& list = terms_[i];
        term_lookup_.emplace(list.term, i);
        std::uint32_t df = 0;
        std::uint32_t last = std::numeric_limits<std::uint32_t>::max();
        for (const auto& p : list.postings) {
            if (p.doc != last) ++df;
            last = p.doc;
        }
        stats_.doc_freq.emplace(list.term, df);
    }
    std::array<double, kFieldCount> totals{};
    for (const auto& lengths : field_lengths_) {
        for (std::size_t f = 0; f < kFieldCount; ++f) totals[f] += lengths[f];
    }
    for (std::size_t f = 0; f < kFieldCount; ++f) {
        stats_.avg_field_length[f] =
            (stats_.doc_count > 0 && totals[f] > 0) ? totals[f] / static_cast<double>(stats_.doc_count) : 1.0;
    }
    open_ = true;
}

// Layout (little-endian), documented in docs/index_format.md:
//   magic[8] version:u8 doc_count:u64 term_count:u64
//   doc_count x { doc_id url title headings body : str, lengths: 3 x u32 }
//   term_count x { term: str, n: u32, n x { doc: u32, field: u8, tf: u32 } }
//   trailer: "END\n"
void InvertedIndex::save(const std::filesystem::path& dir) const {
    require_open();
    Writer w;
    w.bytes(kMagic, sizeof kMagic);
    w.u8(kFormatVersion);
    w.u64(docs_.size());
    w.u64(terms_.size());
    for (std::size_t i = 0; i < docs_.size(); ++i) {
        const auto& d = docs_[i];
        w.str(d.doc_id);
        w.str(d.url);
        w.str(d.title);
        w.str(d.headings);
        w.str(d.body);
        for (auto len : field_lengths_[i]) w.u32(len);
    }
    for (const auto& list : terms_) {
        w.str(list.term);
        w.u32(static_cast<std::uint32_t>(list.postings.size()));
        for (const auto& p : list.postings) {
            w.u32(p.doc);
            w.u8(static_cast<std::uint8_t>(p.field));
            w.u32(p.tf);
        }
    }
    w.bytes("END\n", 4);
    write_file_atomic(dir / kFileName, w.take());
}

InvertedIndex InvertedIndex::open(const std::filesystem::path& dir) {
    const auto file = dir / kFileName;
    if (!std::filesystem::exists(file)) throw IoError("no index at " + dir.string());
    const std::string data = read_file(file);
    Reader r(data, file.string());
    if (r.bytes(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic)) {
        throw IoError(file.string() + ": not an index file");
    }
    const auto version = r.u8();
    if (version != kFormatVersion) {
        throw IoError(fmt::format("{}: unsupported index version {} (expected {})", file.string(), version,
                                  kFormatVersion));
    }
    InvertedIndex idx;
    const auto doc_count = r.u64();
    const auto term_count = r.u64();
    idx.docs_.reserve(doc_count);
    idx.field_lengths_.reserve(doc_count);
    for (std::uint64_t i = 0; i < doc_count; ++i) {
        Document d;
        d.doc_id = r.str();
        d.url = r.str();
        d.title = r.str();
        d.headings = r.str();
        d.body = r.str();
        std::array<std::uint32_t, kFieldCount> lengths{};
        for (auto& len : lengths) len = r.u32();
        idx.docs_.push_back(std::move(d));
        idx.field_lengths_.push_back(lengths);
    }
    idx.terms_.reserve(term_count);
    for (std::uint64_t i = 0; i < term_count; ++i) {
        PostingList list;
        list.term = r.str();
        const auto n = r.u32();
        list.postings.reserve(n);
        for (std::uint32_t k = 0; k < n; ++k) {
            Posting p;
            p.doc = r.u32();
            const auto field = r.u8();
            if (field >= kFieldCount || p.doc >= doc_count) throw IoError(file.string() + ": corrupt posting");
            p.field = static_cast<FieldId>(field);
            p.tf = r.u32();
            list.postings.push_back(p);
        }
        idx.terms_.push_back(std::move(list));
    }
    if (r.bytes(4) != "END\n" || !r.done()) throw IoError(file.string() + ": corrupt trailer");
    idx.finalize();
    return idx;
}

void InvertedIndex::require_open() const {
    if (!open_) throw IoError("index is not open");
}

const Document& InvertedIndex::document(std::uint32_t ordinal) const {
    require_open();
    return docs_.at(ordinal);
}

std::optional<std::uint32_t> InvertedIndex::find(std::string_view doc_id) const {
    require_open();
    auto it = doc_lookup_.find(std::string(doc_id));
    if (it == doc_lookup_.end()) return std::nullopt;
    return it->second;
}

const PostingList* InvertedIndex::postings(std::string_view term) const {
    require_open();
    auto it = term_lookup_.find(std::string(term));
    return it == term_lookup_.end() ? nullptr : &terms_[it->second];
}

std::uint32_t InvertedIndex::field_length(std::uint32_t ordinal, FieldId field) const {
    require_open();
    return field_lengths_.at(ordinal)[static_cast<std::size_t>(field)];
}

std::uint32_t InvertedIndex::term_frequency(std::string_view term, std::uint32_t ordinal, FieldId field) const {
    const auto* list = postings(term);
    if (!list) return 0;
    auto it = std::lower_bound(list->postings.begin(), list->postings.end(), std::pair{ordinal, field},
                               [](const Posting& p, const std::pair<std::uint32_t, FieldId>& key) {
                                   return std::pair{p.doc, p.field} < key;
                               });
    if (it == list->postings.end() || it->doc != ordinal || it->field != field) return 0;
    return it->tf;
}

double InvertedIndex::bm25_score(std::span<const std::string> query_terms, std::uint32_t ordinal,
                                 const Bm25Params& params) const {
    require_open();
    double total = 0.0;
    for (const auto& t : query_terms) {
        const auto df = stats_.df(t);
        if (df == 0) continue;
        const double idf = bm25_idf(stats_.doc_count, df);
        double term_score = 0.0;
        for (auto f : kFields) {
            const auto tf = term_frequency(t, ordinal, f);
            if (tf == 0) continue;
            const auto fi = static_cast<std::size_t>(f);
            term_score += params.field_weights[fi] * idf *
                          bm25_tf_norm(tf, field_lengths_[ordinal][fi], stats_.avg_field_length[fi], params);
        }
        total += term_score;
    }
    return total;
}

InvertedIndex::ScoredDocs InvertedIndex::evaluate_term(const query::Term& term, const Bm25Params& params) const {
    ScoredDocs out;
    const auto* list = postings(term.text);
    if (!list) return out;
    const double idf = bm25_idf(stats_.doc_count, stats_.df(term.text));
    for (std::size_t i = 0; i < list->postings.size();) {
        const auto doc = list->postings[i].doc;
        double field_sum = 0.0;
        bool matched = false;
        for (; i < list->postings.size() && list->postings[i].doc == doc; ++i) {
            const auto& p = list->postings[i];
            const bool wanted = term.field == query::Field::all ||
                                static_cast<int>(term.field) == static_cast<int>(p.field);
            if (!wanted) continue;
            const auto fi = static_cast<std::size_t>(p.field);
            field_sum += params.field_weights[fi] * idf *
                         bm25_tf_norm(p.tf, field_lengths_[doc][fi], stats_.avg_field_length[fi], params);
            matched = true;
        }
        if (matched) out.emplace_back(doc, term.boost * field_sum);
    }
    return out;
}

InvertedIndex::ScoredDocs InvertedIndex::evaluate(const query::QueryNode& node, const Bm25Params& params) const {
    if (node.is_term()) return evaluate_term(node.term(), params);

    const auto& children = node.children();
    ScoredDocs acc = evaluate(children.front(), params);
    for (std::size_t c = 1; c < children.size(); ++c) {
        if (node.is_and() && acc.empty()) break;
        ScoredDocs next = evaluate(children[c], params);
        ScoredDocs merged;
        merged.reserve(node.is_and() ? std::min(acc.size(), next.size()) : acc.size() + next.size());
        std::size_t i = 0, j = 0;
        while (i < acc.size() || j < next.size()) {
            if (j == next.size() || (i < acc.size() && acc[i].first < next[j].first)) {
                if (node.is_or()) merged.push_back(acc[i]);
                ++i;
            } else if (i == acc.size() || next[j].first < acc[i].first) {
                if (node.is_or()) merged.push_back(next[j]);
                ++j;
            } else {
                merged.emplace_back(acc[i].first, acc[i].second + next[j].second);
                ++i;
                ++j;
            }
        }
        acc = std::move(merged);
    }
    return acc;
}

std::vector<SearchHit> InvertedIndex::search(const query::QueryNode& plan, std::size_t k,
                                             const Bm25Params& params) const {
    require_open();
    if (k == 0) throw DataError("search depth k must be at least 1");
    query::validate(plan);
    auto scored = evaluate(plan, params);
    auto better = [this](const std::pair<std::uint32_t, double>& a, const std::pair<std::uint32_t, double>& b) {
        if (a.second != b.second) return a.second > b.second;
        return docs_[a.first].doc_id < docs_[b.first].doc_id;
    };
    const std::size_t n = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), better);
    std::vector<SearchHit> hits;
    hits.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        hits.push_back(SearchHit{docs_[scored[i].first].doc_id, scored[i].first, scored[i].second});
    }
    return hits;
}

IngestReport ingest(const std::filesystem::path& corpus_path, const std::filesystem::path& index_dir,
                    IngestOptions options) {
    auto read = read_documents_jsonl(corpus_path, JsonlReadOptions{options.lenient});
    auto idx = InvertedIndex::build(std::move(read.documents));
    idx.save(index_dir);
    return IngestReport{idx.stats(), read.skipped_lines};
}

}  // namespace dragun::index
