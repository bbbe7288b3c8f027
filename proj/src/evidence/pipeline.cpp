#include "dragun/evidence/pipeline.hpp"

#include "dragun/error.hpp"

#include <algorithm>
#include <cctype>

namespace dragun::evidence {

bool EvidenceItem::has_flag(std::string_view flag) const {
    return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

void EvidenceItem::add_flag(std::string_view flag) {
    if (!has_flag(flag)) flags.emplace_back(flag);
}

std::vector<EvidenceItem> retrieve(const index::InvertedIndex& index, const query::QueryNode& ast, std::size_t k,
                                   const index::Bm25Params& params) {
    const auto hits = index.search(ast, k, params);
    std::vector<EvidenceItem> out;
    out.reserve(hits.size());
    int rank = 0;
    for (const auto& hit : hits) {
        EvidenceItem item;
        item.doc_id = hit.doc_id;
        item.url = index.document(hit.ordinal).url;
        item.ordinal = hit.ordinal;
        item.bm25_score = hit.score;
        item.bm25_rank = ++rank;
        out.push_back(std::move(item));
    }
    return out;
}

void attach_trust(std::vector<EvidenceItem>& items, const TrustTable& table) {
    for (auto& item : items) {
        const auto t = lookup_trust(table, item.url);
        item.trust = t.score;
        if (t.flagged) item.add_flag(kFlagUrlUnparseable);
    }
}

std::vector<EvidenceItem> rerank(std::string_view question, std::vector<EvidenceItem> items, RelevanceScorer& scorer,
                                 const index::InvertedIndex& index) {
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.bm25_rank < b.bm25_rank; });
    std::vector<std::string> passages;
    passages.reserve(items.size());
    for (const auto& item : items) passages.push_back(index.document(item.ordinal).body);

    auto checked = [&](std::span<const std::string> texts) {
        auto scores = scorer.score(question, texts);
        if (scores.size() != texts.size()) throw DataError("scorer returned a different number of scores");
        return scores;
    };
    auto scores = passages.empty() ? std::vector<std::optional<double>>{} : checked(passages);

    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!scores[i]) missing.push_back(i);
    }
    if (!missing.empty()) {
        std::vector<std::string> again;
        for (auto i : missing) again.push_back(passages[i]);
        const auto retry = checked(again);
        for (std::size_t j = 0; j < missing.size(); ++j) scores[missing[j]] = retry[j];
    }

    std::vector<EvidenceItem> scored, failed;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (scores[i]) {
            items[i].rerank_score = *scores[i];
            scored.push_back(std::move(items[i]));
        } else {
            items[i].rerank_score.reset();
            items[i].rerank_rank.reset();
            items[i].add_flag(kFlagScorerFailed);
            failed.push_back(std::move(items[i]));
        }
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (*a.rerank_score != *b.rerank_score) return *a.rerank_score > *b.rerank_score;
        return a.bm25_rank < b.bm25_rank;
    });
    int rank = 0;
    for (auto& item : scored) item.rerank_rank = ++rank;
    for (auto& item : failed) scored.push_back(std::move(item));
    return scored;
}

RelevanceJudge::RelevanceJudge(const llm::Gateway& gateway, const index::InvertedIndex& index, Options options)
    : gateway_(gateway), index_(index), options_(options) {}

std::optional<bool> RelevanceJudge::parse_verdict(std::string_view reply) {
    std::string up;
    for (char c : reply) up += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    std::string_view s = up;
    while (!s.empty() && (std::isspace(static_cast<unsigned char>(s.front())) || s.front() == '*' ||
                          s.front() == '"' || s.front() == '\'' || s.front() == '`')) {
        s.remove_prefix(1);
    }
    if (s.starts_with("NOT RELEVANT") || s.starts_with("NOT_RELEVANT")) return false;
    if (s.starts_with("RELEVANT")) return true;
    return std::nullopt;
}

Judgement RelevanceJudge::judge(std::string_view question, const EvidenceItem& item) const {
    auto key = std::make_pair(std::string(question), item.doc_id);
    {
        std::lock_guard lock(mu_);
        if (const auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    const auto& doc = index_.document(item.ordinal);
    std::string body = doc.body;
    if (body.size() > options_.max_document_chars) {
        auto cut = body.rfind(' ', options_.max_document_chars);
        body.resize(cut == std::string::npos || cut == 0 ? options_.max_document_chars : cut);
    }
    const llm::Bindings b{{"question", std::string(question)}, {"title", doc.title}, {"document", body}};

    Judgement result;
    std::size_t used = 1;
    auto verdict = parse_verdict(gateway_.chat_template("relevance_judge", b));
    if (!verdict) {
        ++used;
        verdict = parse_verdict(gateway_.chat_template_retry("relevance_judge", b));
    }
    result.relevant = verdict.value_or(false);
    result.flagged = !verdict.has_value();

    std::lock_guard lock(mu_);
    calls_ += used;
    cache_.emplace(std::move(key), result);
    return result;
}

JudgeFn RelevanceJudge::for_question(std::string question) const {
    return [this, q = std::move(question)](const EvidenceItem& item) { return judge(q, item); };
}

std::size_t RelevanceJudge::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

bool ensure_judged(EvidenceItem& item, const JudgeFn& judge) {
    if (item.relevant) return *item.relevant;
    if (!judge) return false;
    const auto j = judge(item);
    item.relevant = j.relevant;
    if (j.flagged) item.add_flag(kFlagJudgeUnparseable);
    return j.relevant;
}

std::vector<EvidenceItem> filter_top10_relevant(std::vector<EvidenceItem>& items, const JudgeFn& judge,
                                                std::size_t window, std::size_t quota) {
    std::vector<EvidenceItem> out;
    for (std::size_t i = 0; i < items.size() && i < window && out.size() < quota; ++i) {
        if (ensure_judged(items[i], judge)) out.push_back(items[i]);
    }
    return out;
}

std::vector<EvidenceItem> filter_top3_trusted(std::vector<EvidenceItem>& items, const JudgeFn& judge,
                                              double threshold, std::size_t window, std::size_t quota) {
    std::vector<EvidenceItem> out;
    for (std::size_t i = 0; i < items.size() && i < window && out.size() < quota; ++i) {
        if (items[i].trust < threshold) continue;
        if (ensure_judged(items[i], judge)) out.push_back(items[i]);
    }
    return out;
}

std::string_view to_string(Stage s) { return s == Stage::pre_rerank ? "pre_rerank" : "post_rerank"; }

RetrievalMetrics compute_metrics(std::vector<EvidenceItem>& items, Stage stage, const JudgeFn& judge) {
    RetrievalMetrics m;
    m.stage = stage;
    m.considered = std::min<std::size_t>(10, items.size());
    if (m.considered == 0) {
        m.flagged = true;
        return m;
    }
    std::size_t relevant = 0;
    double trust = 0.0;
    for (std::size_t i = 0; i < m.considered; ++i) {
        relevant += ensure_judged(items[i], judge) ? 1 : 0;
        trust += items[i].trust;
    }
    m.relevance_at_10 = static_cast<double>(relevant) / static_cast<double>(m.considered);
    m.mean_trust_at_10 = trust / static_cast<double>(m.considered);
    return m;
}

MetricDelta delta(const RetrievalMetrics& post, const RetrievalMetrics& pre) {
    return {post.relevance_at_10 - pre.relevance_at_10, post.mean_trust_at_10 - pre.mean_trust_at_10};
}

nlohmann::json to_json(const EvidenceItem& item) {
    auto opt = [](const auto& o) { return o ? nlohmann::json(*o) : nlohmann::json(nullptr); };
    return {
        {"doc_id", item.doc_id},
        {"url", item.url},
        {"bm25_score", item.bm25_score},
        {"bm25_rank", item.bm25_rank},
        {"rerank_score", opt(item.rerank_score)},
        {"rerank_rank", opt(item.rerank_rank)},
        {"relevant", opt(item.relevant)},
        {"trust", item.trust},
        {"flags", item.flags},
    };
}

EvidenceItem evidence_from_json(const nlohmann::json& j) {
    EvidenceItem item;
    item.doc_id = j.at("doc_id").get<std::string>();
    item.url = j.value("url", std::string());
    item.bm25_score = j.at("bm25_score").get<double>();
    item.bm25_rank = j.at("bm25_rank").get<int>();
    if (j.contains("rerank_score") && !j["rerank_score"].is_null()) item.rerank_score = j["rerank_score"].get<double>();
    if (j.contains("rerank_rank") && !j["rerank_rank"].is_null()) item.rerank_rank = j["rerank_rank"].get<int>();
    if (j.contains("relevant") && !j["relevant"].is_null()) item.relevant = j["relevant"].get<bool>();
    item.trust = j.value("trust", 0.0);
    if (j.contains("flags")) item.flags = j["flags"].get<std::vector<std::string>>();
    return item;
}

}  // namespace dragun::evidence
