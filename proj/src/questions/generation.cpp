#include "dragun/questions/generation.hpp"

#include "dragun/error.hpp"
#include "dragun/text/analyzer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace dragun::questions {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string_view strip_marker(std::string_view line) {
    if (line.starts_with("\xE2\x80\xA2")) return trim(line.substr(3));  // U+2022 bullet
    if (!line.empty() && (line.front() == '-' || line.front() == '*')) return trim(line.substr(1));
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) return trim(line.substr(i + 1));
    return line;
}

std::vector<std::string> lower_words(std::string_view text) {
    std::vector<std::string> out;
    std::istringstream in{std::string(text)};
    std::string w;
    while (in >> w) {
        std::string clean;
        for (char c : w) {
            if (std::isalpha(static_cast<unsigned char>(c))) clean += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
        out.push_back(std::move(clean));
    }
    return out;
}

bool is_wh(std::string_view w) {
    static const std::set<std::string, std::less<>> kWh{"who", "what", "when", "where", "why", "how", "which", "whose", "whom"};
    return kWh.contains(w);
}

bool is_interrogative_lead(std::string_view w) {
    static const std::set<std::string, std::less<>> kAux{"is", "are", "was", "were", "do", "does", "did", "can", "could",
                                                         "should", "would", "will", "has", "have", "had"};
    return is_wh(w) || kAux.contains(w);
}

std::optional<QuestionStatus> parse_filter_reply(std::string_view reply) {
    std::string up;
    for (char c : trim(reply)) up += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (up.starts_with("COMPOUND")) return QuestionStatus::rejected_compound;
    if (up.starts_with("TOO_LONG") || up.starts_with("TOO LONG")) return QuestionStatus::rejected_length;
    if (up.starts_with("VALID")) return QuestionStatus::candidate;
    return std::nullopt;
}

std::optional<int> craap_slot(std::string_view name) {
    if (name == "currency") return 0;
    if (name == "relevance" || name == "relevant") return 1;
    if (name == "authority") return 2;
    if (name == "accuracy") return 3;
    if (name == "purpose") return 4;
    return std::nullopt;
}

}  // namespace

std::vector<std::string> parse_question_lines(std::string_view reply) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= reply.size()) {
        std::size_t end = reply.find('\n', pos);
        if (end == std::string_view::npos) end = reply.size();
        const auto text = strip_marker(trim(reply.substr(pos, end - pos)));
        if (text.size() > 1 && text.back() == '?') out.emplace_back(text);
        pos = end + 1;
    }
    return out;
}

GenerationResult generate_questions(const llm::Gateway& gateway, const index::Document& article,
                                    GenerationOptions options) {
    if (trim(article.body).empty()) throw DataError(fmt::format("article '{}' has an empty body", article.doc_id));
    if (options.n_target < 1) throw DataError(fmt::format("n_target must be >= 1, got {}", options.n_target));
    if (options.slack < 0) throw DataError("slack must be >= 0");

    const llm::Bindings bindings{{"count", std::to_string(options.n_target)},
                                 {"title", article.title},
                                 {"url", article.url},
                                 {"body", article.body}};
    GenerationResult result;
    auto lines = parse_question_lines(gateway.chat_template("question_generation", bindings));
    if (lines.empty()) {
        result.reprompted = true;
        lines = parse_question_lines(gateway.chat_template_retry("question_generation", bindings));
    }
    if (lines.empty()) {
        throw DataError(fmt::format("no questions could be parsed for article '{}'", article.doc_id));
    }
    const auto cap = static_cast<std::size_t>(options.n_target + options.slack);
    if (lines.size() > cap) lines.resize(cap);
    for (auto& line : lines) {
        result.questions.push_back(Question{article.doc_id, std::move(line), std::nullopt, QuestionStatus::candidate, std::nullopt});
    }
    return result;
}

std::size_t word_count(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::size_t n = 0;
    std::string w;
    while (in >> w) ++n;
    return n;
}

bool is_compound(std::string_view question) {
    if (std::count(question.begin(), question.end(), '?') > 1) return true;
    const auto words = lower_words(question);
    if (words.empty() || !is_interrogative_lead(words.front())) return false;
    for (std::size_t i = 1; i + 1 < words.size(); ++i) {
        if ((words[i] == "and" || words[i] == "or") && is_wh(words[i + 1])) return true;
    }
    return false;
}

std::vector<Question> semantic_filter(std::span<const Question> questions, int max_words) {
    std::vector<Question> out(questions.begin(), questions.end());
    for (auto& q : out) {
        if (is_compound(q.text)) {
            q.status = QuestionStatus::rejected_compound;
        } else if (word_count(q.text) > static_cast<std::size_t>(std::max(max_words, 0))) {
            q.status = QuestionStatus::rejected_length;
        }
    }
    return out;
}

std::vector<Question> llm_filter(const llm::Gateway& gateway, std::span<const Question> questions, int max_words) {
    std::vector<Question> out(questions.begin(), questions.end());
    for (auto& q : out) {
        const llm::Bindings b{{"max_words", std::to_string(max_words)}, {"question", q.text}};
        auto verdict = parse_filter_reply(gateway.chat_template("question_filter", b));
        if (!verdict) verdict = parse_filter_reply(gateway.chat_template_retry("question_filter", b));
        if (verdict && *verdict != QuestionStatus::candidate) q.status = *verdict;
    }
    return out;
}

SelectionResult select_diverse(const llm::Gateway& gateway, std::span<const Question> candidates, int k,
                               std::uint64_t seed) {
    if (k <= 0) throw DataError(fmt::format("selection needs k >= 1, got {}", k));
    SelectionResult result;
    std::vector<Question> pool;
    for (const auto& q : candidates) {
        if (q.status == QuestionStatus::candidate) pool.push_back(q);
    }
    if (pool.empty()) {
        result.fewer_than_k = true;
        return result;
    }

    std::vector<std::string> texts;
    texts.reserve(pool.size());
    for (const auto& q : pool) texts.push_back(q.text);
    const auto embeddings = gateway.embed(texts);

    std::vector<Point> points;
    points.reserve(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        pool[i].embedding = embeddings[i];
        Point p(embeddings[i].vector.begin(), embeddings[i].vector.end());
        double norm = 0.0;
        for (double v : p) norm += v * v;
        norm = std::sqrt(norm);
        if (norm > 0.0) {
            for (double& v : p) v /= norm;
        }
        points.push_back(std::move(p));
    }

    if (pool.size() < static_cast<std::size_t>(k)) {
        result.fewer_than_k = true;
        for (auto& q : pool) {
            q.status = QuestionStatus::selected;
            result.selected.push_back(std::move(q));
        }
        return result;
    }

    result.clusters = kmeans(points, k, seed);
    for (std::size_t idx : result.clusters->selected_indices) {
        Question q = pool[idx];
        q.status = QuestionStatus::selected;
        result.selected.push_back(std::move(q));
    }
    return result;
}

double jaccard(std::span<const std::string> a, std::span<const std::string> b) {
    const std::set<std::string, std::less<>> sa(a.begin(), a.end());
    const std::set<std::string, std::less<>> sb(b.begin(), b.end());
    if (sa.empty() && sb.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& t : sa) inter += sb.contains(t) ? 1 : 0;
    return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

double tfidf_cosine(std::span<const std::string> a, std::span<const std::string> b, const index::IndexStats& idf) {
    std::map<std::string, std::pair<double, double>, std::less<>> tf;
    for (const auto& t : a) tf[t].first += 1.0;
    for (const auto& t : b) tf[t].second += 1.0;
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [term, counts] : tf) {
        const double w = index::bm25_idf(idf.doc_count, std::min<std::uint64_t>(idf.df(term), idf.doc_count));
        const double x = counts.first * w;
        const double y = counts.second * w;
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na <= 0.0 || nb <= 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

std::optional<CraapScores> parse_craap(std::string_view reply) {
    std::array<std::optional<int>, 5> slots;
    std::size_t pos = 0;
    while (pos <= reply.size()) {
        std::size_t end = reply.find('\n', pos);
        if (end == std::string_view::npos) end = reply.size();
        const auto line = trim(reply.substr(pos, end - pos));
        pos = end + 1;
        const auto colon = line.find(':');
        if (colon == std::string_view::npos) continue;
        std::string name;
        for (char c : trim(line.substr(0, colon))) {
            if (std::isalpha(static_cast<unsigned char>(c))) name += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
        const auto slot = craap_slot(name);
        const auto value = trim(line.substr(colon + 1));
        if (!slot || value.empty() || !std::isdigit(static_cast<unsigned char>(value.front()))) continue;
        if (value.size() > 1 && std::isdigit(static_cast<unsigned char>(value[1]))) continue;
        const int v = value.front() - '0';
        if (v < 1 || v > 5) continue;
        slots[static_cast<std::size_t>(*slot)] = v;
    }
    for (const auto& s : slots) {
        if (!s) return std::nullopt;
    }
    return CraapScores{*slots[0], *slots[1], *slots[2], *slots[3], *slots[4]};
}

QualityMetrics quality_metrics(const llm::Gateway& gateway, const Question& question, const index::Document& article,
                               const index::IndexStats& idf) {
    QualityMetrics m;
    const auto q_tokens = text::analyze(question.text);
    const auto a_tokens = text::analyze(article.body);
    m.tfidf_cosine = tfidf_cosine(q_tokens, a_tokens, idf);
    m.jaccard = jaccard(q_tokens, a_tokens);

    const std::vector<std::string> texts{question.text, article.body};
    const auto e = gateway.embed(texts);
    m.embed_cosine = llm::cosine(e[0].vector, e[1].vector);

    const llm::Bindings b{{"title", article.title}, {"body", article.body}, {"question", question.text}};
    m.craap = parse_craap(gateway.chat_template("craap_scoring", b));
    if (!m.craap) m.craap = parse_craap(gateway.chat_template_retry("craap_scoring", b));
    m.craap_flagged = !m.craap.has_value();
    return m;
}

}  // namespace dragun::questions
