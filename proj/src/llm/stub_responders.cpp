// Default replies for the built-in prompt templates. Each responder reads the
// request bindings, derives its content from them, and uses the request hash
// only to vary wording, so equal requests always get equal replies.

#include "dragun/llm/stub_backend.hpp"
#include "dragun/text/analyzer.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

namespace dragun::llm {
namespace {

std::string binding(const ChatRequest& req, std::string_view name, std::string fallback = {}) {
    auto it = req.bindings.find(name);
    return it == req.bindings.end() ? fallback : it->second;
}

int int_binding(const ChatRequest& req, std::string_view name, int fallback) {
    const auto s = binding(req, name);
    int v = fallback;
    std::from_chars(s.data(), s.data() + s.size(), v);
    return v;
}

// Lowercase non-stopword alphabetic words of length >= 3, first occurrence order.
std::vector<std::string> content_words(std::string_view s) {
    const auto& stop = text::english_stopwords();
    std::vector<std::string> out;
    for (auto& w : text::raw_words(s)) {
        if (w.size() < 3 || stop.contains(w)) continue;
        if (!std::all_of(w.begin(), w.end(), [](char c) { return c >= 'a' && c <= 'z'; })) continue;
        if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
    }
    return out;
}

// Most frequent content words, ties broken by first occurrence. When `only`
// is non-empty, words outside it are ignored.
std::vector<std::string> top_words(std::string_view s, std::size_t n, const std::vector<std::string>& only = {}) {
    const auto& stop = text::english_stopwords();
    std::map<std::string, std::pair<int, std::size_t>> counts;
    std::size_t pos = 0;
    for (auto& w : text::raw_words(s)) {
        ++pos;
        if (w.size() < 4 || stop.contains(w)) continue;
        if (!std::all_of(w.begin(), w.end(), [](char c) { return c >= 'a' && c <= 'z'; })) continue;
        if (!only.empty() && std::find(only.begin(), only.end(), w) == only.end()) continue;
        auto [it, inserted] = counts.try_emplace(w, 0, pos);
        ++it->second.first;
    }
    std::vector<std::pair<std::string, std::pair<int, std::size_t>>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second.first != b.second.first) return a.second.first > b.second.first;
        return a.second.second < b.second.second;
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < ranked.size() && i < n; ++i) out.push_back(ranked[i].first);
    return out;
}

std::string first_words(std::string_view s, std::size_t n) {
    std::istringstream in{std::string(s)};
    std::string w, out;
    for (std::size_t i = 0; i < n && in >> w; ++i) {
        if (!out.empty()) out += ' ';
        out += w;
    }
    while (!out.empty() && (out.back() == '.' || out.back() == ',' || out.back() == ';' || out.back() == ':')) {
        out.pop_back();
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

constexpr std::string_view kCannedPhrases[] = {
    "editorial policy", "ownership",        "funding sources",   "fact check",
    "media bias",       "conflict of interest", "press release", "source credibility",
    "corrections policy", "political affiliation",
};

std::string question_generation(const ChatRequest& req, std::uint64_t h) {
    const auto title = binding(req, "title");
    const auto body = binding(req, "body");
    auto words = top_words(body + " " + title, 2, content_words(title));
    if (words.size() < 2) words = top_words(body + " " + title, 2);
    const std::string topic = words.empty() ? "this story" : join(words, " ");
    const std::vector<std::string> valid = {
        "Who owns the outlet that published this article?",
        fmt::format("Who funds the organizations quoted about {}?", topic),
        fmt::format("What expertise does the author have on {}?", topic),
        fmt::format("What evidence supports the central claim about {}?", topic),
        fmt::format("Has the outlet corrected earlier reporting on {}?", topic),
        fmt::format("What do independent fact-checkers say about {}?", topic),
        "What is the publisher's editorial policy on sponsored content?",
        fmt::format("Are the statistics about {} attributed to a verifiable source?", topic),
        fmt::format("How do other reputable outlets report on {}?", topic),
        fmt::format("What financial interests might the quoted experts have in {}?", topic),
        fmt::format("When was the information about {} first published?", topic),
        "Is the headline consistent with the evidence presented in the article?",
        fmt::format("Which perspectives on {} are missing from this article?", topic),
        "Does the article clearly separate opinion from reported fact?",
        fmt::format("What credentials do the experts quoted on {} hold?", topic),
        "What reputation does the publisher have for accuracy?",
        fmt::format("Which primary documents could confirm the claims about {}?", topic),
        fmt::format("Who benefits if readers accept this account of {}?", topic),
        "Has the reporter disclosed any relationship with the people quoted?",
        fmt::format("Why was this story about {} published at this time?", topic),
    };
    const std::vector<std::string> compound = {
        "Who wrote this article? And why was it published now?",
        fmt::format("Who funds the outlet and what do they gain from coverage of {}?", topic),
    };
    const std::string too_long = fmt::format(
        "Considering the publisher's history, the background of every organization mentioned, and the way the "
        "article frames {}, is there any reason to suspect that the overall coverage was shaped by commercial or "
        "political pressure from advertisers?",
        topic);

    const int count = std::max(1, int_binding(req, "count", 10));
    std::vector<std::string> lines;
    const int invalid = count >= 8 ? 3 : 0;
    const std::size_t start = h % valid.size();
    for (int i = 0; i < count - invalid; ++i) lines.push_back(valid[(start + i) % valid.size()]);
    if (invalid) {
        const auto at = [&](std::uint64_t bits) { return static_cast<std::ptrdiff_t>(bits % (lines.size() + 1)); };
        lines.insert(lines.begin() + at(h >> 8), compound[0]);
        lines.insert(lines.begin() + at(h >> 16), compound[1]);
        lines.insert(lines.begin() + at(h >> 24), too_long);
    }
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) out += fmt::format("{}. {}\n", i + 1, lines[i]);
    return out;
}

std::string question_filter(const ChatRequest& req, std::uint64_t) {
    const auto q = binding(req, "question");
    const int max_words = int_binding(req, "max_words", 30);
    std::istringstream in(q);
    int n = 0;
    for (std::string w; in >> w;) ++n;
    if (std::count(q.begin(), q.end(), '?') > 1) return "COMPOUND";
    if (n > max_words) return "TOO_LONG";
    return "VALID";
}

std::string craap_scoring(const ChatRequest&, std::uint64_t h) {
    constexpr std::string_view names[] = {"Currency", "Relevance", "Authority", "Accuracy", "Purpose"};
    std::string out;
    for (int i = 0; i < 5; ++i) out += fmt::format("{}: {}\n", names[i], 1 + (h >> (8 * i)) % 5);
    return out;
}

std::vector<std::string> expansion_terms(const ChatRequest& req, std::uint64_t h) {
    const auto words = content_words(binding(req, "question"));
    std::vector<std::string> terms;
    if (words.size() >= 2) terms.push_back(words[0] + " " + words[1]);
    const std::size_t n = std::size(kCannedPhrases);
    terms.emplace_back(kCannedPhrases[h % n]);
    terms.emplace_back(kCannedPhrases[(h / n + 1 + h % n) % n]);
    for (std::size_t i = 0; i < words.size() && i < 2; ++i) terms.push_back(words[i]);
    std::vector<std::string> unique;
    for (auto& t : terms) {
        if (std::find(unique.begin(), unique.end(), t) == unique.end()) unique.push_back(t);
    }
    return unique;
}

std::string boolean_expansion(const ChatRequest& req, std::uint64_t h) {
    return join(expansion_terms(req, h), "\n") + "\n";
}

std::string cot_expansion(const ChatRequest& req, std::uint64_t h) {
    const auto terms = expansion_terms(req, h);
    const auto words = content_words(binding(req, "question"));
    std::string out = "Step 1: The question asks about ";
    out += words.empty() ? std::string("the article's background") : join(words, ", ");
    out += ".\nStep 2: Useful documents would describe who is behind the claims and how they are funded or "
           "checked.\nStep 3: Such documents tend to use the following vocabulary.\nTERMS: ";
    out += join(terms, "; ");
    out += "\n";
    return out;
}

std::string structured_expansion(const ChatRequest& req, std::uint64_t h) {
    const auto words = content_words(binding(req, "question"));
    nlohmann::json should = nlohmann::json::array();
    if (!words.empty()) {
        should.push_back({{"match", {{"title", {{"query", join(words, " ")}, {"boost", 2.0}}}}}});
    }
    for (const auto& w : words) should.push_back({{"match", {{"all", {{"query", w}, {"boost", 1.0}}}}}});
    should.push_back(
        {{"match", {{"body", {{"query", std::string(kCannedPhrases[h % std::size(kCannedPhrases)])}, {"boost", 0.5}}}}}});
    return nlohmann::json{{"bool", {{"should", should}}}}.dump();
}

std::string relevance_judge(const ChatRequest& req, std::uint64_t) {
    const auto q = text::analyze(binding(req, "question"));
    const auto d = text::analyze(binding(req, "title") + " " + binding(req, "document"));
    const std::set<std::string> qs(q.begin(), q.end());
    const std::set<std::string> ds(d.begin(), d.end());
    std::size_t overlap = 0;
    for (const auto& t : qs) overlap += ds.contains(t);
    if (overlap > 0 && overlap * 3 >= qs.size()) {
        return fmt::format("RELEVANT - the document shares {} of {} key terms with the question.", overlap, qs.size());
    }
    return fmt::format("NOT RELEVANT - the document shares only {} of {} key terms with the question.", overlap,
                       qs.size());
}

std::string answer_question(const ChatRequest& req, std::uint64_t h) {
    const int count = int_binding(req, "evidence_count", 0);
    std::vector<std::string> snippets;
    std::istringstream in(binding(req, "evidence"));
    for (std::string line; std::getline(in, line);) {
        if (line.starts_with("[")) {
            const auto close = line.find("] ");
            snippets.push_back(close == std::string::npos ? line : line.substr(close + 2));
        }
    }
    if (count <= 0 || snippets.empty()) return "There is no evidence to answer this question.";
    std::string out = (h % 2 == 0) ? "According to the retrieved sources, " : "The evidence indicates that ";
    out += first_words(snippets[0], 12) + " [1]";
    if (count >= 2 && snippets.size() >= 2) {
        out += ", while another source notes that " + first_words(snippets[1], 8) + " [2]";
    }
    out += ".";
    return out;
}

std::string synthesize_report(const ChatRequest& req, std::uint64_t) {
    std::vector<std::string> parts;
    std::istringstream in(binding(req, "answers"));
    for (std::string line; std::getline(in, line);) {
        const auto pos = line.find("A: ");
        if (pos != std::string::npos) parts.push_back(line.substr(pos + 3));
    }
    std::string out = "Trustworthiness report for " + binding(req, "topic_title", "the article") + ". ";
    out += join(parts, " ");
    return out;
}

std::string similarity_judge(const ChatRequest& req, std::uint64_t) {
    const auto a = text::analyze(binding(req, "rubric_question"));
    const auto b = text::analyze(binding(req, "system_question"));
    const std::set<std::string> sa(a.begin(), a.end());
    const std::set<std::string> sb(b.begin(), b.end());
    std::size_t inter = 0;
    for (const auto& t : sa) inter += sb.contains(t);
    const std::size_t uni = sa.size() + sb.size() - inter;
    const double j = uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
    const char* label = j >= 0.6 ? "very_similar" : j >= 0.3 ? "similar" : j >= 0.1 ? "different" : "very_different";
    return fmt::format("LABEL: {}", label);
}

}  // namespace

void install_default_responders(StubBackend& stub) {
    stub.register_responder("question_generation", question_generation);
    stub.register_responder("question_filter", question_filter);
    stub.register_responder("craap_scoring", craap_scoring);
    stub.register_responder("boolean_expansion", boolean_expansion);
    stub.register_responder("cot_expansion", cot_expansion);
    stub.register_responder("structured_expansion", structured_expansion);
    stub.register_responder("relevance_judge", relevance_judge);
    stub.register_responder("answer_question", answer_question);
    stub.register_responder("synthesize_report", synthesize_report);
    stub.register_responder("similarity_judge", similarity_judge);
}

}  // namespace dragun::llm
