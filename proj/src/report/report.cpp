#include "dragun/report/report.hpp"

#include "dragun/error.hpp"
#include "dragun/text/analyzer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

namespace dragun::report {
namespace {

constexpr std::size_t kMaxMarkerLength = 64;

bool has_flag_in(const std::vector<std::string>& flags, std::string_view f) {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

void add_flag(std::vector<std::string>& flags, std::string_view f) {
    if (!has_flag_in(flags, f)) flags.emplace_back(f);
}

void add_unique(std::vector<std::string>& list, const std::string& v) {
    if (std::find(list.begin(), list.end(), v) == list.end()) list.push_back(v);
}

// Calls `replace` with the content of every short "[...]" group; a nullopt
// reply keeps the group unchanged.
std::string map_brackets(std::string_view text, const std::function<std::optional<std::string>(std::string_view)>& replace) {
    std::string out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto open = text.find('[', pos);
        if (open == std::string_view::npos) break;
        const auto close = text.find(']', open + 1);
        if (close == std::string_view::npos) break;
        const auto inner = text.substr(open + 1, close - open - 1);
        if (inner.size() > kMaxMarkerLength || inner.find('[') != std::string_view::npos) {
            out.append(text.substr(pos, open + 1 - pos));
            pos = open + 1;
            continue;
        }
        out.append(text.substr(pos, open - pos));
        if (auto r = replace(inner)) {
            out += *r;
        } else {
            out.append(text.substr(open, close - open + 1));
        }
        pos = close + 1;
    }
    out.append(text.substr(std::min(pos, text.size())));
    return out;
}

std::optional<std::vector<int>> numeric_list(std::string_view inner) {
    std::vector<int> out;
    std::size_t i = 0;
    while (i < inner.size()) {
        while (i < inner.size() && (inner[i] == ' ' || inner[i] == ',')) ++i;
        if (i >= inner.size()) break;
        if (!std::isdigit(static_cast<unsigned char>(inner[i]))) return std::nullopt;
        int v = 0;
        std::size_t digits = 0;
        while (i < inner.size() && std::isdigit(static_cast<unsigned char>(inner[i]))) {
            if (++digits > 6) return std::nullopt;
            v = v * 10 + (inner[i] - '0');
            ++i;
        }
        out.push_back(v);
    }
    if (out.empty()) return std::nullopt;
    return out;
}

std::string tidy(std::string s) {
    std::string out;
    for (char c : s) {
        if (c == ' ' && !out.empty() && out.back() == ' ') continue;
        if ((c == '.' || c == ',' || c == ';' || c == ':') && !out.empty() && out.back() == ' ') out.pop_back();
        out += c;
    }
    while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
    std::size_t start = 0;
    while (start < out.size() && std::isspace(static_cast<unsigned char>(out[start]))) ++start;
    return out.substr(start);
}

std::string first_words(std::string_view text, int n) {
    std::istringstream in{std::string(text)};
    std::string out, w;
    for (int i = 0; i < n && in >> w; ++i) {
        if (!out.empty()) out += ' ';
        out += w;
    }
    return out;
}

std::vector<std::string> cited_ids(std::string_view text, const std::set<std::string>& known) {
    std::vector<std::string> out;
    map_brackets(text, [&](std::string_view inner) -> std::optional<std::string> {
        if (known.contains(std::string(inner))) add_unique(out, std::string(inner));
        return std::nullopt;
    });
    return out;
}

}  // namespace

bool CitedAnswer::has_flag(std::string_view f) const { return has_flag_in(flags, f); }
bool TrustReport::has_flag(std::string_view f) const { return has_flag_in(flags, f); }

const std::vector<evidence::EvidenceItem>& choose_evidence(const std::vector<evidence::EvidenceItem>& trusted,
                                                           const std::vector<evidence::EvidenceItem>& relevant) {
    return trusted.empty() ? relevant : trusted;
}

CitationRewrite rewrite_citations(std::string_view text, std::span<const std::string> ids) {
    CitationRewrite r;
    const std::set<std::string> known(ids.begin(), ids.end());
    const auto replaced = map_brackets(text, [&](std::string_view inner) -> std::optional<std::string> {
        if (known.contains(std::string(inner))) {
            add_unique(r.citations, std::string(inner));
            return "[" + std::string(inner) + "]";
        }
        const auto nums = numeric_list(inner);
        if (!nums) return std::nullopt;
        std::string out;
        for (int n : *nums) {
            if (n >= 1 && static_cast<std::size_t>(n) <= ids.size()) {
                const auto& id = ids[static_cast<std::size_t>(n - 1)];
                add_unique(r.citations, id);
                out += "[" + id + "]";
            } else {
                ++r.dropped;
            }
        }
        return out;
    });
    r.text = tidy(replaced);
    return r;
}

int count_words(std::string_view text) {
    const auto stripped = map_brackets(text, [](std::string_view) -> std::optional<std::string> { return " "; });
    std::istringstream in(stripped);
    int n = 0;
    std::string w;
    while (in >> w) {
        if (std::any_of(w.begin(), w.end(), [](char c) {
                return std::isalnum(static_cast<unsigned char>(c)) || static_cast<unsigned char>(c) >= 0x80;
            })) {
            ++n;
        }
    }
    return n;
}

std::size_t longest_shared_run(std::string_view a, std::string_view b) {
    const auto x = text::raw_words(a);
    const auto y = text::raw_words(b);
    std::vector<std::size_t> prev(y.size() + 1, 0), cur(y.size() + 1, 0);
    std::size_t best = 0;
    for (std::size_t i = 1; i <= x.size(); ++i) {
        for (std::size_t j = 1; j <= y.size(); ++j) {
            cur[j] = x[i - 1] == y[j - 1] ? prev[j - 1] + 1 : 0;
            best = std::max(best, cur[j]);
        }
        std::swap(prev, cur);
    }
    return best;
}

std::string truncate_to_words(std::string_view text, int max_words) {
    if (count_words(text) <= max_words) return std::string(text);
    std::vector<std::size_t> ends;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c != '.' && c != '!' && c != '?') continue;
        std::size_t j = i + 1;
        while (j < text.size() && text[j] == '[') {
            const auto close = text.find(']', j);
            if (close == std::string_view::npos) break;
            j = close + 1;
        }
        if (j == text.size() || std::isspace(static_cast<unsigned char>(text[j]))) ends.push_back(j);
    }
    std::string best;
    for (std::size_t end : ends) {
        const auto prefix = text.substr(0, end);
        if (count_words(prefix) > max_words) break;
        best = std::string(prefix);
    }
    if (!best.empty()) return tidy(best);

    std::istringstream in{std::string(text)};
    std::string out, w;
    std::string probe;
    while (in >> w) {
        probe = out.empty() ? w : out + " " + w;
        if (count_words(probe) > max_words) break;
        out = probe;
    }
    return out;
}

CitedAnswer answer_question(const llm::Gateway& gateway, std::string_view question,
                            std::span<const evidence::EvidenceItem> evidence, const index::InvertedIndex& index,
                            const AnswerOptions& options) {
    CitedAnswer answer;
    answer.question = std::string(question);
    if (evidence.empty()) {
        answer.answer_text = llm::render_template(gateway.prompts().snippet("insufficient_evidence"),
                                                  {{"question", std::string(question)}});
        answer.flags.emplace_back(kFlagNoEvidence);
        return answer;
    }

    std::vector<std::string> ids;
    std::string lines;
    for (std::size_t i = 0; i < evidence.size(); ++i) {
        const auto& doc = index.document(evidence[i].ordinal);
        ids.push_back(doc.doc_id);
        std::string snippet = first_words(doc.body, options.snippet_words);
        std::replace(snippet.begin(), snippet.end(), '\n', ' ');
        lines += fmt::format("[{}] {}", i + 1, snippet);
        if (!doc.title.empty()) lines += fmt::format(" (source title: {})", doc.title);
        lines += '\n';
    }
    const llm::Bindings b{{"question", std::string(question)},
                          {"evidence_count", std::to_string(evidence.size())},
                          {"evidence", lines}};

    auto r = rewrite_citations(gateway.chat_template("answer_question", b), ids);
    if (r.citations.empty()) {
        auto again = rewrite_citations(gateway.chat_template_retry("answer_question", b), ids);
        if (!again.citations.empty() || r.text.empty()) r = std::move(again);
    }
    answer.answer_text = r.text;
    answer.citations = r.citations;
    if (r.dropped > 0) add_flag(answer.flags, kFlagCitationOutOfRange);
    if (answer.citations.empty()) add_flag(answer.flags, kFlagNoCitations);

    for (const auto& item : evidence) {
        const auto run = longest_shared_run(answer.answer_text, index.document(item.ordinal).body);
        if (run > static_cast<std::size_t>(options.max_verbatim_tokens)) {
            add_flag(answer.flags, kFlagVerbatimOverlap);
            break;
        }
    }
    return answer;
}

TrustReport synthesize_report(const llm::Gateway& gateway, std::string_view topic_id, std::string_view topic_title,
                              std::vector<CitedAnswer> answers, const ReportOptions& options) {
    if (answers.empty()) throw DataError(fmt::format("topic '{}' has no answers to report on", topic_id));
    if (options.max_words < 1) throw ConfigError("max_words must be >= 1");

    TrustReport report;
    report.topic_id = std::string(topic_id);

    std::vector<std::string> sources;
    for (const auto& a : answers) {
        for (const auto& c : a.citations) add_unique(sources, c);
    }
    std::map<std::string, std::size_t, std::less<>> number;
    for (std::size_t i = 0; i < sources.size(); ++i) number.emplace(sources[i], i + 1);

    std::string block;
    for (const auto& a : answers) {
        const auto renumbered = map_brackets(a.answer_text, [&](std::string_view inner) -> std::optional<std::string> {
            const auto it = number.find(inner);
            if (it == number.end()) return std::nullopt;
            return fmt::format("[{}]", it->second);
        });
        std::string flat = renumbered;
        std::replace(flat.begin(), flat.end(), '\n', ' ');
        block += fmt::format("Q: {}\nA: {}\n", a.question, flat);
    }
    const llm::Bindings b{{"max_words", std::to_string(options.max_words)},
                          {"topic_title", std::string(topic_title)},
                          {"source_count", std::to_string(sources.size())},
                          {"answers", block}};

    auto r = rewrite_citations(gateway.chat_template("synthesize_report", b), sources);
    if (count_words(r.text) > options.max_words) {
        auto again = rewrite_citations(gateway.chat_template_retry("synthesize_report", b), sources);
        if (count_words(again.text) <= options.max_words) r = std::move(again);
    }
    if (r.dropped > 0) add_flag(report.flags, kFlagCitationOutOfRange);
    if (count_words(r.text) > options.max_words) {
        r.text = truncate_to_words(r.text, options.max_words);
        add_flag(report.flags, kFlagTruncated);
    }
    report.report_text = r.text;
    report.report_citations = cited_ids(report.report_text, std::set<std::string>(sources.begin(), sources.end()));
    report.word_count = count_words(report.report_text);
    if (std::all_of(answers.begin(), answers.end(), [](const auto& a) { return a.has_flag(kFlagNoEvidence); })) {
        add_flag(report.flags, kFlagLowEvidence);
    }
    report.answers = std::move(answers);
    return report;
}

nlohmann::json to_json(const TrustReport& report) {
    nlohmann::json answers = nlohmann::json::array();
    for (const auto& a : report.answers) {
        answers.push_back({{"question", a.question}, {"answer_text", a.answer_text}, {"citations", a.citations}});
    }
    return {{"topic_id", report.topic_id},
            {"report_text", report.report_text},
            {"citations", report.report_citations},
            {"answers", std::move(answers)}};
}

TrustReport report_from_json(const nlohmann::json& j) {
    TrustReport r;
    r.topic_id = j.at("topic_id").get<std::string>();
    r.report_text = j.at("report_text").get<std::string>();
    r.report_citations = j.at("citations").get<std::vector<std::string>>();
    for (const auto& a : j.at("answers")) {
        r.answers.push_back(CitedAnswer{a.at("question").get<std::string>(), a.at("answer_text").get<std::string>(),
                                        a.at("citations").get<std::vector<std::string>>(), {}});
    }
    r.word_count = count_words(r.report_text);
    return r;
}

std::vector<std::string> citation_violations(const TrustReport& report, const std::set<std::string>& allowed) {
    std::vector<std::string> bad;
    auto check = [&](const std::vector<std::string>& ids) {
        for (const auto& id : ids) {
            if (!allowed.contains(id)) add_unique(bad, id);
        }
    };
    check(report.report_citations);
    for (const auto& a : report.answers) check(a.citations);
    return bad;
}

}  // namespace dragun::report
