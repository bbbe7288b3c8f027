#include "dragun/evaluation/evaluation.hpp"

#include "dragun/error.hpp"
#include "dragun/io.hpp"
#include "dragun/questions/question.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>

namespace dragun::evaluation {
namespace {

nlohmann::json parse_json_file(const std::filesystem::path& path) {
    const auto text = read_file(path);
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw DataError(fmt::format("{}: not valid JSON", path.string()));
    return j;
}

const std::vector<std::string> kColumns{"tfidf_cosine", "jaccard", "embed_cosine", "currency",
                                        "relevance",    "authority", "accuracy",   "purpose"};

std::vector<std::optional<double>> metric_values(const nlohmann::json& quality) {
    std::vector<std::optional<double>> v(kColumns.size());
    if (!quality.is_object()) return v;
    for (std::size_t c = 0; c < 3; ++c) {
        if (quality.contains(kColumns[c]) && quality[kColumns[c]].is_number()) v[c] = quality[kColumns[c]].get<double>();
    }
    if (quality.contains("craap") && quality["craap"].is_object()) {
        for (std::size_t c = 3; c < kColumns.size(); ++c) {
            const auto& craap = quality["craap"];
            if (craap.contains(kColumns[c]) && craap[kColumns[c]].is_number()) v[c] = craap[kColumns[c]].get<double>();
        }
    }
    return v;
}

std::string cell(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); }
std::string text_cell(const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string("-"); }

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

int weight(Importance i) {
    switch (i) {
        case Importance::have_to_know: return 4;
        case Importance::good_to_know: return 2;
        case Importance::nice_to_know: return 1;
    }
    return 1;
}

std::string_view to_string(Importance i) {
    switch (i) {
        case Importance::have_to_know: return "have_to_know";
        case Importance::good_to_know: return "good_to_know";
        case Importance::nice_to_know: return "nice_to_know";
    }
    return "nice_to_know";
}

Importance parse_importance(std::string_view s) {
    for (auto i : {Importance::have_to_know, Importance::good_to_know, Importance::nice_to_know}) {
        if (to_string(i) == s) return i;
    }
    throw DataError(fmt::format("unknown importance '{}'", s));
}

double points(SimilarityLabel l) {
    switch (l) {
        case SimilarityLabel::very_similar: return 1.0;
        case SimilarityLabel::similar: return 0.5;
        case SimilarityLabel::different: return 0.0;
        case SimilarityLabel::very_different: return 0.0;
    }
    return 0.0;
}

std::string_view to_string(SimilarityLabel l) {
    switch (l) {
        case SimilarityLabel::very_similar: return "very_similar";
        case SimilarityLabel::similar: return "similar";
        case SimilarityLabel::different: return "different";
        case SimilarityLabel::very_different: return "very_different";
    }
    return "very_different";
}

SimilarityLabel parse_label(std::string_view s) {
    for (auto l : {SimilarityLabel::very_similar, SimilarityLabel::similar, SimilarityLabel::different,
                   SimilarityLabel::very_different}) {
        if (to_string(l) == s) return l;
    }
    throw DataError(fmt::format("unknown similarity label '{}'", s));
}

std::vector<RubricEntry> rubric_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw DataError("rubric must be a JSON array");
    std::vector<RubricEntry> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& e = j[i];
        if (!e.is_object() || !e.contains("question") || !e["question"].is_string() || !e.contains("importance") ||
            !e["importance"].is_string()) {
            throw DataError(fmt::format("rubric entry {} needs string \"question\" and \"importance\"", i));
        }
        out.push_back({e["question"].get<std::string>(), parse_importance(e["importance"].get<std::string>())});
    }
    return out;
}

std::vector<RubricEntry> load_rubric(const std::filesystem::path& path) { return rubric_from_json(parse_json_file(path)); }

std::vector<SimilarityJudgment> judgments_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw DataError("judgments must be a JSON array");
    std::vector<SimilarityJudgment> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& e = j[i];
        if (!e.is_object() || !e.contains("rubric_index") || !e["rubric_index"].is_number_unsigned() ||
            !e.contains("matches") || !e["matches"].is_array()) {
            throw DataError(fmt::format("judgment {} needs \"rubric_index\" and a \"matches\" list", i));
        }
        SimilarityJudgment sj;
        sj.rubric_index = e["rubric_index"].get<std::size_t>();
        for (const auto& m : e["matches"]) {
            if (!m.is_object() || !m.contains("system_index") || !m["system_index"].is_number_unsigned() ||
                !m.contains("label") || !m["label"].is_string()) {
                throw DataError(fmt::format("judgment {} has a match without system_index and label", i));
            }
            sj.matches.push_back({m["system_index"].get<std::size_t>(), parse_label(m["label"].get<std::string>())});
        }
        out.push_back(std::move(sj));
    }
    return out;
}

std::vector<SimilarityJudgment> load_judgments(const std::filesystem::path& path) {
    return judgments_from_json(parse_json_file(path));
}

nlohmann::json to_json(std::span<const SimilarityJudgment> judgments) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& j : judgments) {
        nlohmann::json matches = nlohmann::json::array();
        for (const auto& m : j.matches) matches.push_back({{"system_index", m.system_index}, {"label", to_string(m.label)}});
        out.push_back({{"rubric_index", j.rubric_index}, {"matches", std::move(matches)}});
    }
    return out;
}

std::vector<QuestionMatch> match_questions(const llm::Gateway& gateway, std::span<const RubricEntry> rubric,
                                           std::span<const std::string> system_questions, int top_m) {
    if (system_questions.empty()) throw DataError("no system questions to match against");
    if (top_m < 1) throw DataError(fmt::format("top_m must be >= 1, got {}", top_m));
    if (rubric.empty()) return {};

    std::vector<std::string> rubric_texts;
    for (const auto& r : rubric) rubric_texts.push_back(r.question);
    const auto re = gateway.embed(rubric_texts);
    const auto se = gateway.embed(system_questions);

    const auto m = std::min<std::size_t>(static_cast<std::size_t>(top_m), system_questions.size());
    std::vector<QuestionMatch> out;
    for (std::size_t r = 0; r < rubric.size(); ++r) {
        std::vector<std::pair<double, std::size_t>> scored;
        for (std::size_t s = 0; s < se.size(); ++s) scored.emplace_back(llm::cosine(re[r].vector, se[s].vector), s);
        std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        QuestionMatch qm;
        qm.rubric_index = r;
        for (std::size_t i = 0; i < m; ++i) {
            qm.system_indices.push_back(scored[i].second);
            qm.cosines.push_back(scored[i].first);
        }
        out.push_back(std::move(qm));
    }
    return out;
}

double qgen_score(std::span<const RubricEntry> rubric, std::span<const SimilarityJudgment> judgments, bool normalize) {
    if (judgments.size() != rubric.size()) {
        throw DataError(fmt::format("{} judgments for {} rubric questions", judgments.size(), rubric.size()));
    }
    if (rubric.empty()) throw DataError("empty rubric");
    std::vector<double> best(rubric.size(), -1.0);
    for (const auto& j : judgments) {
        if (j.rubric_index >= rubric.size()) throw DataError(fmt::format("rubric_index {} out of range", j.rubric_index));
        if (best[j.rubric_index] >= 0.0) throw DataError(fmt::format("rubric_index {} judged twice", j.rubric_index));
        double b = 0.0;
        for (const auto& m : j.matches) b = std::max(b, points(m.label));
        best[j.rubric_index] = b;
    }
    double total = 0.0, weights = 0.0;
    for (std::size_t i = 0; i < rubric.size(); ++i) {
        total += weight(rubric[i].importance) * best[i];
        weights += weight(rubric[i].importance);
    }
    return normalize ? total / weights : total / static_cast<double>(rubric.size());
}

std::optional<SimilarityLabel> parse_label_reply(std::string_view reply) {
    std::string low;
    for (char c : reply) low += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    auto pos = low.find("label:");
    std::string_view rest = pos == std::string::npos ? std::string_view(low) : std::string_view(low).substr(pos + 6);
    while (!rest.empty() && (std::isspace(static_cast<unsigned char>(rest.front())) || rest.front() == '*')) {
        rest.remove_prefix(1);
    }
    std::string word;
    for (char c : rest) {
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            word += c;
        } else if (c == ' ' && (word == "very" || word == "not")) {
            word += '_';
        } else {
            break;
        }
    }
    for (auto l : {SimilarityLabel::very_similar, SimilarityLabel::similar, SimilarityLabel::different,
                   SimilarityLabel::very_different}) {
        if (word == to_string(l)) return l;
    }
    return std::nullopt;
}

LlmJudgeResult llm_judge(const llm::Gateway& gateway, std::span<const RubricEntry> rubric,
                         std::span<const std::string> system_questions, std::span<const QuestionMatch> matches) {
    LlmJudgeResult out;
    for (const auto& qm : matches) {
        SimilarityJudgment sj;
        sj.rubric_index = qm.rubric_index;
        for (auto s : qm.system_indices) {
            const llm::Bindings b{{"rubric_question", rubric[qm.rubric_index].question},
                                  {"system_question", system_questions[s]}};
            auto label = parse_label_reply(gateway.chat_template("similarity_judge", b));
            if (!label) label = parse_label_reply(gateway.chat_template_retry("similarity_judge", b));
            if (!label) ++out.unparseable;
            sj.matches.push_back({s, label.value_or(SimilarityLabel::very_different)});
        }
        out.judgments.push_back(std::move(sj));
    }
    return out;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) return std::nullopt;
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Dashboard quality_dashboard(const nlohmann::json& run) {
    if (!run.is_array()) throw DataError("question run must be a JSON array of topics");
    Dashboard d;
    d.columns = kColumns;
    std::vector<std::vector<std::optional<double>>> records;
    for (const auto& topic : run) {
        if (!topic.is_object() || !topic.contains("topic_id") || !topic.contains("questions") ||
            !topic["questions"].is_array()) {
            throw DataError("each topic needs \"topic_id\" and a \"questions\" list");
        }
        TopicRow row;
        row.topic_id = topic["topic_id"].get<std::string>();
        std::vector<double> sums(kColumns.size(), 0.0);
        std::vector<std::size_t> counts(kColumns.size(), 0);
        for (const auto& q : topic["questions"]) {
            ++row.questions;
            if (!q.contains("quality") || !q["quality"].is_object()) continue;
            ++row.with_metrics;
            auto v = metric_values(q["quality"]);
            for (std::size_t c = 0; c < v.size(); ++c) {
                if (v[c]) {
                    sums[c] += *v[c];
                    ++counts[c];
                }
            }
            records.push_back(std::move(v));
        }
        for (std::size_t c = 0; c < kColumns.size(); ++c) {
            row.means.push_back(counts[c] ? std::optional<double>(sums[c] / static_cast<double>(counts[c])) : std::nullopt);
        }
        d.rows.push_back(std::move(row));
    }
    d.correlation.assign(kColumns.size(), std::vector<std::optional<double>>(kColumns.size()));
    for (std::size_t a = 0; a < kColumns.size(); ++a) {
        for (std::size_t b = 0; b < kColumns.size(); ++b) {
            std::vector<double> x, y;
            for (const auto& r : records) {
                if (r[a] && r[b]) {
                    x.push_back(*r[a]);
                    y.push_back(*r[b]);
                }
            }
            d.correlation[a][b] = pearson(x, y);
        }
    }
    return d;
}

std::string dashboard_topics_csv(const Dashboard& d) {
    std::string out = "topic_id,questions,with_metrics";
    for (const auto& c : d.columns) out += ",mean_" + c;
    out += '\n';
    for (const auto& r : d.rows) {
        out += fmt::format("{},{},{}", csv_field(r.topic_id), r.questions, r.with_metrics);
        for (const auto& m : r.means) out += "," + cell(m);
        out += '\n';
    }
    return out;
}

std::string dashboard_correlation_csv(const Dashboard& d) {
    std::string out = "metric";
    for (const auto& c : d.columns) out += "," + c;
    out += '\n';
    for (std::size_t a = 0; a < d.columns.size(); ++a) {
        out += d.columns[a];
        for (const auto& v : d.correlation[a]) out += "," + cell(v);
        out += '\n';
    }
    return out;
}

std::string dashboard_text(const Dashboard& d) {
    std::size_t id_width = 8;
    for (const auto& r : d.rows) id_width = std::max(id_width, r.topic_id.size());
    std::string out = "Question quality per topic (means)\n\n";
    out += fmt::format("{:<{}}  {:>5}", "topic", id_width, "n");
    for (const auto& c : d.columns) out += fmt::format("  {:>12}", c);
    out += '\n';
    for (const auto& r : d.rows) {
        out += fmt::format("{:<{}}  {:>5}", r.topic_id, id_width, r.with_metrics);
        for (const auto& m : r.means) out += fmt::format("  {:>12}", text_cell(m));
        out += '\n';
    }
    out += "\nPearson correlation across questions (- = undefined)\n\n";
    out += fmt::format("{:<12}", "");
    for (const auto& c : d.columns) out += fmt::format("  {:>12}", c);
    out += '\n';
    for (std::size_t a = 0; a < d.columns.size(); ++a) {
        out += fmt::format("{:<12}", d.columns[a]);
        for (const auto& v : d.correlation[a]) out += fmt::format("  {:>12}", text_cell(v));
        out += '\n';
    }
    return out;
}

}  // namespace dragun::evaluation
