#include "dragun/expansion/query_plan.hpp"

#include "dragun/error.hpp"
#include "dragun/text/analyzer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace dragun::expansion {

using query::Field;
using query::QueryNode;

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        out.push_back(text.substr(pos, end - pos));
        pos = end + 1;
    }
    return out;
}

std::string clean_phrase(std::string_view line) {
    auto s = trim(line);
    if (s.starts_with("\xE2\x80\xA2")) s = trim(s.substr(3));
    while (!s.empty() && (s.front() == '-' || s.front() == '*')) s = trim(s.substr(1));
    std::size_t i = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (i > 0 && i < s.size() && (s[i] == '.' || s[i] == ')')) s = trim(s.substr(i + 1));
    auto strip = [](char c) { return c == '"' || c == '\'' || c == '`' || c == ',' || c == '.' || c == ';'; };
    while (!s.empty() && strip(s.front())) s.remove_prefix(1);
    while (!s.empty() && strip(s.back())) s.remove_suffix(1);
    return std::string(trim(s));
}

std::vector<std::string> distinct_tokens(std::string_view text) {
    std::vector<std::string> out;
    for (auto& t : text::analyze(text)) {
        if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(std::move(t));
    }
    return out;
}

QueryPlan fallback_plan(std::string_view question, Strategy requested, std::string reason, std::string rejected) {
    auto plan = plan_baseline(question);
    plan.requested = requested;
    plan.fallback = true;
    plan.fallback_reason = std::move(reason);
    plan.rejected_output = std::move(rejected);
    return plan;
}

QueryNode map_match(const nlohmann::json& match, std::vector<std::string>& warnings) {
    if (!match.is_object() || match.size() != 1) throw DataError("match must hold exactly one field");
    const std::string field_name = match.begin().key();
    const nlohmann::json& spec = match.begin().value();
    auto field = query::parse_field(field_name);
    if (!field) {
        warnings.push_back(fmt::format("unknown field '{}' searched in all fields", field_name));
        field = Field::all;
    }
    if (!spec.is_object() || !spec.contains("query")) throw DataError("match field needs a \"query\" object");
    for (const auto& [key, value] : spec.items()) {
        if (key != "query" && key != "boost") throw DataError(fmt::format("unexpected key '{}' in match", key));
    }
    if (!spec["query"].is_string()) throw DataError("match query must be a string");
    double boost = 1.0;
    if (spec.contains("boost")) {
        if (!spec["boost"].is_number()) throw DataError("boost must be a number");
        boost = spec["boost"].get<double>();
        if (!(boost > 0.0) || !std::isfinite(boost)) throw DataError(fmt::format("boost must be > 0, got {}", boost));
    }
    auto node = phrase_node(spec["query"].get<std::string>(), *field, boost);
    if (!node) throw DataError("match query has no searchable terms");
    return *node;
}

QueryNode map_bool(const nlohmann::json& q, std::vector<std::string>& warnings, int depth) {
    if (depth > query::kMaxDepth) throw DataError("query nests too deeply");
    if (!q.is_object() || q.size() != 1 || !q.contains("bool")) throw DataError("expected {\"bool\": {...}}");
    const auto& body = q["bool"];
    if (!body.is_object()) throw DataError("bool must be an object");
    for (const auto& [key, value] : body.items()) {
        if (key != "must" && key != "should") throw DataError(fmt::format("unexpected key '{}' in bool", key));
        if (!value.is_array()) throw DataError(fmt::format("'{}' must be a list", key));
    }
    auto clauses = [&](const char* key) {
        std::vector<QueryNode> out;
        if (!body.contains(key)) return out;
        for (const auto& clause : body[key]) {
            if (!clause.is_object() || clause.size() != 1) throw DataError("clause must be a match or bool object");
            if (clause.contains("match")) {
                out.push_back(map_match(clause["match"], warnings));
            } else if (clause.contains("bool")) {
                out.push_back(map_bool(clause, warnings, depth + 1));
            } else {
                throw DataError(fmt::format("unexpected clause '{}'", clause.items().begin().key()));
            }
        }
        return out;
    };
    auto must = clauses("must");
    auto should = clauses("should");
    if (must.empty() && should.empty()) throw DataError("bool query has no clauses");
    if (must.empty()) return query::any_of(std::move(should));
    if (!should.empty()) must.push_back(query::any_of(std::move(should)));
    return query::all_of(std::move(must));
}

}  // namespace

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::baseline: return "baseline";
        case Strategy::boolean: return "boolean";
        case Strategy::cot: return "cot";
        case Strategy::structured: return "structured";
    }
    return "baseline";
}

Strategy parse_strategy(std::string_view name) {
    for (auto s : kAllStrategies) {
        if (to_string(s) == name) return s;
    }
    throw ConfigError(fmt::format("unknown strategy '{}' (expected baseline, boolean, cot or structured)", name));
}

QueryPlan plan_baseline(std::string_view question) {
    const auto tokens = distinct_tokens(question);
    if (tokens.empty()) throw DataError("empty query");
    QueryPlan plan;
    plan.source_question = std::string(question);
    if (tokens.size() == 1) {
        plan.ast = query::term(tokens.front());
    } else {
        std::vector<QueryNode> children;
        for (const auto& t : tokens) children.push_back(query::term(t));
        plan.ast = query::any_of(std::move(children));
    }
    return plan;
}

std::optional<QueryNode> phrase_node(std::string_view phrase, Field field, double boost) {
    const auto tokens = distinct_tokens(phrase);
    if (tokens.empty()) return std::nullopt;
    if (tokens.size() == 1) return query::term(tokens.front(), field, boost);
    std::vector<QueryNode> children;
    for (const auto& t : tokens) children.push_back(query::term(t, field, boost));
    return query::all_of(std::move(children));
}

std::vector<std::string> parse_keyphrases(std::string_view reply, int max_terms) {
    std::vector<std::string> out;
    for (auto line : split_lines(reply)) {
        if (static_cast<int>(out.size()) >= max_terms) break;
        if (trim(line).ends_with(":")) continue;
        auto phrase = clean_phrase(line);
        if (phrase.empty() || text::analyze(phrase).empty()) continue;
        out.push_back(std::move(phrase));
    }
    return out;
}

std::optional<std::vector<std::string>> parse_terms_line(std::string_view reply) {
    const auto lines = split_lines(reply);
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        auto line = trim(*it);
        while (!line.empty() && line.front() == '*') line.remove_prefix(1);
        if (line.size() < 6) continue;
        std::string head;
        for (char c : line.substr(0, 6)) head += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (head != "TERMS:") continue;
        auto rest = line.substr(6);
        while (!rest.empty() && rest.front() == '*') rest.remove_prefix(1);
        std::vector<std::string> terms;
        std::size_t pos = 0;
        while (pos <= rest.size()) {
            std::size_t end = rest.find(';', pos);
            if (end == std::string_view::npos) end = rest.size();
            auto t = clean_phrase(rest.substr(pos, end - pos));
            if (!t.empty() && !text::analyze(t).empty()) terms.push_back(std::move(t));
            pos = end + 1;
        }
        if (terms.empty()) return std::nullopt;
        return terms;
    }
    return std::nullopt;
}

QueryNode combine_with_baseline(const QueryNode& baseline, std::span<const std::string> phrases, Combine combine) {
    std::set<std::string> base_tokens;
    for (const auto* t : query::leaves(baseline)) base_tokens.insert(t->text);

    std::vector<QueryNode> children{baseline};
    for (const auto& phrase : phrases) {
        auto node = phrase_node(phrase);
        if (!node) continue;
        if (node->is_term() && base_tokens.contains(node->term().text)) continue;
        if (node->is_and()) {
            std::set<std::string> mine;
            for (const auto* t : query::leaves(*node)) mine.insert(t->text);
            if (mine == base_tokens) continue;
        }
        if (std::find(children.begin() + 1, children.end(), *node) != children.end()) continue;
        children.push_back(std::move(*node));
    }
    return combine == Combine::any ? query::any_of(std::move(children)) : query::all_of(std::move(children));
}

QueryPlan plan_boolean(const llm::Gateway& gateway, std::string_view question, const ExpansionOptions& options) {
    auto plan = plan_baseline(question);
    const llm::Bindings b{{"min_terms", std::to_string(options.min_terms)},
                          {"max_terms", std::to_string(options.max_terms)},
                          {"question", std::string(question)}};
    auto reply = gateway.chat_template("boolean_expansion", b);
    auto phrases = parse_keyphrases(reply, options.max_terms);
    if (phrases.empty()) {
        reply = gateway.chat_template_retry("boolean_expansion", b);
        phrases = parse_keyphrases(reply, options.max_terms);
    }
    if (phrases.empty()) return fallback_plan(question, Strategy::boolean, "no keyphrases in reply", reply);
    plan.strategy = plan.requested = Strategy::boolean;
    plan.ast = combine_with_baseline(plan.ast, phrases, options.combine);
    plan.expansion_text = std::move(reply);
    return plan;
}

QueryPlan plan_cot(const llm::Gateway& gateway, std::string_view question, const ExpansionOptions& options) {
    auto plan = plan_baseline(question);
    const llm::Bindings b{{"question", std::string(question)}};
    auto reply = gateway.chat_template("cot_expansion", b);
    auto terms = parse_terms_line(reply);
    if (!terms) {
        reply = gateway.chat_template_retry("cot_expansion", b);
        terms = parse_terms_line(reply);
    }
    if (!terms) return fallback_plan(question, Strategy::cot, "no TERMS line in reply", reply);
    if (static_cast<int>(terms->size()) > options.max_terms) terms->resize(static_cast<std::size_t>(options.max_terms));
    plan.strategy = plan.requested = Strategy::cot;
    plan.ast = combine_with_baseline(plan.ast, *terms, options.combine);
    plan.expansion_text = std::move(reply);
    return plan;
}

DslParse parse_structured_dsl(std::string_view text) {
    auto body = trim(text);
    if (body.starts_with("```")) {
        const auto nl = body.find('\n');
        body = nl == std::string_view::npos ? std::string_view{} : body.substr(nl + 1);
        body = trim(body);
        if (body.ends_with("```")) body = trim(body.substr(0, body.size() - 3));
    }
    const auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded()) throw DataError("reply is not valid JSON");
    DslParse out;
    out.ast = map_bool(j, out.warnings, 1);
    query::validate(out.ast);
    return out;
}

std::vector<std::string> missing_baseline_tokens(const QueryNode& ast, std::string_view question) {
    std::set<std::string> present;
    for (const auto* t : query::leaves(ast)) present.insert(t->text);
    std::vector<std::string> missing;
    for (auto& t : distinct_tokens(question)) {
        if (!present.contains(t)) missing.push_back(std::move(t));
    }
    return missing;
}

QueryPlan plan_structured(const llm::Gateway& gateway, std::string_view question) {
    auto plan = plan_baseline(question);
    const llm::Bindings b{{"question", std::string(question)}};
    std::string reply;
    std::string reason;
    for (int attempt = 0; attempt < 2; ++attempt) {
        reply = attempt == 0 ? gateway.chat_template("structured_expansion", b)
                             : gateway.chat_template_retry("structured_expansion", b);
        try {
            auto parsed = parse_structured_dsl(reply);
            plan.strategy = plan.requested = Strategy::structured;
            plan.ast = std::move(parsed.ast);
            plan.warnings = std::move(parsed.warnings);
            const auto missing = missing_baseline_tokens(plan.ast, question);
            if (!missing.empty()) {
                std::string list;
                for (const auto& t : missing) list += (list.empty() ? "" : ", ") + t;
                plan.warnings.push_back("query omits original terms: " + list);
            }
            plan.expansion_text = std::move(reply);
            return plan;
        } catch (const DataError& e) {
            reason = e.what();
        }
    }
    return fallback_plan(question, Strategy::structured, reason, reply);
}

QueryPlan make_plan(Strategy strategy, const llm::Gateway& gateway, std::string_view question,
                    const ExpansionOptions& options) {
    switch (strategy) {
        case Strategy::baseline: return plan_baseline(question);
        case Strategy::boolean: return plan_boolean(gateway, question, options);
        case Strategy::cot: return plan_cot(gateway, question, options);
        case Strategy::structured: return plan_structured(gateway, question);
    }
    return plan_baseline(question);
}

nlohmann::json to_json(const QueryPlan& plan) {
    nlohmann::json j = {
        {"strategy", to_string(plan.strategy)},
        {"requested_strategy", to_string(plan.requested)},
        {"source_question", plan.source_question},
        {"ast", query::to_json(plan.ast)},
        {"expansion_text", plan.expansion_text ? nlohmann::json(*plan.expansion_text) : nlohmann::json(nullptr)},
        {"fallback", plan.fallback},
    };
    if (plan.fallback) {
        j["fallback_reason"] = plan.fallback_reason;
        j["rejected_output"] = plan.rejected_output ? nlohmann::json(*plan.rejected_output) : nlohmann::json(nullptr);
    }
    if (!plan.warnings.empty()) j["warnings"] = plan.warnings;
    return j;
}

QueryPlan plan_from_json(const nlohmann::json& j) {
    QueryPlan plan;
    plan.strategy = parse_strategy(j.at("strategy").get<std::string>());
    plan.requested = parse_strategy(j.value("requested_strategy", std::string(to_string(plan.strategy))));
    plan.source_question = j.at("source_question").get<std::string>();
    plan.ast = query::from_json(j.at("ast"));
    if (j.contains("expansion_text") && j["expansion_text"].is_string()) plan.expansion_text = j["expansion_text"];
    plan.fallback = j.value("fallback", false);
    plan.fallback_reason = j.value("fallback_reason", std::string());
    if (j.contains("rejected_output") && j["rejected_output"].is_string()) plan.rejected_output = j["rejected_output"];
    if (j.contains("warnings")) plan.warnings = j["warnings"].get<std::vector<std::string>>();
    return plan;
}

}  // namespace dragun::expansion
