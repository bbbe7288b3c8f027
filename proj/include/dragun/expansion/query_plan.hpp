#pragma once

#include "dragun/llm/gateway.hpp"
#include "dragun/query/query_node.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dragun::expansion {

enum class Strategy { baseline, boolean, cot, structured };

std::string_view to_string(Strategy s);
/// Throws ConfigError on an unknown name.
Strategy parse_strategy(std::string_view name);

inline constexpr Strategy kAllStrategies[] = {Strategy::baseline, Strategy::boolean, Strategy::cot,
                                              Strategy::structured};

/// How expansion nodes join the original query at the top level.
enum class Combine { any, all };

struct ExpansionOptions {
    int min_terms = 3;
    int max_terms = 8;
    Combine combine = Combine::any;
};

struct QueryPlan {
    /// The strategy that produced `ast`; baseline after a fallback.
    Strategy strategy = Strategy::baseline;
    Strategy requested = Strategy::baseline;
    query::QueryNode ast;
    std::string source_question;
    /// Raw model output the plan was built from. Absent for baseline plans.
    std::optional<std::string> expansion_text;
    bool fallback = false;
    std::string fallback_reason;
    /// Last unusable model reply when a fallback happened.
    std::optional<std::string> rejected_output;
    std::vector<std::string> warnings;
};

/// Or over one all-fields Term per distinct analyzed token; a single token
/// yields the bare Term. Throws DataError("empty query") when nothing survives analysis.
QueryPlan plan_baseline(std::string_view question);

QueryPlan plan_boolean(const llm::Gateway& gateway, std::string_view question, const ExpansionOptions& options = {});
QueryPlan plan_cot(const llm::Gateway& gateway, std::string_view question, const ExpansionOptions& options = {});
QueryPlan plan_structured(const llm::Gateway& gateway, std::string_view question);

QueryPlan make_plan(Strategy strategy, const llm::Gateway& gateway, std::string_view question,
                    const ExpansionOptions& options = {});

/// One keyphrase per line; list markers, quotes and trailing punctuation are
/// removed, lines that analyze to nothing are dropped. At most max_terms kept.
std::vector<std::string> parse_keyphrases(std::string_view reply, int max_terms = 8);

/// Terms from the last "TERMS:" line, split on ';'. nullopt when no such line
/// holds at least one term.
std::optional<std::vector<std::string>> parse_terms_line(std::string_view reply);

/// Query node for a keyphrase: a Term for one token, an And of Terms for
/// several. nullopt when the phrase analyzes to nothing.
std::optional<query::QueryNode> phrase_node(std::string_view phrase, query::Field field = query::Field::all,
                                            double boost = 1.0);

/// Joins the baseline tree with the keyphrase nodes. Single tokens already in
/// the baseline, phrases covering exactly the baseline tokens and repeated
/// nodes are skipped.
query::QueryNode combine_with_baseline(const query::QueryNode& baseline, std::span<const std::string> phrases,
                                       Combine combine);

struct DslParse {
    query::QueryNode ast;
    std::vector<std::string> warnings;
};

/// Parses the restricted bool/must/should/match DSL. Throws DataError on
/// malformed JSON or any grammar violation.
DslParse parse_structured_dsl(std::string_view text);

/// Baseline tokens of `question` that appear in no leaf of `ast`.
std::vector<std::string> missing_baseline_tokens(const query::QueryNode& ast, std::string_view question);

nlohmann::json to_json(const QueryPlan& plan);
QueryPlan plan_from_json(const nlohmann::json& j);

}  // namespace dragun::expansion
