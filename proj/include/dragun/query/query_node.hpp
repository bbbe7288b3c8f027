#pragma once

#include <nlohmann/json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dragun::query {

enum class Field { title, headings, body, all };

std::string_view to_string(Field f);
std::optional<Field> parse_field(std::string_view name);

/// Maximum nesting depth of a query tree; deeper trees are rejected.
inline constexpr int kMaxDepth = 8;

struct QueryNode;

/// A leaf matching one analyzed token in one field (or all fields).
struct Term {
    Field field = Field::all;
    std::string text;
    double boost = 1.0;

    bool operator==(const Term&) const = default;
};

struct And {
    std::vector<QueryNode> children;
    bool operator==(const And&) const;
};

struct Or {
    std::vector<QueryNode> children;
    bool operator==(const Or&) const;
};

struct QueryNode {
    std::variant<Term, And, Or> node;

    QueryNode() = default;
    QueryNode(Term t) : node(std::move(t)) {}
    QueryNode(And a) : node(std::move(a)) {}
    QueryNode(Or o) : node(std::move(o)) {}

    bool is_term() const { return std::holds_alternative<Term>(node); }
    bool is_and() const { return std::holds_alternative<And>(node); }
    bool is_or() const { return std::holds_alternative<Or>(node); }
    const Term& term() const { return std::get<Term>(node); }
    const std::vector<QueryNode>& children() const;

    bool operator==(const QueryNode&) const = default;
};

inline QueryNode term(std::string text, Field field = Field::all, double boost = 1.0) {
    return QueryNode(Term{field, std::move(text), boost});
}
inline QueryNode all_of(std::vector<QueryNode> children) { return QueryNode(And{std::move(children)}); }
inline QueryNode any_of(std::vector<QueryNode> children) { return QueryNode(Or{std::move(children)}); }

/// Throws DataError if the tree breaks a structural invariant: empty And/Or,
/// non-positive or non-finite boost, empty term text, depth above kMaxDepth.
void validate(const QueryNode& root);

int depth(const QueryNode& root);

/// Every Term leaf in depth-first, left-to-right order.
std::vector<const Term*> leaves(const QueryNode& root);

/// JSON form: {"term":{"field":..,"text":..,"boost":..}}, {"and":[..]}, {"or":[..]}.
nlohmann::json to_json(const QueryNode& root);
QueryNode from_json(const nlohmann::json& j);

/// Compact human-readable rendering, e.g. Or[all:fund, And[title:own^2]].
std::string to_debug_string(const QueryNode& root);

}  // namespace dragun::query
