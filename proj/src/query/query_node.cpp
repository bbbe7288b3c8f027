#include "dragun/query/query_node.hpp"

#include "dragun/error.hpp"

#include <fmt/format.h>

#include <cmath>

namespace dragun::query {

std::string_view to_string(Field f) {
    switch (f) {
        case Field::title: return "title";
        case Field::headings: return "headings";
        case Field::body: return "body";
        case Field::all: return "all";
    }
    return "all";
}

std::optional<Field> parse_field(std::string_view name) {
    if (name == "title") return Field::title;
    if (name == "headings") return Field::headings;
    if (name == "body") return Field::body;
    if (name == "all") return Field::all;
    return std::nullopt;
}

bool And::operator==(const And& other) const { return children == other.children; }
bool Or::operator==(const Or& other) const { return children == other.children; }

const std::vector<QueryNode>& QueryNode::children() const {
    if (const auto* a = std::get_if<And>(&node)) return a->children;
    if (const auto* o = std::get_if<Or>(&node)) return o->children;
    static const std::vector<QueryNode> none;
    return none;
}

int depth(const QueryNode& root) {
    if (root.is_term()) return 1;
    int deepest = 0;
    for (const auto& c : root.children()) deepest = std::max(deepest, depth(c));
    return deepest + 1;
}

namespace {

void validate_at(const QueryNode& n, int level) {
    if (level > kMaxDepth) throw DataError(fmt::format("query tree deeper than {}", kMaxDepth));
    if (n.is_term()) {
        const auto& t = n.term();
        if (t.text.empty()) throw DataError("query term with empty text");
        if (!std::isfinite(t.boost) || t.boost <= 0.0) {
            throw DataError(fmt::format("query term '{}' has non-positive boost {}", t.text, t.boost));
        }
        return;
    }
    if (n.children().empty()) throw DataError(n.is_and() ? "And node without children" : "Or node without children");
    for (const auto& c : n.children()) validate_at(c, level + 1);
}

void collect(const QueryNode& n, std::vector<const Term*>& out) {
    if (n.is_term()) {
        out.push_back(&n.term());
        return;
    }
    for (const auto& c : n.children()) collect(c, out);
}

QueryNode from_json_at(const nlohmann::json& j, int level) {
    if (level > kMaxDepth) throw DataError(fmt::format("query tree deeper than {}", kMaxDepth));
    if (!j.is_object() || j.size() != 1) throw DataError("query node must be an object with one key");
    const auto it = j.begin();
    const std::string key = it.key();
    const nlohmann::json& value = it.value();
    if (key == "term") {
        if (!value.is_object()) throw DataError("term node must be an object");
        Term t;
        const auto field = parse_field(value.at("field").get<std::string>());
        if (!field) throw DataError("unknown term field");
        t.field = *field;
        t.text = value.at("text").get<std::string>();
        t.boost = value.value("boost", 1.0);
        return QueryNode(std::move(t));
    }
    if (key == "and" || key == "or") {
        if (!value.is_array()) throw DataError("and/or node must hold an array");
        std::vector<QueryNode> children;
        for (const auto& c : value) children.push_back(from_json_at(c, level + 1));
        return key == "and" ? all_of(std::move(children)) : any_of(std::move(children));
    }
    throw DataError("unknown query node kind '" + key + "'");
}

}  // namespace

void validate(const QueryNode& root) { validate_at(root, 1); }

std::vector<const Term*> leaves(const QueryNode& root) {
    std::vector<const Term*> out;
    collect(root, out);
    return out;
}

nlohmann::json to_json(const QueryNode& root) {
    if (root.is_term()) {
        const auto& t = root.term();
        return {{"term", {{"field", to_string(t.field)}, {"text", t.text}, {"boost", t.boost}}}};
    }
    auto arr = nlohmann::json::array();
    for (const auto& c : root.children()) arr.push_back(to_json(c));
    return {{root.is_and() ? "and" : "or", std::move(arr)}};
}

QueryNode from_json(const nlohmann::json& j) {
    try {
        auto node = from_json_at(j, 1);
        validate(node);
        return node;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed query json: ") + e.what());
    }
}

std::string to_debug_string(const QueryNode& root) {
    if (root.is_term()) {
        const auto& t = root.term();
        if (t.boost == 1.0) return fmt::format("{}:{}", to_string(t.field), t.text);
        return fmt::format("{}:{}^{}", to_string(t.field), t.text, t.boost);
    }
    std::string out = root.is_and() ? "And[" : "Or[";
    bool first = true;
    for (const auto& c : root.children()) {
        if (!first) out += ", ";
        out += to_debug_string(c);
        first = false;
    }
    return out + "]";
}

}  // namespace dragun::query
