#include "dragun/index/document.hpp"

#include "dragun/error.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <unordered_set>

namespace dragun::index {
namespace {

std::string string_field(const nlohmann::json& obj, const char* key, bool required) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        if (required) throw DataError(std::string("missing key '") + key + "'");
        return {};
    }
    if (!it->is_string()) throw DataError(std::string("key '") + key + "' is not a string");
    return it->get<std::string>();
}

Document parse_line(const std::string& line) {
    const auto obj = nlohmann::json::parse(line);
    if (!obj.is_object()) throw DataError("line is not a JSON object");
    Document doc;
    doc.doc_id = string_field(obj, "docid", true);
    if (doc.doc_id.empty()) throw DataError("empty docid");
    doc.url = string_field(obj, "url", false);
    doc.title = string_field(obj, "title", false);
    doc.headings = string_field(obj, "headings", false);
    doc.body = string_field(obj, "segment", false);
    return doc;
}

}  // namespace

JsonlReadResult read_documents_jsonl(const std::filesystem::path& path, JsonlReadOptions options) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus " + path.string());

    JsonlReadResult result;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;

        Document doc;
        try {
            doc = parse_line(line);
        } catch (const std::exception& e) {
            if (!options.lenient) throw ParseError(path.string(), line_no, e.what());
            ++result.skipped_lines;
            result.skip_messages.push_back(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
            continue;
        }
        if (!seen.insert(doc.doc_id).second) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": duplicate doc_id " + doc.doc_id);
        }
        result.documents.push_back(std::move(doc));
    }
    return result;
}

}  // namespace dragun::index
