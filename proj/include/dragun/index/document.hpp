#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace dragun::index {

/// One corpus segment, the unit of retrieval.
struct Document {
    std::string doc_id;
    std::string url;
    std::string title;
    std::string headings;
    std::string body;

    bool operator==(const Document&) const = default;
};

struct JsonlReadOptions {
    /// Skip malformed lines instead of failing on the first one.
    bool lenient = false;
};

struct JsonlReadResult {
    std::vector<Document> documents;
    std::size_t skipped_lines = 0;
    std::vector<std::string> skip_messages;
};

/// Reads corpus JSONL: one object per line with string keys docid, url, title,
/// headings, segment. Unknown keys are ignored; blank lines are skipped.
/// Malformed lines raise ParseError (strict) or are counted (lenient).
/// Duplicate doc ids always raise DataError.
JsonlReadResult read_documents_jsonl(const std::filesystem::path& path, JsonlReadOptions options = {});

}  // namespace dragun::index
