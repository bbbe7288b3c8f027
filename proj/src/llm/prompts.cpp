#include "dragun/llm/prompts.hpp"

#include "dragun/error.hpp"
#include "dragun/io.hpp"
#include "dragun/resources.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace dragun::llm {
namespace {

constexpr std::string_view kPrefix = "prompts/";

std::string trim_trailing_newlines(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

}  // namespace

std::vector<std::string> placeholders(std::string_view tmpl) {
    std::vector<std::string> names;
    std::size_t pos = 0;
    while ((pos = tmpl.find("{{", pos)) != std::string_view::npos) {
        const auto close = tmpl.find("}}", pos + 2);
        if (close == std::string_view::npos) throw ConfigError("unterminated '{{' in prompt template");
        std::string name(tmpl.substr(pos + 2, close - pos - 2));
        if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
        pos = close + 2;
    }
    return names;
}

std::string render_template(std::string_view tmpl, const Bindings& bindings) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (true) {
        const auto open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        const auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) throw ConfigError("unterminated '{{' in prompt template");
        out.append(tmpl.substr(pos, open - pos));
        const auto name = tmpl.substr(open + 2, close - open - 2);
        auto it = bindings.find(name);
        if (it == bindings.end()) throw ConfigError(fmt::format("no value for prompt placeholder {{{{{}}}}}", name));
        out.append(it->second);
        pos = close + 2;
    }
    return out;
}

PromptLibrary PromptLibrary::builtin() {
    PromptLibrary lib;
    for (auto name : resource_names()) {
        if (!name.starts_with(kPrefix)) continue;
        const auto file = name.substr(kPrefix.size());
        const std::string content(*find_resource(name));
        if (file == "VERSION") {
            lib.version_ = trim_trailing_newlines(content);
        } else if (file.ends_with(".system.txt")) {
            auto key = std::string(file.substr(0, file.size() - 11));
            lib.templates_[key].name = key;
            lib.templates_[key].system = trim_trailing_newlines(content);
        } else if (file.ends_with(".user.txt")) {
            auto key = std::string(file.substr(0, file.size() - 9));
            lib.templates_[key].name = key;
            lib.templates_[key].user = trim_trailing_newlines(content);
        } else if (file.ends_with(".txt")) {
            lib.snippets_[std::string(file.substr(0, file.size() - 4))] = trim_trailing_newlines(content);
        }
    }
    if (lib.version_.empty()) throw ConfigError("built-in prompt library has no VERSION");
    return lib;
}

PromptLibrary PromptLibrary::from_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw IoError("prompt directory not found: " + dir.string());
    PromptLibrary lib = builtin();
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto file = entry.path().filename().string();
        const auto content = trim_trailing_newlines(read_file(entry.path()));
        if (file == "VERSION") {
            lib.version_ = content;
        } else if (file.ends_with(".system.txt")) {
            auto key = file.substr(0, file.size() - 11);
            lib.templates_[key].name = key;
            lib.templates_[key].system = content;
        } else if (file.ends_with(".user.txt")) {
            auto key = file.substr(0, file.size() - 9);
            lib.templates_[key].name = key;
            lib.templates_[key].user = content;
        } else if (file.ends_with(".txt")) {
            lib.snippets_[file.substr(0, file.size() - 4)] = content;
        }
    }
    return lib;
}

const PromptTemplate& PromptLibrary::get(std::string_view name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw ConfigError(fmt::format("unknown prompt template '{}'", name));
    return it->second;
}

const std::string& PromptLibrary::snippet(std::string_view name) const {
    auto it = snippets_.find(name);
    if (it == snippets_.end()) throw ConfigError(fmt::format("unknown prompt snippet '{}'", name));
    return it->second;
}

bool PromptLibrary::contains(std::string_view name) const {
    return templates_.contains(name) || snippets_.contains(name);
}

std::vector<std::string> PromptLibrary::names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : templates_) out.push_back(k);
    return out;
}

}  // namespace dragun::llm
