#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dragun::llm {

using Bindings = std::map<std::string, std::string, std::less<>>;

/// Replaces every {{name}} with bindings[name]. Throws ConfigError when a
/// placeholder has no binding or a "{{" is never closed.
std::string render_template(std::string_view tmpl, const Bindings& bindings);

/// Placeholder names referenced by a template, in first-appearance order.
std::vector<std::string> placeholders(std::string_view tmpl);

struct PromptTemplate {
    std::string name;
    std::string system;
    std::string user;
};

/// Versioned prompt templates. Each template `name` is a pair of files
/// `<name>.system.txt` and `<name>.user.txt`; plain text snippets are single
/// `<name>.txt` files. The directory carries a `VERSION` file.
class PromptLibrary {
public:
    /// Templates compiled into the binary from the repository's prompts/ directory.
    static PromptLibrary builtin();

    /// Loads from a directory laid out like prompts/. Files missing there fall
    /// back to the built-in copies.
    static PromptLibrary from_directory(const std::filesystem::path& dir);

    const PromptTemplate& get(std::string_view name) const;
    const std::string& snippet(std::string_view name) const;
    bool contains(std::string_view name) const;
    const std::string& version() const { return version_; }
    std::vector<std::string> names() const;

private:
    std::string version_;
    std::map<std::string, PromptTemplate, std::less<>> templates_;
    std::map<std::string, std::string, std::less<>> snippets_;
};

}  // namespace dragun::llm
