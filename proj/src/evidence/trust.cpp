#include "dragun/evidence/trust.hpp"

#include "dragun/error.hpp"
#include "dragun/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace dragun::evidence {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string_view unquote(std::string_view s) {
    s = trim(s);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return trim(s);
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool valid_host(std::string_view host) {
    if (host.empty() || host.front() == '.' || host.find("..") != std::string_view::npos) return false;
    return std::all_of(host.begin(), host.end(), [](char c) {
        const auto u = static_cast<unsigned char>(c);
        return std::isalnum(u) || c == '-' || c == '.' || c == '_' || u >= 0x80;
    });
}

}  // namespace

std::string normalize_domain(std::string_view domain) {
    std::string d = lower(trim(domain));
    while (!d.empty() && d.back() == '.') d.pop_back();
    if (d.starts_with("www.")) d.erase(0, 4);
    return d;
}

std::optional<std::string> url_host(std::string_view url) {
    auto s = trim(url);
    if (s.empty()) return std::nullopt;
    if (const auto scheme = s.find("://"); scheme != std::string_view::npos) {
        s = s.substr(scheme + 3);
    } else if (s.starts_with("//")) {
        s = s.substr(2);
    }
    s = s.substr(0, s.find_first_of("/?#"));
    if (const auto at = s.rfind('@'); at != std::string_view::npos) s = s.substr(at + 1);
    if (s.starts_with("[")) return std::nullopt;  // IPv6 literals carry no domain
    if (const auto colon = s.find(':'); colon != std::string_view::npos) s = s.substr(0, colon);
    auto host = normalize_domain(s);
    if (!valid_host(host)) return std::nullopt;
    return host;
}

TrustLookup lookup_trust(const TrustTable& table, std::string_view url) {
    TrustLookup out;
    const auto host = url_host(url);
    if (!host) {
        out.flagged = true;
        return out;
    }
    std::string_view candidate = *host;
    while (true) {
        if (const auto it = table.scores.find(candidate); it != table.scores.end()) {
            out.score = it->second;
            out.matched_domain = it->first;
            return out;
        }
        if (std::count(candidate.begin(), candidate.end(), '.') < 2) break;
        candidate.remove_prefix(candidate.find('.') + 1);
    }
    return out;
}

TrustTable load_trust_table(const std::filesystem::path& path, TrustLoadOptions options) {
    const std::string content = read_file(path);
    const std::string source = path.string();
    TrustTable table;
    std::istringstream in(content);
    std::string raw;
    std::size_t line_no = 0;
    bool header_seen = false;

    auto reject = [&](const std::string& what) {
        if (!options.lenient) throw ParseError(source, line_no, what);
        ++table.skipped_rows;
        table.skip_messages.push_back(fmt::format("{}:{}: {}", source, line_no, what));
    };

    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
        line = trim(line);
        if (line.empty()) continue;
        if (!header_seen) {
            if (lower(line) != "domain,score") throw ParseError(source, line_no, "expected header \"domain,score\"");
            header_seen = true;
            continue;
        }
        const auto comma = line.rfind(',');
        if (comma == std::string_view::npos) {
            reject("expected two columns: domain,score");
            continue;
        }
        const auto domain = normalize_domain(unquote(line.substr(0, comma)));
        const auto score_text = unquote(line.substr(comma + 1));
        if (domain.empty() || domain.find(',') != std::string::npos) {
            reject("empty or malformed domain");
            continue;
        }
        double score = 0.0;
        const auto [ptr, ec] = std::from_chars(score_text.data(), score_text.data() + score_text.size(), score);
        if (ec != std::errc{} || ptr != score_text.data() + score_text.size() || !std::isfinite(score)) {
            reject(fmt::format("unparseable score '{}'", score_text));
            continue;
        }
        if (score < 0.0 || score > 1.0) {
            reject(fmt::format("score {} for '{}' is outside [0, 1]", score_text, domain));
            continue;
        }
        if (table.scores.contains(domain)) {
            reject(fmt::format("domain '{}' appears more than once", domain));
            continue;
        }
        table.scores.emplace(domain, score);
    }
    if (!header_seen) throw ParseError(source, std::max<std::size_t>(line_no, 1), "expected header \"domain,score\"");
    return table;
}

}  // namespace dragun::evidence
