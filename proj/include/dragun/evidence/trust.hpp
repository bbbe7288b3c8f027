#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dragun::evidence {

/// Domain trustworthiness scores keyed by normalized domain.
struct TrustTable {
    std::map<std::string, double, std::less<>> scores;
    /// Score for domains not in the table.
    static constexpr double kDefault = 0.0;

    std::size_t skipped_rows = 0;
    std::vector<std::string> skip_messages;
};

struct TrustLoadOptions {
    bool lenient = false;
};

/// Reads a CSV with header "domain,score". Domains are lowercased and lose a
/// leading "www.". A row with a score outside [0, 1], an unparseable score, an
/// empty or repeated domain is an error: ParseError in strict mode, skipped
/// and counted in lenient mode. A missing file throws IoError.
TrustTable load_trust_table(const std::filesystem::path& path, TrustLoadOptions options = {});

/// Lowercased, without a leading "www." or trailing dot.
std::string normalize_domain(std::string_view domain);

/// Host of an absolute or scheme-less URL, normalized. nullopt when no valid
/// host can be found.
std::optional<std::string> url_host(std::string_view url);

struct TrustLookup {
    double score = TrustTable::kDefault;
    /// Table key that matched, empty on a miss.
    std::string matched_domain;
    /// The URL had no usable host.
    bool flagged = false;
};

/// Exact host lookup, then retries with the leftmost label removed while more
/// than two labels remain.
TrustLookup lookup_trust(const TrustTable& table, std::string_view url);

inline double trust_of(const TrustTable& table, std::string_view url) { return lookup_trust(table, url).score; }

}  // namespace dragun::evidence
