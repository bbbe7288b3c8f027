#include "dragun/text/analyzer.hpp"

#include "dragun/error.hpp"
#include "dragun/resources.hpp"

#include <cstdint>

namespace dragun::text {
namespace {

constexpr char32_t kReplacement = 0xFFFD;
constexpr char32_t kRightSingleQuote = 0x2019;
constexpr char32_t kFullwidthApostrophe = 0xFF07;

struct CodePoint {
    char32_t value;
    std::size_t begin;
    std::size_t end;
};

std::vector<CodePoint> decode_utf8(std::string_view s) {
    std::vector<CodePoint> out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const auto lead = static_cast<unsigned char>(s[i]);
        std::size_t len = 1;
        char32_t cp = kReplacement;
        if (lead < 0x80) {
            cp = lead;
        } else if ((lead >> 5) == 0x6) {
            len = 2;
            cp = lead & 0x1F;
        } else if ((lead >> 4) == 0xE) {
            len = 3;
            cp = lead & 0x0F;
        } else if ((lead >> 3) == 0x1E) {
            len = 4;
            cp = lead & 0x07;
        } else {
            out.push_back({kReplacement, i, i + 1});
            ++i;
            continue;
        }
        if (i + len > s.size()) {
            out.push_back({kReplacement, i, s.size()});
            break;
        }
        bool ok = true;
        for (std::size_t k = 1; k < len; ++k) {
            const auto cont = static_cast<unsigned char>(s[i + k]);
            if ((cont >> 6) != 0x2) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (cont & 0x3F);
        }
        if (!ok) {
            out.push_back({kReplacement, i, i + 1});
            ++i;
            continue;
        }
        out.push_back({cp, i, i + len});
        i += len;
    }
    return out;
}

void encode_utf8(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool is_digit(char32_t c) { return c >= '0' && c <= '9'; }

// Non-ASCII code points count as letters unless they fall in a known
// punctuation, symbol or separator block.
bool is_letter(char32_t c) {
    if (c < 0x80) return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    if (c == kReplacement) return false;
    if (c >= 0x80 && c <= 0xBF) return c == 0xAA || c == 0xB5 || c == 0xBA;
    if (c == 0xD7 || c == 0xF7) return false;
    if (c >= 0x2000 && c <= 0x2BFF) return false;  // punctuation, symbols, arrows, box drawing
    if (c >= 0x3000 && c <= 0x303F) return false;  // CJK punctuation
    if (c >= 0xFE30 && c <= 0xFE6F) return false;
    if (c >= 0xFF00 && c <= 0xFF0F) return false;
    if (c >= 0xFF1A && c <= 0xFF20) return false;
    if (c >= 0x1F000 && c <= 0x1FAFF) return false;  // emoji and pictographs
    return true;
}

bool is_word_char(char32_t c) { return is_letter(c) || is_digit(c); }

bool joins_letters(char32_t c) {
    return c == '\'' || c == kRightSingleQuote || c == kFullwidthApostrophe || c == '.';
}

bool joins_digits(char32_t c) { return c == '.' || c == ','; }

char32_t lower(char32_t c) {
    if (c >= 'A' && c <= 'Z') return c + 32;
    if (c < 0x80) return c;
    if ((c >= 0xC0 && c <= 0xDE) && c != 0xD7) return c + 32;
    if (c >= 0x100 && c <= 0x17F) {
        if (c == 0x130) return 'i';
        if (c == 0x138 || c == 0x149 || c == 0x17F) return c;
        if ((c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E)) return (c % 2 == 1) ? c + 1 : c;
        if (c == 0x178) return 0xFF;
        return (c % 2 == 0) ? c + 1 : c;
    }
    if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 32;
    if (c >= 0x410 && c <= 0x42F) return c + 32;
    if (c >= 0x400 && c <= 0x40F) return c + 80;
    return c;
}

std::unordered_set<std::string> load_stopwords() {
    const auto data = find_resource("data/stopwords_en.txt");
    if (!data) throw Error("stopword list resource missing");
    std::unordered_set<std::string> words;
    std::size_t pos = 0;
    while (pos < data->size()) {
        auto nl = data->find('\n', pos);
        if (nl == std::string_view::npos) nl = data->size();
        auto line = data->substr(pos, nl - pos);
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
        if (!line.empty() && line.front() != '#') words.emplace(line);
        pos = nl + 1;
    }
    return words;
}

std::string normalize_apostrophes(std::string s) {
    static constexpr std::string_view variants[] = {"’", "＇"};
    for (auto v : variants) {
        std::size_t pos = 0;
        while ((pos = s.find(v, pos)) != std::string::npos) s.replace(pos, v.size(), "'");
    }
    return s;
}

}  // namespace

std::vector<std::string> segment_words(std::string_view text) {
    const auto cps = decode_utf8(text);
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < cps.size()) {
        if (!is_word_char(cps[i].value)) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        std::size_t j = i + 1;
        while (j < cps.size()) {
            const char32_t c = cps[j].value;
            if (is_word_char(c)) {
                ++j;
                continue;
            }
            if (j + 1 < cps.size()) {
                const char32_t prev = cps[j - 1].value;
                const char32_t next = cps[j + 1].value;
                if (joins_letters(c) && is_letter(prev) && is_letter(next)) {
                    j += 2;
                    continue;
                }
                if (joins_digits(c) && is_digit(prev) && is_digit(next)) {
                    j += 2;
                    continue;
                }
            }
            break;
        }
        tokens.emplace_back(text.substr(cps[start].begin, cps[j - 1].end - cps[start].begin));
        i = j;
    }
    return tokens;
}

std::string to_lower(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (const auto& cp : decode_utf8(text)) {
        if (cp.value == kReplacement) {
            out.append(text.substr(cp.begin, cp.end - cp.begin));
        } else {
            encode_utf8(lower(cp.value), out);
        }
    }
    return out;
}

std::string strip_possessive(std::string_view token) {
    static constexpr std::string_view suffixes[] = {"'s", "'S", "’s", "’S", "＇s", "＇S"};
    for (auto s : suffixes) {
        if (token.size() > s.size() && token.substr(token.size() - s.size()) == s) {
            return std::string(token.substr(0, token.size() - s.size()));
        }
    }
    return std::string(token);
}

const std::unordered_set<std::string>& english_stopwords() {
    static const std::unordered_set<std::string> words = load_stopwords();
    return words;
}

std::vector<std::string> raw_words(std::string_view text) {
    auto tokens = segment_words(text);
    for (auto& t : tokens) t = to_lower(t);
    return tokens;
}

std::vector<std::string> analyze(std::string_view text) {
    const auto& stop = english_stopwords();
    std::vector<std::string> out;
    for (const auto& word : segment_words(text)) {
        auto token = strip_possessive(normalize_apostrophes(to_lower(word)));
        if (token.empty() || stop.contains(token)) continue;
        out.push_back(porter_stem(token));
    }
    return out;
}

}  // namespace dragun::text
