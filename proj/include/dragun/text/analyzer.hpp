#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace dragun::text {

/// Classic Porter (1980) suffix stripping. Input must be lowercase ASCII
/// letters; anything else is returned unchanged.
std::string porter_stem(std::string_view word);

/// Splits UTF-8 text into word tokens. Letters and digits form words;
/// apostrophes and periods join letters on both sides, periods and commas
/// join digits on both sides. Case is preserved.
std::vector<std::string> segment_words(std::string_view text);

/// Lowercases ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic capitals.
std::string to_lower(std::string_view text);

/// Removes a trailing English possessive ("'s" with ASCII or typographic apostrophe).
std::string strip_possessive(std::string_view token);

/// The bundled English stopword set (data/stopwords_en.txt).
const std::unordered_set<std::string>& english_stopwords();

/// English analysis chain used for indexing and querying:
/// segmentation, lowercasing, possessive strip, stopword removal, Porter stemming.
std::vector<std::string> analyze(std::string_view text);

/// Lowercased word tokens without stopword removal or stemming.
std::vector<std::string> raw_words(std::string_view text);

}  // namespace dragun::text
