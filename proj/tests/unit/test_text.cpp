#include "dragun/text/analyzer.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using dragun::text::analyze;
using dragun::text::porter_stem;
using Tokens = std::vector<std::string>;

namespace {

std::vector<std::pair<std::string, std::string>> porter_pairs() {
    std::ifstream in(DRAGUN_TEST_DATA "/porter_reference.tsv");
    std::vector<std::pair<std::string, std::string>> out;
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        out.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    return out;
}

std::string join(const Tokens& t) {
    std::string s;
    for (const auto& w : t) s += w + " ";
    return s;
}

}  // namespace

TEST_CASE("analyze examples") {
    CHECK(analyze("").empty());
    CHECK(analyze("The runner's shoes") == Tokens{"runner", "shoe"});
    CHECK(analyze("Running runs RUN") == Tokens{"run", "run", "run"});
    CHECK(analyze("the and of").empty());
}

TEST_CASE("typographic apostrophes and possessives") {
    CHECK(analyze("publisher\xE2\x80\x99s policy") == analyze("publisher's policy"));
    CHECK(dragun::text::strip_possessive("owner's") == "owner");
    CHECK(dragun::text::strip_possessive("owners") == "owners");
    CHECK(dragun::text::strip_possessive("'s") == "'s");
}

TEST_CASE("segmentation keeps numbers and contractions together") {
    CHECK(dragun::text::segment_words("3.14 and 1,000 dollars") == Tokens{"3.14", "and", "1,000", "dollars"});
    CHECK(dragun::text::segment_words("don't stop.") == Tokens{"don't", "stop"});
    CHECK(dragun::text::segment_words("U.S. news, today") == Tokens{"U.S", "news", "today"});
    CHECK(dragun::text::segment_words("  --  ").empty());
}

TEST_CASE("lowercasing beyond ASCII") {
    CHECK(dragun::text::to_lower("ÉCOLE") == "école");
    CHECK(dragun::text::to_lower("ΑΘΗΝΑ") == "αθηνα");
    CHECK(dragun::text::to_lower("МОСКВА") == "москва");
    CHECK(dragun::text::to_lower("ŁÓDŹ") == "łódź");
}

TEST_CASE("non-alphabetic tokens are not stemmed") {
    CHECK(porter_stem("2020s") == "2020s");
    CHECK(analyze("COVID-19 cases") == Tokens{"covid", "19", "case"});
}

TEST_CASE("stopword list is the bundled one") {
    const auto& stop = dragun::text::english_stopwords();
    CHECK(stop.size() == 179);
    CHECK(stop.contains("who"));
    CHECK(stop.contains("the"));
    CHECK_FALSE(stop.contains("publisher"));
}

TEST_CASE("porter stemmer agrees with the reference table") {
    const auto pairs = porter_pairs();
    REQUIRE(pairs.size() >= 100);
    for (const auto& [word, stem] : pairs) {
        INFO(word);
        CHECK(porter_stem(word) == stem);
    }
}

TEST_CASE("porter classic examples") {
    CHECK(porter_stem("caresses") == "caress");
    CHECK(porter_stem("ponies") == "poni");
    CHECK(porter_stem("relational") == "relat");
    CHECK(porter_stem("generalizations") == "gener");
    CHECK(porter_stem("hopping") == "hop");
    CHECK(porter_stem("a") == "a");
}

TEST_CASE("analyzer is deterministic") {
    const std::string text = "Crestline Capital's purchase of the Daily Herald, announced Monday.";
    CHECK(analyze(text) == analyze(text));
}

TEST_CASE("re-analysis is stable for most words but not all") {
    // Porter is not a projection: some stems are shortened again.
    CHECK(analyze("agreed") == Tokens{"agre"});
    CHECK(analyze(join(analyze("agreed"))) == Tokens{"agr"});

    std::size_t stable = 0, total = 0;
    for (const auto& [word, stem] : porter_pairs()) {
        const auto once = analyze(word);
        if (once.empty()) continue;
        ++total;
        stable += analyze(join(once)) == once;
    }
    CHECK(static_cast<double>(stable) / static_cast<double>(total) > 0.9);
}
