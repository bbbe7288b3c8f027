#include "dragun/error.hpp"
#include "dragun/evidence/trust.hpp"
#include "support/temp_dir.hpp"

#include <doctest.h>

using namespace dragun;
using namespace dragun::evidence;

TEST_CASE("fixture table lookups") {
    const auto t = load_trust_table(DRAGUN_TEST_DATA "/fixture/trust.csv");
    CHECK(trust_of(t, "https://www.nytimes.com/x") == 0.93);
    CHECK(trust_of(t, "https://unknown.org/page") == 0.0);
    CHECK(trust_of(t, "https://news.example.com/story") == 0.7);
    CHECK(lookup_trust(t, "https://news.example.com/story").matched_domain == "example.com");
    CHECK(trust_of(t, "https://example.com") == 0.7);
    CHECK(trust_of(t, "https://en.wikipedia.org/wiki/X") == 0.69);
    // Suffix retry stops at two labels, so a public suffix never matches.
    CHECK(trust_of(t, "https://www.bbc.co.uk/news") == 0.91);
    CHECK(trust_of(t, "https://other.co.uk/") == 0.0);
    CHECK(trust_of(t, "HTTP://WWW.NYTIMES.COM:443/a?b#c") == 0.93);
    CHECK(trust_of(t, "nytimes.com/section") == 0.93);

    const auto empty = lookup_trust(t, "");
    CHECK(empty.score == 0.0);
    CHECK(empty.flagged);
    CHECK(lookup_trust(t, "http://").flagged);
    CHECK(lookup_trust(t, "not a url at all").flagged);
    CHECK_FALSE(lookup_trust(t, "https://unknown.org").flagged);
}

TEST_CASE("domain normalization") {
    CHECK(normalize_domain("WWW.Example.COM.") == "example.com");
    CHECK(normalize_domain("www2.example.com") == "www2.example.com");
    CHECK(url_host("https://user:pw@Sub.Example.com:8080/p") == "sub.example.com");
    CHECK_FALSE(url_host("").has_value());
    CHECK_FALSE(url_host("http://[::1]/").has_value());
}

TEST_CASE("row errors strict and lenient") {
    testing::TempDir tmp;
    const auto path = tmp.write("t.csv", "domain,score\nnytimes.com,0.93\nx.com,1.7\n,0.5\ny.com,abc\nwww.nytimes.com,0.2\nz.com,0.4\n");
    try {
        load_trust_table(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    const auto t = load_trust_table(path, {.lenient = true});
    CHECK(t.scores.size() == 2);
    CHECK(t.skipped_rows == 4);
    CHECK(trust_of(t, "https://nytimes.com") == 0.93);
    CHECK(trust_of(t, "https://z.com") == 0.4);

    CHECK_THROWS_AS(load_trust_table(tmp.write("h.csv", "site,trust\na.com,0.5\n")), ParseError);
    CHECK_THROWS_AS(load_trust_table(tmp / "missing.csv"), IoError);

    const auto quoted = load_trust_table(tmp.write("q.csv", "\xEF\xBB\xBF" "domain,score\r\n\"a.com\",\"0.5\"\r\n-b.com,0\n"));
    CHECK(quoted.scores.at("a.com") == 0.5);
    CHECK(quoted.scores.at("-b.com") == 0.0);
}
