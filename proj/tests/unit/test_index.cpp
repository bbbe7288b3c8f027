#include "dragun/error.hpp"
#include "dragun/index/inverted_index.hpp"
#include "support/bm25_oracle.hpp"
#include "support/temp_dir.hpp"

#include <doctest.h>

#include <cmath>

using namespace dragun;
using index::Document;
using index::InvertedIndex;
using testing::TempDir;

namespace {

Document doc(std::string id, std::string body, std::string title = "", std::string headings = "") {
    return Document{std::move(id), "https://example.com/" + id, std::move(title), std::move(headings),
                    std::move(body)};
}

std::vector<std::string> ids(const std::vector<index::SearchHit>& hits) {
    std::vector<std::string> out;
    for (const auto& h : hits) out.push_back(h.doc_id);
    return out;
}

}  // namespace

TEST_CASE("bm25 single doc formula") {
    auto idx = InvertedIndex::build({doc("a", "stadium")});
    const std::vector<std::string> q{"stadium"};
    const double idf = std::log(1.0 + 0.5 / 1.5);
    CHECK(idx.bm25_score(q, 0) == doctest::Approx(idf * 2.2 / 2.2).epsilon(1e-12));
    CHECK(idx.bm25_score(std::vector<std::string>{"nothing"}, 0) == 0.0);
}

TEST_CASE("idf is non-negative across df") {
    for (std::uint64_t df = 0; df <= 10; ++df) CHECK(index::bm25_idf(10, df) >= 0.0);
}

TEST_CASE("fields are scored independently and summed") {
    auto idx = InvertedIndex::build({doc("a", "w01 w02", "w01"), doc("b", "w02 w03"), doc("c", "w04")});
    testing::Bm25Oracle oracle({doc("a", "w01 w02", "w01"), doc("b", "w02 w03"), doc("c", "w04")});
    const std::vector<std::string> q{"w01", "w02"};
    for (std::uint32_t i = 0; i < 3; ++i) CHECK(idx.bm25_score(q, i) == doctest::Approx(oracle.flat_score(q, i)));
    CHECK(idx.stats().avg_field_length[0] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("empty field reports unit average length") {
    auto idx = InvertedIndex::build({doc("a", "w01"), doc("b", "w02")});
    CHECK(idx.stats().avg_field_length[0] == 1.0);
    CHECK(idx.stats().avg_field_length[1] == 1.0);
    CHECK(idx.stats().avg_field_length[2] == 1.0);
}

TEST_CASE("postings are sorted with tf >= 1") {
    std::mt19937_64 rng(3);
    auto idx = InvertedIndex::build(testing::random_corpus(rng));
    for (int w = 0; w < 30; ++w) {
        const auto* list = idx.postings(testing::vocab_word(w));
        if (!list) continue;
        for (std::size_t i = 0; i < list->postings.size(); ++i) {
            CHECK(list->postings[i].tf >= 1);
            if (i) {
                const auto& a = list->postings[i - 1];
                const auto& b = list->postings[i];
                CHECK(std::pair{a.doc, a.field} < std::pair{b.doc, b.field});
            }
        }
    }
}

TEST_CASE("search ties break by ascending doc_id") {
    auto idx = InvertedIndex::build({doc("zeta", "w01"), doc("alpha", "w01"), doc("mid", "w01")});
    CHECK(ids(idx.search(query::term("w01"), 10)) == std::vector<std::string>{"alpha", "mid", "zeta"});
}

TEST_CASE("search edge cases") {
    auto idx = InvertedIndex::build({doc("a", "w01"), doc("b", "w02")});
    CHECK(idx.search(query::term("missing"), 10).empty());
    CHECK_THROWS_AS(idx.search(query::term("w01"), 0), DataError);
    CHECK_THROWS_AS(InvertedIndex{}.search(query::term("w01"), 1), IoError);
    CHECK(ids(idx.search(query::all_of({query::term("w01"), query::term("w02")}), 10)).empty());
    CHECK(idx.search(query::any_of({query::term("w01"), query::term("w02")}), 10).size() == 2);
    CHECK(ids(idx.search(query::term("w01", query::Field::title), 10)).empty());
}

TEST_CASE("build rejects duplicate and empty ids") {
    CHECK_THROWS_AS(InvertedIndex::build({doc("a", "x"), doc("a", "y")}), DataError);
    CHECK_THROWS_AS(InvertedIndex::build({doc("", "x")}), DataError);
}

TEST_CASE("search matches the brute-force oracle") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        auto docs = testing::random_corpus(rng);
        testing::Bm25Oracle oracle(docs);
        auto idx = InvertedIndex::build(docs);
        for (int qi = 0; qi < 10; ++qi) {
            const auto q = testing::random_query(rng);
            const auto expected = oracle.rank(q);
            const auto hits = idx.search(q, 1000);
            REQUIRE(hits.size() == expected.size());
            for (std::size_t i = 0; i < hits.size(); ++i) {
                CHECK(hits[i].doc_id == expected[i].doc_id);
                CHECK(hits[i].score == doctest::Approx(expected[i].score).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("smaller k gives a prefix") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        auto idx = InvertedIndex::build(testing::random_corpus(rng));
        const auto q = testing::random_query(rng);
        const auto full = ids(idx.search(q, 1000));
        for (std::size_t k = 1; k <= full.size(); ++k) {
            const auto part = ids(idx.search(q, k));
            CHECK(std::equal(part.begin(), part.end(), full.begin()));
        }
    }
}

TEST_CASE("raising tf never lowers the score") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        auto docs = testing::random_corpus(rng);
        const auto target = rng() % docs.size();
        const auto word = testing::vocab_word(static_cast<int>(rng() % 30));
        const std::vector<std::string> q{word};
        const double before = InvertedIndex::build(docs).bm25_score(q, static_cast<std::uint32_t>(target));
        docs[target].body += " " + word;
        const double after = InvertedIndex::build(docs).bm25_score(q, static_cast<std::uint32_t>(target));
        CHECK(after >= before - 1e-12);
    }
}

TEST_CASE("index round trip") {
    TempDir tmp;
    std::mt19937_64 rng(21);
    auto docs = testing::random_corpus(rng);
    auto built = InvertedIndex::build(docs);
    built.save(tmp.path());
    auto opened = InvertedIndex::open(tmp.path());
    CHECK(opened.size() == built.size());
    CHECK(opened.stats().doc_freq == built.stats().doc_freq);
    for (int i = 0; i < 20; ++i) {
        const auto q = testing::random_query(rng);
        const auto a = built.search(q, 100);
        const auto b = opened.search(q, 100);
        REQUIRE(a.size() == b.size());
        for (std::size_t j = 0; j < a.size(); ++j) {
            CHECK(a[j].doc_id == b[j].doc_id);
            CHECK(a[j].score == b[j].score);
        }
    }
    for (std::uint32_t i = 0; i < opened.size(); ++i) CHECK(opened.document(i) == built.document(i));
}

TEST_CASE("ingest is byte-deterministic") {
    TempDir tmp;
    const auto corpus = tmp.write("c.jsonl",
                                  "{\"docid\":\"a\",\"url\":\"u\",\"title\":\"T\",\"headings\":\"\",\"segment\":\"one two\"}\n"
                                  "{\"docid\":\"b\",\"url\":\"u\",\"title\":\"\",\"headings\":\"H\",\"segment\":\"three\"}\n"
                                  "{\"docid\":\"c\",\"url\":\"u\",\"title\":\"\",\"headings\":\"\",\"segment\":\"four\",\"x\":1}\n");
    const auto r1 = index::ingest(corpus, tmp / "i1");
    index::ingest(corpus, tmp / "i2");
    CHECK(r1.stats.doc_count == 3);
    CHECK(testing::slurp(tmp / "i1/index.bin") == testing::slurp(tmp / "i2/index.bin"));
}

TEST_CASE("open rejects bad files") {
    TempDir tmp;
    CHECK_THROWS_AS(InvertedIndex::open(tmp / "none"), IoError);
    tmp.write("bad/index.bin", "not an index at all");
    CHECK_THROWS_AS(InvertedIndex::open(tmp / "bad"), IoError);

    InvertedIndex::build({doc("a", "w01")}).save(tmp / "ok");
    auto bytes = testing::slurp(tmp / "ok/index.bin");
    bytes[8] = 9;  // version byte
    tmp.write("v9/index.bin", bytes);
    CHECK_THROWS_AS(InvertedIndex::open(tmp / "v9"), IoError);
    tmp.write("cut/index.bin", testing::slurp(tmp / "ok/index.bin").substr(0, 20));
    CHECK_THROWS_AS(InvertedIndex::open(tmp / "cut"), IoError);
}

TEST_CASE("jsonl reading strict and lenient") {
    TempDir tmp;
    const auto path = tmp.write("c.jsonl",
                                "{\"docid\":\"a\",\"url\":\"\",\"title\":\"\",\"headings\":\"\",\"segment\":\"x\"}\n"
                                "\n"
                                "{not json\n"
                                "{\"docid\":\"b\",\"url\":\"\",\"title\":\"\",\"headings\":\"\",\"segment\":\"y\"}\n");
    try {
        index::read_documents_jsonl(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    auto lenient = index::read_documents_jsonl(path, {.lenient = true});
    CHECK(lenient.documents.size() == 2);
    CHECK(lenient.skipped_lines == 1);

    const auto missing = tmp.write("m.jsonl", "{\"url\":\"\",\"segment\":\"text\"}\n");
    CHECK_THROWS_AS(index::read_documents_jsonl(missing), ParseError);
    const auto typed = tmp.write("t.jsonl", "{\"docid\":7,\"url\":\"\",\"title\":\"\",\"headings\":\"\",\"segment\":\"\"}\n");
    CHECK_THROWS_AS(index::read_documents_jsonl(typed), ParseError);

    const auto dup = tmp.write("d.jsonl",
                               "{\"docid\":\"a\",\"url\":\"\",\"title\":\"\",\"headings\":\"\",\"segment\":\"x\"}\n"
                               "{\"docid\":\"a\",\"url\":\"\",\"title\":\"\",\"headings\":\"\",\"segment\":\"y\"}\n");
    CHECK_THROWS_AS(index::read_documents_jsonl(dup, {.lenient = true}), DataError);
    CHECK_THROWS_AS(index::read_documents_jsonl(tmp / "absent.jsonl"), IoError);
}
