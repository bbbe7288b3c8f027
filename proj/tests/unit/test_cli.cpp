#include "cli.hpp"
#include "support/temp_dir.hpp"

#include <doctest.h>

#include <sstream>

using namespace dragun;

namespace {

const std::filesystem::path kFixture = std::filesystem::path(DRAGUN_TEST_DATA) / "fixture";

struct Result {
    int code;
    std::string out, err;
};

Result call(std::vector<std::string> args) {
    args.insert(args.begin(), "dragun");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

const std::string kThreeDocs =
    R"({"docid":"a","url":"https://a.com","title":"A","headings":"","segment":"alpha beta"})"
    "\n"
    R"({"docid":"b","url":"https://b.com","title":"B","headings":"","segment":"beta gamma"})"
    "\n"
    R"({"docid":"c","url":"https://c.com","title":"C","headings":"","segment":"gamma delta"})"
    "\n";

}  // namespace

TEST_CASE("usage errors exit 2") {
    CHECK(call({}).code == 2);
    CHECK(call({"frobnicate"}).code == 2);
    CHECK(call({"index", "--corpus", "/nonexistent/corpus.jsonl", "--index", "/tmp/x"}).code == 2);
}

TEST_CASE("index reports stats") {
    testing::TempDir dir;
    dir.write("c.jsonl", kThreeDocs);
    const auto r = call({"index", "--corpus", (dir / "c.jsonl").string(), "--index", (dir / "idx").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("docs: 3\n") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "idx"));
}

TEST_CASE("data errors exit 1") {
    testing::TempDir dir;
    dir.write("dup.jsonl", kThreeDocs + R"({"docid":"a","url":"","title":"","headings":"","segment":"x"})" + "\n");
    const auto r = call({"index", "--corpus", (dir / "dup.jsonl").string(), "--index", (dir / "idx").string()});
    CHECK(r.code == 1);
    CHECK_FALSE(r.err.empty());
}

TEST_CASE("config problems exit 2") {
    testing::TempDir dir;
    dir.write("cfg.json", R"({"unknown_key": 1})");
    dir.write("c.jsonl", kThreeDocs);
    const auto r = call({"questions", "--articles", (dir / "c.jsonl").string(), "--out", (dir / "q.json").string(),
                         "--config", (dir / "cfg.json").string()});
    CHECK(r.code == 2);
}

TEST_CASE("check-citations") {
    testing::TempDir dir;
    dir.write("ev.jsonl", R"({"topic_id":"t","question":"q","pre_rerank":[{"doc_id":"a"}],"top10_relevant":["a"],"top3_trusted":[]})" "\n");
    dir.write("ok.json", R"([{"topic_id":"t","report_text":"x [a].","citations":["a"],"answers":[{"question":"q","answer_text":"y [a].","citations":["a"]}]}])");
    dir.write("bad.json", R"([{"topic_id":"t","report_text":"x [z].","citations":["z"],"answers":[]}])");
    const auto ev = (dir / "ev.jsonl").string();
    CHECK(call({"check-citations", "--report", (dir / "ok.json").string(), "--evidence", ev}).code == 0);
    const auto bad = call({"check-citations", "--report", (dir / "bad.json").string(), "--evidence", ev});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("z") != std::string::npos);
}

TEST_CASE("run on the fixture writes every artifact") {
    testing::TempDir dir;
    const auto r = call({"run", "--corpus", (kFixture / "corpus.jsonl").string(), "--articles",
                         (kFixture / "articles.jsonl").string(), "--trust", (kFixture / "trust.csv").string(),
                         "--rubric", (kFixture / "rubric").string(), "--out-dir", dir.path().string(), "--seed", "7"});
    INFO(r.err);
    REQUIRE(r.code == 0);
    for (const char* f : {"task1_questions.json", "task2_reports.json", "metrics.csv", "evaluation.csv",
                          "dashboard_topics.csv", "evidence_baseline.jsonl"}) {
        CHECK_MESSAGE(std::filesystem::exists(dir / f), f);
    }
}
