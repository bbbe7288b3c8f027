#include "acceptance/criteria.hpp"

#include "dragun/evaluation/evaluation.hpp"
#include "dragun/evidence/pipeline.hpp"
#include "dragun/evidence/scorer.hpp"
#include "dragun/expansion/query_plan.hpp"
#include "dragun/index/inverted_index.hpp"
#include "dragun/io.hpp"
#include "dragun/questions/generation.hpp"
#include "dragun/questions/kmeans.hpp"
#include "dragun/report/report.hpp"
#include "dragun/text/analyzer.hpp"
#include "support/bm25_oracle.hpp"
#include "support/evidence_oracle.hpp"
#include "support/kmeans_oracle.hpp"
#include "support/scripted_backend.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace dragun::acceptance {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

const fs::path kData = DRAGUN_TEST_DATA;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool close(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return out + "'";
}

int run_cli(const fs::path& cli, const std::vector<std::string>& args, const fs::path& log) {
    std::string cmd = shell_quote(cli.string());
    for (const auto& a : args) cmd += " " + shell_quote(a);
    cmd += " >" + shell_quote(log.string()) + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path());
    }
    return out;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(read_file(path));
    for (std::string line; std::getline(in, line);) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(std::move(cells));
    }
    return rows;
}

bool is_subsequence(const std::vector<std::string>& sub, const std::vector<std::string>& of) {
    auto it = of.begin();
    for (const auto& s : sub) {
        it = std::find(it, of.end(), s);
        if (it == of.end()) return false;
        ++it;
    }
    return true;
}

}  // namespace

Outcome bm25_oracle_equivalence() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240601);
    int corpora = 0, queries = 0, mismatches = 0;
    for (; corpora < 25; ++corpora) {
        const auto docs = testing::random_corpus(rng);
        const testing::Bm25Oracle oracle(docs);
        const auto idx = index::InvertedIndex::build(docs);
        for (int q = 0; q < 20; ++q, ++queries) {
            const auto query = testing::random_query(rng);
            const auto expected = oracle.rank(query);
            const auto hits = idx.search(query, 1000);
            bool same = hits.size() == expected.size();
            for (std::size_t i = 0; same && i < hits.size(); ++i) {
                same = hits[i].doc_id == expected[i].doc_id && close(hits[i].score, expected[i].score);
            }
            mismatches += same ? 0 : 1;
        }
    }
    const double secs = seconds_since(t0);
    return {mismatches == 0 && secs < 5.0,
            fmt::format("{} corpora, {} queries, {} mismatches, {:.2f} s", corpora, queries, mismatches, secs)};
}

Outcome analyzer_conformance() {
    std::ifstream in(kData / "porter_reference.tsv");
    int pairs = 0, agree = 0;
    std::string first_bad;
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) continue;
        ++pairs;
        const auto word = line.substr(0, tab);
        const auto stem = line.substr(tab + 1);
        if (text::porter_stem(word) == stem) {
            ++agree;
        } else if (first_bad.empty()) {
            first_bad = fmt::format(", first disagreement {} -> {} (want {})", word, text::porter_stem(word), stem);
        }
    }
    return {pairs >= 100 && agree == pairs, fmt::format("{}/{} pairs agree{}", agree, pairs, first_bad)};
}

Outcome kmeans_correctness() {
    const auto j = nlohmann::json::parse(read_file(kData / "kmeans_instances.json"));
    const int k = j.at("k").get<int>();
    constexpr int kSeeds = 20;
    int runs = 0, optimal = 0, monotone = 0;
    for (const auto& inst : j.at("instances")) {
        const auto pts = inst.get<std::vector<std::vector<double>>>();
        const double best = testing::exhaustive_two_cluster_sse(pts);
        for (std::uint64_t seed = 0; seed < kSeeds; ++seed, ++runs) {
            const auto r = questions::kmeans(pts, k, seed);
            const double sse = questions::within_cluster_sse(pts, r.assignments, r.centroids);
            optimal += std::abs(sse - best) <= 1e-9 * std::max(1.0, best) ? 1 : 0;
            bool ok = !r.sse_history.empty();
            for (std::size_t i = 1; ok && i < r.sse_history.size(); ++i) {
                ok = r.sse_history[i] <= r.sse_history[i - 1] + 1e-9 * std::max(1.0, r.sse_history[i - 1]);
            }
            monotone += ok ? 1 : 0;
        }
    }
    const double rate = runs ? static_cast<double>(optimal) / runs : 0.0;
    return {runs > 0 && rate >= 0.95 && monotone == runs,
            fmt::format("{} runs, optimal {:.1f}%, non-increasing {}/{}", runs, 100.0 * rate, monotone, runs)};
}

Outcome filter_contracts() {
    std::mt19937_64 rng(77001);
    constexpr int kCases = 10000;
    int violations = 0;
    std::string first;
    auto violate = [&](int c, const std::string& what) {
        if (first.empty()) first = fmt::format(", case {}: {}", c, what);
        ++violations;
    };
    for (int c = 0; c < kCases; ++c) {
        // Lists of 100 items, with some longer ones to exercise the window.
        const std::size_t n = c % 4 == 0 ? 100 + rng() % 60 : 100;
        const auto list = testing::random_hidden_list(rng, n);
        const std::size_t window = c % 2 == 0 ? 100 : 1 + rng() % 100;
        auto items = list.items;
        const auto relevant = testing::doc_ids(evidence::filter_top10_relevant(items, testing::hidden_judge(list), window));
        const auto trusted = testing::doc_ids(evidence::filter_top3_trusted(items, testing::hidden_judge(list), 0.7, window));
        const auto all = testing::doc_ids(list.items);

        std::set<std::string> relevant_in_window;
        std::map<std::string, double> trust;
        for (std::size_t i = 0; i < list.items.size(); ++i) {
            trust[list.items[i].doc_id] = list.items[i].trust;
            if (i < window && list.truth.at(list.items[i].doc_id)) relevant_in_window.insert(list.items[i].doc_id);
        }
        for (const auto& id : trusted) {
            if (!relevant_in_window.contains(id)) violate(c, "trusted item outside the relevant set");
            if (trust[id] < 0.7) violate(c, "trusted item below threshold");
        }
        for (const auto& id : relevant) {
            if (!relevant_in_window.contains(id)) violate(c, "relevant item not relevant or outside window");
        }
        if (!is_subsequence(relevant, all) || !is_subsequence(trusted, all)) violate(c, "order not preserved");
        for (std::size_t i = window; i < items.size(); ++i) {
            if (items[i].relevant.has_value()) violate(c, "item past the window was judged");
        }
        // Inclusive threshold and fewer-than-quota fallback are both part of the definition.
        if (relevant != testing::expected_filter(list, -1.0, window, 10)) violate(c, "relevant filter differs from definition");
        if (trusted != testing::expected_filter(list, 0.7, window, 3)) violate(c, "trusted filter differs from definition");
    }
    return {violations == 0, fmt::format("{} cases, {} violations{}", kCases, violations, first)};
}

Outcome scoring_fixture() {
    const auto dir = kData / "fixture" / "worked_example";
    const auto rubric = evaluation::load_rubric(dir / "rubric.json");
    const auto judgments = evaluation::load_judgments(dir / "judgments.json");
    const double raw = evaluation::qgen_score(rubric, judgments, false);
    const double norm = evaluation::qgen_score(rubric, judgments, true);
    const bool ok = std::abs(raw - 2.5) <= 1e-9 && std::abs(norm - 0.8333) <= 1e-4 && std::abs(norm - 5.0 / 6.0) <= 1e-9;
    return {ok, fmt::format("raw {}, normalized {:.10f}", raw, norm)};
}

Outcome metrics_and_deltas(const fs::path& golden_run) {
    std::mt19937_64 rng(6060);
    int fixtures = 0, bad = 0;
    for (; fixtures < 50; ++fixtures) {
        const auto list = testing::random_hidden_list(rng, rng() % 30);
        auto pre = list.items;
        auto post = list.items;
        std::shuffle(post.begin(), post.end(), rng);
        const auto mp = evidence::compute_metrics(pre, evidence::Stage::pre_rerank, testing::hidden_judge(list));
        const auto mq = evidence::compute_metrics(post, evidence::Stage::post_rerank, testing::hidden_judge(list));
        auto hand = [&](const std::vector<evidence::EvidenceItem>& items) {
            const std::size_t k = std::min<std::size_t>(10, items.size());
            int rel = 0;
            for (std::size_t i = 0; i < k; ++i) rel += list.truth.at(items[i].doc_id) ? 1 : 0;
            return k ? static_cast<double>(rel) / static_cast<double>(k) : 0.0;
        };
        const auto d = evidence::delta(mq, mp);
        const bool ok = mp.relevance_at_10 == hand(list.items) && mq.relevance_at_10 == hand(post) &&
                        d.relevance == mq.relevance_at_10 - mp.relevance_at_10 &&
                        d.trust == mq.mean_trust_at_10 - mp.mean_trust_at_10 && mp.flagged == list.items.empty();
        bad += ok ? 0 : 1;
    }

    // Delta columns of the golden run's tables.
    int rows_checked = 0, bad_rows = 0;
    if (golden_run.empty() || !fs::exists(golden_run / "metrics.csv")) {
        return {false, "golden run missing"};
    }
    for (const char* file : {"metrics.csv", "metrics_summary.csv"}) {
        const auto rows = read_csv(golden_run / file);
        if (rows.empty()) return {false, fmt::format("{} is empty", file)};
        const auto& head = rows[0];
        auto col = [&](const char* name) {
            return static_cast<std::size_t>(std::find(head.begin(), head.end(), name) - head.begin());
        };
        const auto stage = col("stage"), dr = col("delta_relevance"), dt = col("delta_trust");
        const auto rel = col(std::string(file) == "metrics.csv" ? "relevance_at_10" : "mean_relevance_at_10");
        const auto tr = col("mean_trust_at_10");
        for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
            if (rows[i][stage] != "pre_rerank" || rows[i + 1][stage] != "post_rerank") continue;
            ++rows_checked;
            const auto& a = rows[i];
            const auto& b = rows[i + 1];
            const bool ok = std::stod(b[dr]) == std::stod(b[rel]) - std::stod(a[rel]) &&
                            std::stod(b[dt]) == std::stod(b[tr]) - std::stod(a[tr]);
            bad_rows += ok ? 0 : 1;
        }
    }
    return {bad == 0 && bad_rows == 0 && rows_checked > 0,
            fmt::format("{} fixtures ({} wrong), {} delta rows ({} wrong)", fixtures, bad, rows_checked, bad_rows)};
}

Outcome end_to_end_determinism(const fs::path& cli, const fs::path& work, fs::path& golden_run) {
    const auto fixture = kData / "fixture";
    struct Run {
        fs::path dir;
        int jobs;
    };
    const std::vector<Run> runs{{work / "run1", 1}, {work / "run2", 1}, {work / "run3", 1}, {work / "run4", 4}};
    double slowest = 0.0;
    for (const auto& r : runs) {
        const auto t0 = Clock::now();
        const int code = run_cli(cli,
                                 {"run", "--corpus", (fixture / "corpus.jsonl").string(), "--articles",
                                  (fixture / "articles.jsonl").string(), "--trust", (fixture / "trust.csv").string(),
                                  "--rubric", (fixture / "rubric").string(), "--out-dir", r.dir.string(), "--seed", "7",
                                  "--jobs", std::to_string(r.jobs)},
                                 work / (r.dir.filename().string() + ".log"));
        slowest = std::max(slowest, seconds_since(t0));
        if (code != 0) return {false, fmt::format("{} exited {}", r.dir.filename().string(), code)};
    }
    golden_run = runs[0].dir;
    const auto reference = tree_contents(runs[0].dir);
    std::string diff;
    for (std::size_t i = 1; i < runs.size() && diff.empty(); ++i) {
        const auto other = tree_contents(runs[i].dir);
        if (other.size() != reference.size()) diff = fmt::format("run{} has {} files", i + 1, other.size());
        for (const auto& [name, bytes] : reference) {
            const auto it = other.find(name);
            if (it == other.end() || it->second != bytes) {
                diff = fmt::format("run{} differs in {}", i + 1, name);
                break;
            }
        }
    }
    const bool complete = reference.contains("task1_questions.json") && reference.contains("task2_reports.json") &&
                          reference.contains("evaluation.csv");
    return {diff.empty() && complete && slowest < 60.0,
            fmt::format("{} runs (jobs 1 and 4), {} files each, slowest {:.2f} s{}", runs.size(), reference.size(),
                        slowest, diff.empty() ? "" : ", " + diff)};
}

Outcome citation_integrity(const fs::path& cli, const fs::path& golden_run) {
    if (golden_run.empty()) return {false, "golden run missing"};
    const auto reports = nlohmann::json::parse(read_file(golden_run / "task2_reports.json"));
    std::size_t cites = 0;
    for (const auto& r : reports) {
        cites += r.at("citations").size();
        for (const auto& a : r.at("answers")) cites += a.at("citations").size();
    }
    const int code = run_cli(cli,
                             {"check-citations", "--report", (golden_run / "task2_reports.json").string(), "--evidence",
                              (golden_run / "evidence_baseline.jsonl").string()},
                             golden_run.parent_path() / "check.log");
    return {code == 0 && cites > 0,
            fmt::format("{} reports, {} citations, checker exit {}", reports.size(), cites, code)};
}

Outcome fault_injection() {
    using testing::ScriptedBackend;
    const std::string question = "Who funds the publisher of this column?";
    const auto baseline_ast = expansion::plan_baseline(question).ast;

    struct Case {
        std::string name;
        std::function<bool()> check;
    };
    std::vector<Case> cases;

    auto expansion_case = [&](std::string name, expansion::Strategy s, const char* tmpl, std::string reply) {
        cases.push_back({std::move(name), [=] {
                             auto b = std::make_shared<ScriptedBackend>();
                             b->always(tmpl, reply);
                             const auto gw = testing::scripted_gateway(b);
                             const auto plan = expansion::make_plan(s, gw, question);
                             return plan.fallback && plan.strategy == expansion::Strategy::baseline &&
                                    plan.requested == s && plan.ast == baseline_ast && b->calls(tmpl) == 2;
                         }});
    };

    std::vector<std::string> bad_dsl{
        "not json at all",
        "",
        "[1, 2, 3]",
        R"({"bool":{}})",
        R"({"bool":{"must":[{"match":{"title":{"query":"x","boost":0}}}]}})",
        R"({"bool":{"must":[{"match":{"title":{"query":"x","boost":"high"}}}]}})",
        R"({"bool":{"must":[{"term":{"title":"x"}}]}})",
        R"({"bool":{"must":{"match":{"title":{"query":"x"}}}}})",
        R"({"bool":{"must":[{"match":{"title":{"query":"the"}}}]}})",
        "```json\n{\"bool\":{\"must\":[\n```",
    };
    std::string deep = R"({"match":{"body":{"query":"funding"}}})";
    for (int i = 0; i < 12; ++i) deep = R"({"bool":{"must":[)" + deep + "]}}";
    bad_dsl.push_back(deep);
    for (std::size_t i = 0; i < bad_dsl.size(); ++i) {
        expansion_case(fmt::format("bad DSL #{}", i + 1), expansion::Strategy::structured, "structured_expansion",
                       bad_dsl[i]);
    }
    const std::vector<std::string> no_terms{
        "The question concerns funding.\nSo we search for funders.",
        "",
        "TERMS:",
        "TERMS: ; ;",
        "Reasoning first.\nTERMS: the; of; and",
    };
    for (std::size_t i = 0; i < no_terms.size(); ++i) {
        expansion_case(fmt::format("missing TERMS #{}", i + 1), expansion::Strategy::cot, "cot_expansion", no_terms[i]);
    }
    const std::vector<std::string> no_phrases{"", "-\n*\n\"\"", "the\nof the\nand"};
    for (std::size_t i = 0; i < no_phrases.size(); ++i) {
        expansion_case(fmt::format("empty keyphrases #{}", i + 1), expansion::Strategy::boolean, "boolean_expansion",
                       no_phrases[i]);
    }

    const auto idx = index::InvertedIndex::build(
        {{"d1", "https://a.com", "Funding", "", "The publisher is funded by a foundation."},
         {"d2", "https://b.com", "Stadium", "", "The stadium opened in spring."}});
    for (const auto& reply : std::vector<std::string>{"maybe", "", "unsure", "42", "The document discusses funding."}) {
        cases.push_back({fmt::format("unparseable judge reply '{}'", reply), [&idx, question, reply] {
                             auto b = std::make_shared<ScriptedBackend>();
                             b->always("relevance_judge", reply);
                             const auto gw = testing::scripted_gateway(b);
                             evidence::RelevanceJudge judge(gw, idx);
                             auto items = evidence::retrieve(idx, query::term("fund"));
                             if (items.empty()) return false;
                             const auto kept = evidence::filter_top10_relevant(items, judge.for_question(question));
                             return kept.empty() && items[0].relevant == false &&
                                    items[0].has_flag(evidence::kFlagJudgeUnparseable) && judge.calls() == 2;
                         }});
    }

    const index::Document article{"a1", "https://a.com", "Stadium column", "", "The stadium deal is good for the city."};
    for (const auto& reply : std::vector<std::string>{"Scores unavailable.", "Currency: 9\nRelevance: 2"}) {
        cases.push_back({"unparseable CRAAP reply", [article, reply] {
                             auto b = std::make_shared<ScriptedBackend>();
                             b->always("craap_scoring", reply);
                             const auto gw = testing::scripted_gateway(b);
                             const auto stats = index::compute_stats(std::vector<index::Document>{article});
                             questions::Question q;
                             q.topic_id = "a1";
                             q.text = "Who pays for the stadium?";
                             const auto m = questions::quality_metrics(gw, q, article, stats);
                             return m.craap_flagged && !m.craap && b->calls("craap_scoring") == 2;
                         }});
    }
    for (const auto& reply : std::vector<std::string>{"no opinion", "LABEL: somewhat"}) {
        cases.push_back({"unparseable similarity label", [reply] {
                             auto b = std::make_shared<ScriptedBackend>();
                             b->always("similarity_judge", reply);
                             const auto gw = testing::scripted_gateway(b);
                             const std::vector<evaluation::RubricEntry> rubric{{"Who funds it?",
                                                                                evaluation::Importance::have_to_know}};
                             const std::vector<std::string> sys{"Who pays?"};
                             const std::vector<evaluation::QuestionMatch> m{{0, {0}, {0.9}}};
                             const auto r = evaluation::llm_judge(gw, rubric, sys, m);
                             return r.unparseable == 1 &&
                                    r.judgments[0].matches[0].label == evaluation::SimilarityLabel::very_different;
                         }});
    }

    auto evidence_items = [&idx] {
        std::vector<evidence::EvidenceItem> out;
        for (std::uint32_t i = 0; i < idx.size(); ++i) {
            evidence::EvidenceItem it;
            it.doc_id = idx.document(i).doc_id;
            it.ordinal = i;
            out.push_back(it);
        }
        return out;
    };
    cases.push_back({"answer cites a missing source", [&] {
                         auto b = std::make_shared<ScriptedBackend>();
                         b->always("answer_question", "It is funded by a foundation [7].");
                         const auto a = report::answer_question(testing::scripted_gateway(b), question,
                                                                evidence_items(), idx);
                         return a.has_flag(report::kFlagCitationOutOfRange) && a.citations.empty() &&
                                a.has_flag(report::kFlagNoCitations);
                     }});
    cases.push_back({"re-ranker fails on every passage", [&] {
                         struct Failing : evidence::RelevanceScorer {
                             int calls = 0;
                             std::vector<std::optional<double>> score(std::string_view,
                                                                      std::span<const std::string> p) override {
                                 ++calls;
                                 return std::vector<std::optional<double>>(p.size());
                             }
                         } scorer;
                         auto items = evidence::retrieve(idx, query::any_of({query::term("stadium"), query::term("fund")}));
                         const auto before = testing::doc_ids(items);
                         const auto out = evidence::rerank(question, items, scorer, idx);
                         bool flagged = !out.empty();
                         for (const auto& it : out) flagged = flagged && it.has_flag(evidence::kFlagScorerFailed);
                         return flagged && testing::doc_ids(out) == before && scorer.calls == 2;
                     }});

    int passed = 0;
    std::string first;
    for (const auto& c : cases) {
        bool ok = false;
        try {
            ok = c.check();
        } catch (const std::exception& e) {
            if (first.empty()) first = fmt::format(", '{}' threw {}", c.name, e.what());
        }
        if (ok) {
            ++passed;
        } else if (first.empty()) {
            first = fmt::format(", '{}' failed", c.name);
        }
    }
    return {cases.size() == 30 && passed == 30, fmt::format("{}/{} cases{}", passed, cases.size(), first)};
}

}  // namespace dragun::acceptance
