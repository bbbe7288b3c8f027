#include "cli.hpp"

#include "dragun/error.hpp"
#include "dragun/evaluation/evaluation.hpp"
#include "dragun/evidence/trust.hpp"
#include "dragun/index/document.hpp"
#include "dragun/index/inverted_index.hpp"
#include "dragun/io.hpp"
#include "dragun/pipeline/stages.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>

namespace dragun::cli {
namespace {

namespace fs = std::filesystem;
using expansion::Strategy;

nlohmann::json load_json(const fs::path& path) {
    auto j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw DataError(fmt::format("{}: not valid JSON", path.string()));
    return j;
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

void print_warnings(std::ostream& err, const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) fmt::print(err, "warning: {}\n", w);
}

std::vector<index::Document> load_docs(const fs::path& path, std::ostream& err, bool lenient = false) {
    auto r = index::read_documents_jsonl(path, {lenient});
    for (const auto& m : r.skip_messages) fmt::print(err, "warning: skipped {}\n", m);
    return std::move(r.documents);
}

std::string strategy_file(Strategy s) { return fmt::format("evidence_{}.jsonl", expansion::to_string(s)); }

std::vector<Strategy> strategies_for(const pipeline::RunConfig& config, bool all) {
    if (all) return {std::begin(expansion::kAllStrategies), std::end(expansion::kAllStrategies)};
    return {config.expansion_strategy};
}

void print_stats(std::ostream& out, const index::IndexStats& s, std::size_t terms, std::size_t skipped) {
    fmt::print(out, "docs: {}\n", s.doc_count);
    fmt::print(out, "terms: {}\n", terms);
    fmt::print(out, "avg field length: title {:.3f}, headings {:.3f}, body {:.3f}\n", s.avg_field_length[0],
               s.avg_field_length[1], s.avg_field_length[2]);
    if (skipped > 0) fmt::print(out, "skipped lines: {}\n", skipped);
}

struct Evaluated {
    std::vector<pipeline::TopicScore> scores;
    nlohmann::json judgments = nlohmann::json::object();
    std::vector<std::string> warnings;
};

fs::path topic_file(const fs::path& dir, const std::string& topic) { return dir / (topic + ".json"); }

}  // namespace

pipeline::RunConfig resolve_config(const std::optional<fs::path>& config_file, const Overrides& o) {
    pipeline::RunConfig c;
    if (config_file) pipeline::apply_config_file(c, *config_file);
    nlohmann::json j = nlohmann::json::object();
    if (o.seed) j["seed"] = *o.seed;
    if (o.jobs) j["jobs"] = *o.jobs;
    if (o.backend) j["gateway"] = {{"backend", *o.backend}};
    if (o.prompts_dir) j["prompts_dir"] = *o.prompts_dir;
    if (o.questions_per_article) j["questions_per_article"] = *o.questions_per_article;
    if (o.question_candidates) j["question_candidates"] = *o.question_candidates;
    if (o.filter_mode) j["filter_mode"] = *o.filter_mode;
    if (o.strategy) j["expansion_strategy"] = *o.strategy;
    if (o.k_retrieve) j["k_retrieve"] = *o.k_retrieve;
    if (o.rerank_window) j["rerank_window"] = *o.rerank_window;
    if (o.filter_window) j["filter_window"] = *o.filter_window;
    if (o.trust_threshold) j["trust_threshold"] = *o.trust_threshold;
    if (o.scorer) j["scorer"] = *o.scorer;
    if (o.scorer_url) j["scorer_url"] = *o.scorer_url;
    if (o.max_report_words) j["max_report_words"] = *o.max_report_words;
    if (o.top_m) j["match_top_m"] = *o.top_m;
    pipeline::apply_config_json(c, j);
    c.validate();
    return c;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Critical questions, evidence retrieval and trustworthiness reports for news articles"};
    app.name("dragun");
    app.require_subcommand(1);

    Overrides o;
    std::optional<fs::path> config_file;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_file, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "Seed for clustering and the stub backend");
        sub->add_option("--jobs", o.jobs, "Worker threads");
        sub->add_option("--backend", o.backend, "Model backend: stub or live");
        sub->add_option("--prompts", o.prompts_dir, "Directory of prompt template overrides");
    };

    fs::path corpus, index_dir, articles, trust_csv, questions_file, evidence_file, report_file, out_file, out_dir;
    fs::path rubric, judgments;
    std::optional<std::string> topic;
    bool lenient = false, all_strategies = false, llm_judge = false, raw = false;

    auto* c_index = app.add_subcommand("index", "Build an index from corpus JSONL");
    c_index->add_option("--corpus", corpus, "Corpus JSONL")->required();
    c_index->add_option("--index", index_dir, "Index directory")->required();
    c_index->add_flag("--lenient", lenient, "Skip malformed lines");

    auto* c_questions = app.add_subcommand("questions", "Generate, filter and select questions (Task-1 run)");
    common(c_questions);
    c_questions->add_option("--articles", articles, "Articles JSONL")->required();
    c_questions->add_option("--out", out_file, "Task-1 run JSON")->required();
    c_questions->add_option("--questions-per-article", o.questions_per_article, "Questions kept per article");
    c_questions->add_option("--candidates", o.question_candidates, "Questions requested per article");
    c_questions->add_option("--filter", o.filter_mode, "Filter mode: rules or llm");

    auto* c_retrieve = app.add_subcommand("retrieve", "Retrieve, re-rank and filter evidence per question");
    common(c_retrieve);
    c_retrieve->add_option("--index", index_dir, "Index directory")->required();
    c_retrieve->add_option("--trust", trust_csv, "Domain trust CSV")->required();
    c_retrieve->add_option("--questions", questions_file, "Task-1 run JSON")->required();
    c_retrieve->add_option("--out-dir", out_dir, "Output directory")->required();
    c_retrieve->add_option("--strategy", o.strategy, "baseline, boolean, cot or structured");
    c_retrieve->add_flag("--all-strategies", all_strategies, "Run all four strategies");
    c_retrieve->add_option("--k", o.k_retrieve, "Candidates retrieved per question");
    c_retrieve->add_option("--rerank-window", o.rerank_window, "Candidates re-ranked");
    c_retrieve->add_option("--filter-window", o.filter_window, "Candidates scanned by the filters");
    c_retrieve->add_option("--threshold", o.trust_threshold, "Minimum domain trust for the trusted filter");
    c_retrieve->add_option("--scorer", o.scorer, "Re-ranker: stub or http");
    c_retrieve->add_option("--scorer-url", o.scorer_url, "Base URL of the re-ranker service");

    auto* c_report = app.add_subcommand("report", "Write cited answers and reports (Task-2 run)");
    common(c_report);
    c_report->add_option("--index", index_dir, "Index directory")->required();
    c_report->add_option("--evidence", evidence_file, "Evidence JSONL from retrieve")->required();
    c_report->add_option("--articles", articles, "Articles JSONL, for titles");
    c_report->add_option("--out", out_file, "Task-2 run JSON")->required();
    c_report->add_option("--max-words", o.max_report_words, "Report length limit");

    auto* c_check = app.add_subcommand("check-citations", "Verify report citations against the evidence dump");
    c_check->add_option("--report", report_file, "Task-2 run JSON")->required();
    c_check->add_option("--evidence", evidence_file, "Evidence JSONL")->required();

    auto* c_eval = app.add_subcommand("evaluate", "Score questions against a rubric");
    common(c_eval);
    c_eval->add_option("--rubric", rubric, "Rubric JSON, or a directory of <topic_id>.json")->required();
    c_eval->add_option("--judgments", judgments, "Judgments JSON, or a directory of <topic_id>.json");
    c_eval->add_flag("--llm-judge", llm_judge, "Label matches with the model (unofficial)");
    c_eval->add_option("--questions", questions_file, "Task-1 run JSON (needed with --llm-judge)");
    c_eval->add_option("--topic", topic, "Topic id when --rubric is a single file");
    c_eval->add_option("--top-m", o.top_m, "System questions matched per rubric question");
    c_eval->add_flag("--raw", raw, "Print the raw mean instead of the normalized score");
    c_eval->add_option("--out", out_file, "Scores CSV");

    auto* c_dash = app.add_subcommand("dashboard", "Question quality tables and correlations");
    c_dash->add_option("--questions", questions_file, "Task-1 run JSON")->required();
    c_dash->add_option("--out-dir", out_dir, "Directory for CSV and text output");

    auto* c_run = app.add_subcommand("run", "Index, questions, retrieval, reports and evaluation in one go");
    common(c_run);
    c_run->add_option("--corpus", corpus, "Corpus JSONL")->required();
    c_run->add_option("--articles", articles, "Articles JSONL")->required();
    c_run->add_option("--trust", trust_csv, "Domain trust CSV")->required();
    c_run->add_option("--out-dir", out_dir, "Output directory")->required();
    c_run->add_option("--rubric", rubric, "Directory of <topic_id>.json rubrics");
    c_run->add_option("--strategy", o.strategy, "Strategy whose evidence feeds the reports");
    c_run->add_flag("--all-strategies", all_strategies, "Retrieve with all four strategies");
    c_run->add_option("--questions-per-article", o.questions_per_article, "Questions kept per article");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    auto evaluate = [&](const pipeline::RunConfig& config, const llm::Gateway* gateway, const fs::path& rubric_path,
                        const std::optional<fs::path>& judgments_path, const nlohmann::json* task1) {
        Evaluated ev;
        std::vector<std::pair<std::string, fs::path>> topics;
        if (fs::is_directory(rubric_path)) {
            if (task1) {
                for (const auto& [t, qs] : pipeline::selected_questions(*task1)) {
                    if (fs::exists(topic_file(rubric_path, t))) topics.emplace_back(t, topic_file(rubric_path, t));
                }
            } else {
                for (const auto& e : fs::directory_iterator(rubric_path)) {
                    if (e.path().extension() == ".json") topics.emplace_back(e.path().stem().string(), e.path());
                }
                std::sort(topics.begin(), topics.end());
            }
        } else {
            topics.emplace_back(topic.value_or(rubric_path.stem().string()), rubric_path);
        }
        if (topics.empty()) throw DataError("no rubric found for any topic");

        const auto selected = task1 ? pipeline::selected_questions(*task1)
                                    : std::vector<std::pair<std::string, std::vector<std::string>>>{};
        for (const auto& [t, path] : topics) {
            const auto entries = evaluation::load_rubric(path);
            std::vector<evaluation::SimilarityJudgment> js;
            if (gateway) {
                const auto it = std::find_if(selected.begin(), selected.end(), [&](const auto& s) { return s.first == t; });
                if (it == selected.end() || it->second.empty()) {
                    ev.warnings.push_back(fmt::format("topic '{}' has no selected questions; skipped", t));
                    continue;
                }
                auto r = pipeline::llm_judgments(config, *gateway, entries, it->second);
                if (r.unparseable > 0) {
                    ev.warnings.push_back(fmt::format("topic '{}': {} judge replies unparseable", t, r.unparseable));
                }
                js = std::move(r.judgments);
                ev.judgments[t] = evaluation::to_json(js);
            } else {
                const auto jp = fs::is_directory(*judgments_path) ? topic_file(*judgments_path, t) : *judgments_path;
                js = evaluation::load_judgments(jp);
            }
            ev.scores.push_back({t, evaluation::qgen_score(entries, js, true), evaluation::qgen_score(entries, js, false),
                                 entries.size()});
        }
        return ev;
    };

    try {
        if (*c_index) {
            const auto report = index::ingest(corpus, index_dir, {lenient});
            print_stats(out, report.stats, report.stats.doc_freq.size(), report.skipped_lines);
            return 0;
        }
        if (*c_check) {
            const auto problems = pipeline::check_citations(load_json(report_file), read_file(evidence_file));
            for (const auto& p : problems) fmt::print(err, "error: {}\n", p);
            if (!problems.empty()) return 1;
            fmt::print(out, "citations ok\n");
            return 0;
        }
        if (*c_dash) {
            const auto d = evaluation::quality_dashboard(load_json(questions_file));
            if (!out_dir.empty()) {
                write_file_atomic(out_dir / "dashboard_topics.csv", evaluation::dashboard_topics_csv(d));
                write_file_atomic(out_dir / "dashboard_correlation.csv", evaluation::dashboard_correlation_csv(d));
                write_file_atomic(out_dir / "dashboard.txt", evaluation::dashboard_text(d));
            }
            fmt::print(out, "{}", evaluation::dashboard_text(d));
            return 0;
        }

        const auto config = resolve_config(config_file, o);

        if (*c_questions) {
            const auto gateway = pipeline::make_gateway(config);
            const auto docs = load_docs(articles, err);
            auto result = pipeline::run_questions(config, gateway, docs);
            print_warnings(err, result.warnings);
            write_json(out_file, result.run);
            fmt::print(out, "topics: {}\n", result.run.size());
            return 0;
        }
        if (*c_retrieve) {
            const auto gateway = pipeline::make_gateway(config);
            const auto idx = index::InvertedIndex::open(index_dir);
            const auto trust = evidence::load_trust_table(trust_csv);
            auto scorer = pipeline::make_scorer(config);
            const auto strategies = strategies_for(config, all_strategies);
            auto result = pipeline::run_retrieve(config, gateway, idx, trust, load_json(questions_file), strategies, *scorer);
            print_warnings(err, result.warnings);
            for (const auto& [s, text] : result.evidence_jsonl) write_file_atomic(out_dir / strategy_file(s), text);
            write_file_atomic(out_dir / "metrics.csv", result.metrics_csv);
            write_file_atomic(out_dir / "metrics_summary.csv", result.summary_csv);
            fmt::print(out, "{}", result.summary_csv);
            return 0;
        }
        if (*c_report) {
            const auto gateway = pipeline::make_gateway(config);
            const auto idx = index::InvertedIndex::open(index_dir);
            const auto docs = articles.empty() ? std::vector<index::Document>{} : load_docs(articles, err);
            const auto evidence_text = read_file(evidence_file);
            auto result = pipeline::run_report(config, gateway, idx, evidence_text, docs);
            print_warnings(err, result.warnings);
            const auto problems = pipeline::check_citations(result.run, evidence_text);
            for (const auto& p : problems) fmt::print(err, "error: {}\n", p);
            if (!problems.empty()) return 1;
            write_json(out_file, result.run);
            fmt::print(out, "reports: {}\n", result.run.size());
            return 0;
        }
        if (*c_eval) {
            if (!llm_judge && judgments.empty()) throw ConfigError("evaluate needs --judgments or --llm-judge");
            std::optional<nlohmann::json> task1;
            if (!questions_file.empty()) task1 = load_json(questions_file);
            if (llm_judge && !task1) throw ConfigError("--llm-judge needs --questions");
            std::optional<llm::Gateway> gateway;
            if (llm_judge) gateway.emplace(pipeline::make_gateway(config));
            const auto ev = evaluate(config, gateway ? &*gateway : nullptr, rubric,
                                     judgments.empty() ? std::nullopt : std::optional<fs::path>(judgments),
                                     task1 ? &*task1 : nullptr);
            print_warnings(err, ev.warnings);
            if (llm_judge) fmt::print(out, "note: similarity labels come from the model, not assessors\n");
            double sum = 0.0;
            for (const auto& s : ev.scores) {
                const double v = raw ? s.raw : s.normalized;
                sum += v;
                fmt::print(out, "{}\t{:.4f}\n", s.topic_id, v);
            }
            fmt::print(out, "mean\t{:.4f}\n", ev.scores.empty() ? 0.0 : sum / static_cast<double>(ev.scores.size()));
            if (!out_file.empty()) write_file_atomic(out_file, pipeline::scores_csv(ev.scores));
            return 0;
        }
        if (*c_run) {
            const auto gateway = pipeline::make_gateway(config);
            const auto docs = load_docs(corpus, err);
            const auto idx_dir = out_dir / "index";
            index::InvertedIndex::build(docs).save(idx_dir);
            const auto idx = index::InvertedIndex::open(idx_dir);
            const auto article_docs = load_docs(articles, err);

            auto q = pipeline::run_questions(config, gateway, article_docs);
            print_warnings(err, q.warnings);
            write_json(out_dir / "task1_questions.json", q.run);

            const auto trust = evidence::load_trust_table(trust_csv);
            auto scorer = pipeline::make_scorer(config);
            auto strategies = strategies_for(config, all_strategies);
            auto r = pipeline::run_retrieve(config, gateway, idx, trust, q.run, strategies, *scorer);
            print_warnings(err, r.warnings);
            for (const auto& [s, text] : r.evidence_jsonl) write_file_atomic(out_dir / strategy_file(s), text);
            write_file_atomic(out_dir / "metrics.csv", r.metrics_csv);
            write_file_atomic(out_dir / "metrics_summary.csv", r.summary_csv);

            const auto& evidence_text = r.evidence_jsonl.at(config.expansion_strategy);
            auto rep = pipeline::run_report(config, gateway, idx, evidence_text, article_docs);
            print_warnings(err, rep.warnings);
            write_json(out_dir / "task2_reports.json", rep.run);
            write_json(out_dir / "report_diagnostics.json", rep.diagnostics);
            const auto problems = pipeline::check_citations(rep.run, evidence_text);
            for (const auto& p : problems) fmt::print(err, "error: {}\n", p);
            if (!problems.empty()) return 1;

            const auto d = evaluation::quality_dashboard(q.run);
            write_file_atomic(out_dir / "dashboard_topics.csv", evaluation::dashboard_topics_csv(d));
            write_file_atomic(out_dir / "dashboard_correlation.csv", evaluation::dashboard_correlation_csv(d));
            write_file_atomic(out_dir / "dashboard.txt", evaluation::dashboard_text(d));

            if (!rubric.empty()) {
                const auto ev = evaluate(config, &gateway, rubric, std::nullopt, &q.run);
                print_warnings(err, ev.warnings);
                write_file_atomic(out_dir / "evaluation.csv", pipeline::scores_csv(ev.scores));
                write_json(out_dir / "evaluation_judgments.json", ev.judgments);
            }
            fmt::print(out, "topics: {}\nreports: {}\n", q.run.size(), rep.run.size());
            fmt::print(out, "{}", r.summary_csv);
            return 0;
        }
    } catch (const IoError& e) {
        fmt::print(err, "error: {}\n", e.what());
        return 2;
    } catch (const ConfigError& e) {
        fmt::print(err, "error: {}\n", e.what());
        return 2;
    } catch (const Error& e) {
        fmt::print(err, "error: {}\n", e.what());
        return 1;
    } catch (const nlohmann::json::exception& e) {
        fmt::print(err, "error: malformed input: {}\n", e.what());
        return 1;
    } catch (const fs::filesystem_error& e) {
        fmt::print(err, "error: {}\n", e.what());
        return 2;
    }
    return 2;
}

}  // namespace dragun::cli
