#include "dragun/pipeline/stages.hpp"

#include "dragun/error.hpp"
#include "dragun/questions/generation.hpp"
#include "dragun/report/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace dragun::pipeline {
namespace {

using expansion::Strategy;
using questions::Question;
using questions::QuestionStatus;

std::string num(double v) { return fmt::format("{}", v); }

nlohmann::json question_json(const Question& q) {
    return {{"text", q.text},
            {"status", questions::to_string(q.status)},
            {"quality", q.quality ? questions::to_json(*q.quality) : nlohmann::json(nullptr)}};
}

nlohmann::json metrics_json(const evidence::RetrievalMetrics& m) {
    return {{"relevance_at_10", m.relevance_at_10},
            {"mean_trust_at_10", m.mean_trust_at_10},
            {"considered", m.considered},
            {"flagged", m.flagged}};
}

nlohmann::json items_json(const std::vector<evidence::EvidenceItem>& items) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& i : items) out.push_back(evidence::to_json(i));
    return out;
}

nlohmann::json ids_json(const std::vector<evidence::EvidenceItem>& items) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& i : items) out.push_back(i.doc_id);
    return out;
}

std::vector<nlohmann::json> parse_jsonl(std::string_view text, std::string_view what) {
    std::vector<nlohmann::json> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw ParseError(std::string(what), n, "not a JSON object");
        out.push_back(std::move(j));
    }
    return out;
}

struct TopicEvidence {
    std::string topic_id;
    std::vector<std::pair<std::string, std::vector<std::string>>> questions;  // question, evidence doc ids
    std::set<std::string> dumped;
};

std::vector<TopicEvidence> group_evidence(std::string_view evidence_jsonl) {
    std::vector<TopicEvidence> topics;
    for (const auto& line : parse_jsonl(evidence_jsonl, "evidence")) {
        const auto topic = line.at("topic_id").get<std::string>();
        auto it = std::find_if(topics.begin(), topics.end(), [&](const auto& t) { return t.topic_id == topic; });
        if (it == topics.end()) {
            topics.push_back({topic, {}, {}});
            it = std::prev(topics.end());
        }
        for (const char* stage : {"pre_rerank", "post_rerank"}) {
            if (!line.contains(stage)) continue;
            for (const auto& item : line[stage]) it->dumped.insert(item.at("doc_id").get<std::string>());
        }
        if (!line.contains("question") || line.contains("error")) continue;
        auto trusted = line.value("top3_trusted", std::vector<std::string>{});
        auto relevant = line.value("top10_relevant", std::vector<std::string>{});
        it->questions.emplace_back(line["question"].get<std::string>(), trusted.empty() ? relevant : trusted);
    }
    return topics;
}

}  // namespace

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex mu;
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

llm::Gateway make_gateway(const RunConfig& config) {
    auto gw = config.gateway;
    gw.seed = config.seed;
    auto prompts = config.prompts_dir.empty() ? llm::PromptLibrary::builtin()
                                              : llm::PromptLibrary::from_directory(config.prompts_dir);
    return llm::Gateway(llm::make_backend(gw), std::move(prompts));
}

std::unique_ptr<evidence::RelevanceScorer> make_scorer(const RunConfig& config) {
    if (config.scorer == ScorerKind::stub) return std::make_unique<evidence::StubScorer>();
    evidence::HttpScorer::Options opts;
    opts.http.max_retries = config.gateway.max_retries;
    opts.http.backoff_base_seconds = config.gateway.backoff_base_seconds;
    opts.http.timeout_seconds = config.gateway.timeout_seconds;
    opts.http.requests_per_second = config.gateway.requests_per_second;
    opts.http.jitter_seed = config.seed;
    return std::make_unique<evidence::HttpScorer>(config.scorer_url, opts);
}

QuestionsOutput run_questions(const RunConfig& config, const llm::Gateway& gateway,
                              const std::vector<index::Document>& articles) {
    const auto idf = index::compute_stats(articles);
    std::vector<std::optional<nlohmann::json>> topics(articles.size());
    std::vector<std::vector<std::string>> warnings(articles.size());

    parallel_for(articles.size(), config.jobs, [&](std::size_t a) {
        const auto& article = articles[a];
        auto& warn = warnings[a];
        if (article.body.find_first_not_of(" \t\r\n") == std::string::npos) {
            warn.push_back(fmt::format("article '{}' has an empty body; topic skipped", article.doc_id));
            return;
        }
        questions::GenerationResult gen;
        try {
            gen = questions::generate_questions(gateway, article, {config.question_candidates, config.question_slack});
        } catch (const DataError& e) {
            warn.push_back(fmt::format("article '{}': {}; topic skipped", article.doc_id, e.what()));
            return;
        }
        if (gen.reprompted) warn.push_back(fmt::format("article '{}': question generation needed a re-prompt", article.doc_id));

        auto filtered = config.filter_mode == FilterMode::rules
                            ? questions::semantic_filter(gen.questions, config.max_question_words)
                            : questions::llm_filter(gateway, gen.questions, config.max_question_words);
        std::vector<std::size_t> pool;
        for (std::size_t i = 0; i < filtered.size(); ++i) {
            if (filtered[i].status == QuestionStatus::candidate) pool.push_back(i);
        }
        std::vector<std::size_t> chosen;
        if (!pool.empty()) {
            auto sel = questions::select_diverse(gateway, filtered, config.questions_per_article, config.seed);
            if (sel.fewer_than_k) {
                warn.push_back(fmt::format("article '{}': only {} valid candidates for {} questions; all kept",
                                           article.doc_id, pool.size(), config.questions_per_article));
                chosen = pool;
            } else {
                for (auto idx : sel.clusters->selected_indices) chosen.push_back(pool[idx]);
            }
            for (std::size_t s = 0; s < chosen.size(); ++s) {
                auto& q = filtered[chosen[s]];
                q.status = QuestionStatus::selected;
                q.embedding = sel.selected[s].embedding;
                q.quality = questions::quality_metrics(gateway, q, article, idf);
                if (q.quality->craap_flagged) {
                    warn.push_back(fmt::format("article '{}': CRAAP scores unparseable for \"{}\"", article.doc_id, q.text));
                }
            }
        } else {
            warn.push_back(fmt::format("article '{}': no question passed the filter", article.doc_id));
        }

        nlohmann::json qs = nlohmann::json::array();
        for (auto i : chosen) qs.push_back(question_json(filtered[i]));
        for (std::size_t i = 0; i < filtered.size(); ++i) {
            if (filtered[i].status != QuestionStatus::selected) qs.push_back(question_json(filtered[i]));
        }
        topics[a] = nlohmann::json{{"topic_id", article.doc_id}, {"questions", std::move(qs)}};
    });

    QuestionsOutput out;
    out.run = nlohmann::json::array();
    for (std::size_t a = 0; a < articles.size(); ++a) {
        if (topics[a]) out.run.push_back(std::move(*topics[a]));
        for (auto& w : warnings[a]) out.warnings.push_back(std::move(w));
    }
    return out;
}

std::vector<std::pair<std::string, std::vector<std::string>>> selected_questions(const nlohmann::json& task1) {
    if (!task1.is_array()) throw DataError("question run must be a JSON array of topics");
    std::vector<std::pair<std::string, std::vector<std::string>>> out;
    for (const auto& topic : task1) {
        if (!topic.is_object() || !topic.contains("topic_id") || !topic.contains("questions")) {
            throw DataError("each topic needs \"topic_id\" and \"questions\"");
        }
        std::vector<std::string> qs;
        for (const auto& q : topic["questions"]) {
            if (q.value("status", std::string()) == "selected") qs.push_back(q.at("text").get<std::string>());
        }
        out.emplace_back(topic["topic_id"].get<std::string>(), std::move(qs));
    }
    return out;
}

RetrieveOutput run_retrieve(const RunConfig& config, const llm::Gateway& gateway, const index::InvertedIndex& index,
                            const evidence::TrustTable& trust, const nlohmann::json& task1,
                            const std::vector<Strategy>& strategies, evidence::RelevanceScorer& scorer) {
    struct Task {
        Strategy strategy;
        std::string topic_id;
        std::size_t question_index;
        std::string question;
    };
    std::vector<Task> tasks;
    const auto topics = selected_questions(task1);
    for (auto s : strategies) {
        for (const auto& [topic, qs] : topics) {
            for (std::size_t i = 0; i < qs.size(); ++i) tasks.push_back({s, topic, i, qs[i]});
        }
    }

    struct Result {
        nlohmann::json line;
        std::optional<evidence::RetrievalMetrics> pre, post;
        bool fallback = false;
        std::vector<std::string> warnings;
    };
    std::vector<Result> results(tasks.size());
    const evidence::RelevanceJudge judge(gateway, index);

    parallel_for(tasks.size(), config.jobs, [&](std::size_t t) {
        const auto& task = tasks[t];
        auto& r = results[t];
        r.line = {{"topic_id", task.topic_id},
                  {"question_index", task.question_index},
                  {"question", task.question},
                  {"strategy", expansion::to_string(task.strategy)}};
        expansion::QueryPlan plan;
        try {
            plan = expansion::make_plan(task.strategy, gateway, task.question, config.expansion);
        } catch (const DataError& e) {
            r.line["error"] = e.what();
            r.warnings.push_back(fmt::format("{} / {} q{}: {}", expansion::to_string(task.strategy), task.topic_id,
                                             task.question_index, e.what()));
            return;
        }
        r.fallback = plan.fallback;
        r.line["plan"] = expansion::to_json(plan);

        auto pre = evidence::retrieve(index, plan.ast, static_cast<std::size_t>(config.k_retrieve));
        evidence::attach_trust(pre, trust);
        const auto head_size = std::min(pre.size(), static_cast<std::size_t>(config.rerank_window));
        std::vector<evidence::EvidenceItem> head(pre.begin(), pre.begin() + static_cast<std::ptrdiff_t>(head_size));
        auto post = evidence::rerank(task.question, std::move(head), scorer, index);
        post.insert(post.end(), pre.begin() + static_cast<std::ptrdiff_t>(head_size), pre.end());

        const auto judge_fn = judge.for_question(task.question);
        r.pre = evidence::compute_metrics(pre, evidence::Stage::pre_rerank, judge_fn);
        r.post = evidence::compute_metrics(post, evidence::Stage::post_rerank, judge_fn);
        const auto window = static_cast<std::size_t>(config.filter_window);
        const auto relevant = evidence::filter_top10_relevant(post, judge_fn, window, 10);
        const auto trusted = evidence::filter_top3_trusted(post, judge_fn, config.trust_threshold, window, 3);
        const auto d = evidence::delta(*r.post, *r.pre);

        r.line["pre_rerank"] = items_json(pre);
        r.line["post_rerank"] = items_json(post);
        r.line["top10_relevant"] = ids_json(relevant);
        r.line["top3_trusted"] = ids_json(trusted);
        r.line["metrics"] = {{"pre", metrics_json(*r.pre)},
                             {"post", metrics_json(*r.post)},
                             {"delta", {{"relevance", d.relevance}, {"trust", d.trust}}}};
    });

    RetrieveOutput out;
    out.metrics_csv =
        "strategy,topic_id,question_index,stage,relevance_at_10,mean_trust_at_10,delta_relevance,delta_trust,fallback\n";
    out.summary_csv =
        "strategy,stage,questions,mean_relevance_at_10,mean_trust_at_10,delta_relevance,delta_trust,fallback_rate\n";
    for (auto s : strategies) out.evidence_jsonl[s];

    struct Sums {
        std::size_t n = 0, plans = 0, fallbacks = 0;
        double pre_rel = 0, pre_trust = 0, post_rel = 0, post_trust = 0;
    };
    std::map<Strategy, Sums> sums;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const auto& task = tasks[t];
        auto& r = results[t];
        out.evidence_jsonl[task.strategy] += r.line.dump() + "\n";
        for (auto& w : r.warnings) out.warnings.push_back(std::move(w));
        auto& s = sums[task.strategy];
        if (!r.pre) continue;
        ++s.plans;
        s.fallbacks += r.fallback ? 1 : 0;
        ++s.n;
        s.pre_rel += r.pre->relevance_at_10;
        s.pre_trust += r.pre->mean_trust_at_10;
        s.post_rel += r.post->relevance_at_10;
        s.post_trust += r.post->mean_trust_at_10;
        const auto d = evidence::delta(*r.post, *r.pre);
        const auto name = expansion::to_string(task.strategy);
        out.metrics_csv += fmt::format("{},{},{},pre_rerank,{},{},,,{}\n", name, task.topic_id, task.question_index,
                                       num(r.pre->relevance_at_10), num(r.pre->mean_trust_at_10), r.fallback ? 1 : 0);
        out.metrics_csv += fmt::format("{},{},{},post_rerank,{},{},{},{},{}\n", name, task.topic_id,
                                       task.question_index, num(r.post->relevance_at_10),
                                       num(r.post->mean_trust_at_10), num(d.relevance), num(d.trust),
                                       r.fallback ? 1 : 0);
    }
    for (auto s : strategies) {
        const auto& v = sums[s];
        const double n = v.n ? static_cast<double>(v.n) : 1.0;
        const double rate = v.plans ? static_cast<double>(v.fallbacks) / static_cast<double>(v.plans) : 0.0;
        const double pre_rel = v.pre_rel / n, pre_trust = v.pre_trust / n;
        const double post_rel = v.post_rel / n, post_trust = v.post_trust / n;
        const auto name = expansion::to_string(s);
        out.summary_csv += fmt::format("{},pre_rerank,{},{},{},,,{}\n", name, v.n, num(pre_rel), num(pre_trust), num(rate));
        out.summary_csv += fmt::format("{},post_rerank,{},{},{},{},{},{}\n", name, v.n, num(post_rel), num(post_trust),
                                       num(post_rel - pre_rel), num(post_trust - pre_trust), num(rate));
    }
    return out;
}

ReportOutput run_report(const RunConfig& config, const llm::Gateway& gateway, const index::InvertedIndex& index,
                        std::string_view evidence_jsonl, const std::vector<index::Document>& articles) {
    const auto topics = group_evidence(evidence_jsonl);
    std::vector<report::TrustReport> reports(topics.size());
    std::vector<std::vector<std::string>> warnings(topics.size());

    parallel_for(topics.size(), config.jobs, [&](std::size_t t) {
        const auto& topic = topics[t];
        std::vector<report::CitedAnswer> answers;
        for (const auto& [question, ids] : topic.questions) {
            std::vector<evidence::EvidenceItem> items;
            for (const auto& id : ids) {
                const auto ordinal = index.find(id);
                if (!ordinal) throw DataError(fmt::format("evidence cites '{}', which is not in the index", id));
                evidence::EvidenceItem item;
                item.doc_id = id;
                item.ordinal = *ordinal;
                item.url = index.document(*ordinal).url;
                items.push_back(std::move(item));
            }
            answers.push_back(report::answer_question(gateway, question, items, index));
        }
        if (answers.empty()) {
            warnings[t].push_back(fmt::format("topic '{}' has no answerable questions; no report", topic.topic_id));
            return;
        }
        std::string title = topic.topic_id;
        for (const auto& a : articles) {
            if (a.doc_id == topic.topic_id && !a.title.empty()) title = a.title;
        }
        reports[t] = report::synthesize_report(gateway, topic.topic_id, title, std::move(answers),
                                               {config.max_report_words});
    });

    ReportOutput out;
    out.run = nlohmann::json::array();
    out.diagnostics = nlohmann::json::array();
    for (std::size_t t = 0; t < topics.size(); ++t) {
        for (auto& w : warnings[t]) out.warnings.push_back(std::move(w));
        const auto& r = reports[t];
        if (r.topic_id.empty()) continue;
        out.run.push_back(report::to_json(r));
        nlohmann::json answers = nlohmann::json::array();
        for (const auto& a : r.answers) answers.push_back({{"question", a.question}, {"flags", a.flags}});
        out.diagnostics.push_back(
            {{"topic_id", r.topic_id}, {"word_count", r.word_count}, {"flags", r.flags}, {"answers", std::move(answers)}});
    }
    return out;
}

std::vector<std::string> check_citations(const nlohmann::json& task2, std::string_view evidence_jsonl) {
    if (!task2.is_array()) throw DataError("report run must be a JSON array of topics");
    const auto topics = group_evidence(evidence_jsonl);
    std::vector<std::string> problems;
    for (const auto& j : task2) {
        const auto r = report::report_from_json(j);
        const auto it = std::find_if(topics.begin(), topics.end(), [&](const auto& t) { return t.topic_id == r.topic_id; });
        const std::set<std::string> allowed = it == topics.end() ? std::set<std::string>{} : it->dumped;
        for (const auto& id : report::citation_violations(r, allowed)) {
            problems.push_back(fmt::format("topic '{}' cites '{}', which is not in its evidence dump", r.topic_id, id));
        }
        std::set<std::string> answered;
        for (const auto& a : r.answers) answered.insert(a.citations.begin(), a.citations.end());
        for (const auto& id : r.report_citations) {
            if (!answered.contains(id)) {
                problems.push_back(fmt::format("topic '{}' report cites '{}', which no answer cites", r.topic_id, id));
            }
        }
    }
    return problems;
}

evaluation::LlmJudgeResult llm_judgments(const RunConfig& config, const llm::Gateway& gateway,
                                         const std::vector<evaluation::RubricEntry>& rubric,
                                         const std::vector<std::string>& system_questions) {
    const auto matches = evaluation::match_questions(gateway, rubric, system_questions, config.match_top_m);
    return evaluation::llm_judge(gateway, rubric, system_questions, matches);
}

std::string scores_csv(const std::vector<TopicScore>& scores) {
    std::string out = "topic_id,rubric_size,qgen_normalized,qgen_raw\n";
    double sn = 0.0, sr = 0.0;
    for (const auto& s : scores) {
        out += fmt::format("{},{},{},{}\n", s.topic_id, s.rubric_size, num(s.normalized), num(s.raw));
        sn += s.normalized;
        sr += s.raw;
    }
    const double n = scores.empty() ? 1.0 : static_cast<double>(scores.size());
    out += fmt::format("mean,,{},{}\n", num(sn / n), num(sr / n));
    return out;
}

}  // namespace dragun::pipeline
