#include "dragun/error.hpp"
#include "dragun/llm/gateway.hpp"
#include "dragun/llm/prompts.hpp"
#include "dragun/llm/rate_limiter.hpp"
#include "dragun/llm/stub_backend.hpp"
#include "dragun/resources.hpp"
#include "support/scripted_backend.hpp"
#include "support/temp_dir.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>

using namespace dragun;
using namespace dragun::llm;

TEST_CASE("render_template substitutes and rejects gaps") {
    CHECK(render_template("Hi {{name}}, {{name}}!", {{"name", "Ann"}}) == "Hi Ann, Ann!");
    CHECK(render_template("no placeholders", {}) == "no placeholders");
    CHECK_THROWS_AS(render_template("{{missing}}", {}), ConfigError);
    CHECK_THROWS_AS(render_template("open {{name", {{"name", "x"}}), ConfigError);
    CHECK(placeholders("{{b}} {{a}} {{b}}") == std::vector<std::string>{"b", "a"});
}

TEST_CASE("builtin prompt library") {
    const auto lib = PromptLibrary::builtin();
    CHECK_FALSE(lib.version().empty());
    for (const char* name : {"question_generation", "question_filter", "craap_scoring", "boolean_expansion",
                             "cot_expansion", "structured_expansion", "relevance_judge", "answer_question",
                             "synthesize_report", "similarity_judge"}) {
        CHECK(lib.contains(name));
    }
    CHECK(lib.get("question_generation").system.find("Investigate the Source") != std::string::npos);
    CHECK_FALSE(lib.snippet("retry_note").empty());
    CHECK_FALSE(lib.snippet("insufficient_evidence").empty());
    CHECK(find_resource("data/stopwords_en.txt").has_value());
}

TEST_CASE("prompt directory overrides fall back to builtin") {
    testing::TempDir tmp;
    tmp.write("VERSION", "test-7\n");
    tmp.write("question_filter.user.txt", "Classify: {{question}}");
    const auto lib = PromptLibrary::from_directory(tmp.path());
    CHECK(lib.get("question_filter").user == "Classify: {{question}}");
    CHECK(lib.get("question_filter").system == PromptLibrary::builtin().get("question_filter").system);
    CHECK(lib.get("craap_scoring").user == PromptLibrary::builtin().get("craap_scoring").user);
}

TEST_CASE("stub chat is a pure function of the request") {
    StubBackend a, b;
    ChatRequest req;
    req.system_prompt = "s";
    req.user_prompt = "u";
    req.template_id = "question_filter";
    req.bindings = {{"question", "Who owns the paper?"}, {"max_words", "30"}};
    CHECK(a.chat(req) == a.chat(req));
    CHECK(a.chat(req) == b.chat(req));
    CHECK(a.request_hash(req) == b.request_hash(req));

    StubBackend keyed(StubBackend::Options{.key = 99});
    CHECK(keyed.request_hash(req) != a.request_hash(req));
    auto other = req;
    other.user_prompt = "v";
    CHECK(a.request_hash(other) != a.request_hash(req));
}

TEST_CASE("stub canned replies fill bindings") {
    StubBackend stub(StubBackend::Options{.install_defaults = false});
    stub.register_canned("greet", {"Hello {{who}}"});
    ChatRequest req;
    req.user_prompt = "x";
    req.template_id = "greet";
    req.bindings = {{"who", "Ann"}};
    CHECK(stub.chat(req) == "Hello Ann");
    req.template_id = "unknown";
    CHECK(stub.chat(req) == "No reply is registered for this prompt.");
    CHECK_THROWS_AS(stub.register_canned("empty", {}), ConfigError);
}

TEST_CASE("fnv1a reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("stub embeddings") {
    StubBackend stub;
    const std::vector<std::string> same{"a stadium", "a stadium"};
    const auto e = stub.embed(same);
    REQUIRE(e.size() == 2);
    CHECK(e[0].vector.size() == 384);
    CHECK(e[0].vector == e[1].vector);
    CHECK(cosine(e[0].vector, e[1].vector) == doctest::Approx(1.0).epsilon(1e-6));

    for (const auto& text : {"Who owns the Daily Herald?", "x", "stadium funding vote"}) {
        const auto v = stub.embed(std::vector<std::string>{text})[0];
        double sq = 0;
        for (float x : v.vector) sq += static_cast<double>(x) * x;
        CHECK(std::sqrt(sq) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(v.norm == doctest::Approx(1.0).epsilon(1e-6));
    }

    // Pick two single-token texts whose buckets differ, then the cosine is exactly 0.
    REQUIRE(stub.feature("stadium").first != stub.feature("newspap").first);
    const auto d = stub.embed(std::vector<std::string>{"stadium", "newspaper"});
    CHECK(std::abs(cosine(d[0].vector, d[1].vector)) < 0.2);

    const auto o = stub.embed(std::vector<std::string>{"stadium funding vote", "stadium funding debate"});
    CHECK(cosine(o[0].vector, o[1].vector) > 0.0);

    StubBackend small(StubBackend::Options{.embedding_dim = 16});
    CHECK(small.embed(std::vector<std::string>{"x"})[0].vector.size() == 16);
}

TEST_CASE("gateway validates requests") {
    auto gw = testing::stub_gateway();
    ChatRequest req;
    CHECK_THROWS_AS(gw.chat(req), DataError);
    req.user_prompt = "hi";
    req.temperature = 2.5;
    CHECK_THROWS_AS(gw.chat(req), DataError);
    CHECK_THROWS_AS(gw.embed(std::vector<std::string>{}), DataError);
    CHECK_THROWS_AS(gw.chat_template("no_such_template", {}), ConfigError);
    CHECK_THROWS_AS(gw.chat_template("question_filter", {}), ConfigError);
}

TEST_CASE("retry requests carry the re-prompt note") {
    auto backend = std::make_shared<testing::ScriptedBackend>();
    auto gw = testing::scripted_gateway(backend);
    const Bindings b{{"question", "Who?"}, {"max_words", "30"}};
    gw.chat_template("question_filter", b);
    gw.chat_template_retry("question_filter", b);
    const auto reqs = backend->requests();
    REQUIRE(reqs.size() == 2);
    CHECK(reqs[1].user_prompt.starts_with(reqs[0].user_prompt));
    CHECK(reqs[1].user_prompt.find(gw.prompts().snippet("retry_note")) != std::string::npos);
    CHECK(reqs[0].template_id == "question_filter");
}

TEST_CASE("gateway config validation and live key") {
    GatewayConfig c;
    CHECK_NOTHROW(c.validate());
    c.max_retries = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.requests_per_second = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.backend = BackendKind::live;
    c.api_key_env_var = "DRAGUN_TEST_UNSET_KEY_VAR";
    ::unsetenv("DRAGUN_TEST_UNSET_KEY_VAR");
    CHECK_THROWS_AS(make_backend(c), ConfigError);
}

TEST_CASE("rate limiter spaces issues on a virtual clock") {
    auto clock = std::make_shared<VirtualClock>();
    RateLimiter limiter(4.0, clock);
    std::vector<double> times;
    for (int i = 0; i < 40; ++i) times.push_back(limiter.acquire());
    for (std::size_t i = 1; i < times.size(); ++i) CHECK(times[i] - times[i - 1] >= 0.25 - 1e-12);
    // Any window of length T sees at most floor(T * rate) + 1 issues.
    for (double window : {0.1, 0.5, 1.0, 2.5}) {
        for (std::size_t i = 0; i < times.size(); ++i) {
            std::size_t n = 0;
            for (std::size_t j = i; j < times.size() && times[j] < times[i] + window; ++j) ++n;
            CHECK(static_cast<double>(n) <= std::floor(window * 4.0) + 1);
        }
    }
}

TEST_CASE("rate limiter does not delay a caller that arrives late") {
    auto clock = std::make_shared<VirtualClock>();
    RateLimiter limiter(1.0, clock);
    CHECK(limiter.acquire() == 0.0);
    clock->sleep_until(10.0);
    CHECK(limiter.acquire() == 10.0);
    CHECK(limiter.acquire() == 11.0);
}
