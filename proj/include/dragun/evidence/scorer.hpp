#pragma once

#include "dragun/llm/openai_backend.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dragun::evidence {

/// Query-passage relevance scores for re-ranking. One entry per passage;
/// nullopt marks a passage the scorer could not score.
class RelevanceScorer {
public:
    virtual ~RelevanceScorer() = default;
    virtual std::vector<std::optional<double>> score(std::string_view query,
                                                     std::span<const std::string> passages) = 0;
};

/// Number of distinct analyzed question tokens present in the passage.
class StubScorer final : public RelevanceScorer {
public:
    std::vector<std::optional<double>> score(std::string_view query, std::span<const std::string> passages) override;
};

/// Calls an external cross-encoder: POST <base_url>/score with
/// {"query": ..., "passages": [...]} and expects {"scores": [...]} of equal
/// length; null entries mark failures. See docs/reranker_http.md.
class HttpScorer final : public RelevanceScorer {
public:
    struct Options {
        llm::JsonHttpClient::Options http;
        std::size_t batch_size = 64;
    };

    HttpScorer(std::string base_url, Options options, std::shared_ptr<llm::Clock> clock = nullptr);

    /// A batch whose request fails after retries yields nullopt for each of
    /// its passages; a reply of the wrong shape throws TransportError.
    std::vector<std::optional<double>> score(std::string_view query, std::span<const std::string> passages) override;

private:
    llm::JsonHttpClient client_;
    std::size_t batch_size_;
};

}  // namespace dragun::evidence
