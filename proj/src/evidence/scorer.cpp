#include "dragun/evidence/scorer.hpp"

#include "dragun/error.hpp"
#include "dragun/text/analyzer.hpp"

#include <algorithm>
#include <set>

namespace dragun::evidence {

std::vector<std::optional<double>> StubScorer::score(std::string_view query, std::span<const std::string> passages) {
    const auto q = text::analyze(query);
    const std::set<std::string> qs(q.begin(), q.end());
    std::vector<std::optional<double>> out;
    out.reserve(passages.size());
    for (const auto& p : passages) {
        const auto d = text::analyze(p);
        const std::set<std::string> ds(d.begin(), d.end());
        std::size_t overlap = 0;
        for (const auto& t : qs) overlap += ds.contains(t) ? 1 : 0;
        out.emplace_back(static_cast<double>(overlap));
    }
    return out;
}

HttpScorer::HttpScorer(std::string base_url, Options options, std::shared_ptr<llm::Clock> clock)
    : client_(std::move(base_url), options.http, std::move(clock)), batch_size_(std::max<std::size_t>(1, options.batch_size)) {}

std::vector<std::optional<double>> HttpScorer::score(std::string_view query, std::span<const std::string> passages) {
    std::vector<std::optional<double>> out;
    out.reserve(passages.size());
    for (std::size_t start = 0; start < passages.size(); start += batch_size_) {
        const auto batch = passages.subspan(start, std::min(batch_size_, passages.size() - start));
        nlohmann::json reply;
        try {
            reply = client_.post("/score", {{"query", query}, {"passages", batch}});
        } catch (const TransportError&) {
            out.insert(out.end(), batch.size(), std::nullopt);
            continue;
        }
        if (!reply.contains("scores") || !reply["scores"].is_array() || reply["scores"].size() != batch.size()) {
            throw TransportError("scorer reply lacks a \"scores\" list matching the passages", 200);
        }
        for (const auto& s : reply["scores"]) {
            if (s.is_number()) {
                out.emplace_back(s.get<double>());
            } else {
                out.emplace_back(std::nullopt);
            }
        }
    }
    return out;
}

}  // namespace dragun::evidence
