#pragma once

// Random evidence lists with hidden relevance, and direct re-statements of
// the filter and metric definitions to check the library against.

#include "dragun/evidence/pipeline.hpp"

#include <map>
#include <random>
#include <string>
#include <vector>

namespace dragun::testing {

struct HiddenList {
    std::vector<evidence::EvidenceItem> items;
    std::map<std::string, bool> truth;
};

// n items in rerank order. Trust values are drawn from a grid that includes
// the values on either side of 0.7, and exactly 0.7.
inline HiddenList random_hidden_list(std::mt19937_64& rng, std::size_t n = 100) {
    static constexpr double kTrusts[] = {0.0, 0.3, 0.55, 0.69, 0.7, 0.7, 0.71, 0.85, 0.93, 1.0};
    std::uniform_real_distribution<double> u(0, 1);
    const double p_rel = u(rng);
    HiddenList out;
    for (std::size_t i = 0; i < n; ++i) {
        evidence::EvidenceItem it;
        it.doc_id = "doc-" + std::to_string(i) + "-" + std::to_string(rng() % 1000);
        it.bm25_rank = static_cast<int>(i) + 1;
        it.rerank_rank = static_cast<int>(i) + 1;
        it.rerank_score = static_cast<double>(n - i);
        it.trust = kTrusts[rng() % std::size(kTrusts)];
        out.truth[it.doc_id] = u(rng) < p_rel;
        out.items.push_back(std::move(it));
    }
    return out;
}

inline evidence::JudgeFn hidden_judge(const HiddenList& list, int* calls = nullptr) {
    return [&list, calls](const evidence::EvidenceItem& item) {
        if (calls) ++*calls;
        return evidence::Judgement{list.truth.at(item.doc_id), false};
    };
}

inline std::vector<std::string> expected_filter(const HiddenList& list, double threshold, std::size_t window,
                                                std::size_t quota) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < list.items.size() && i < window; ++i) {
        const auto& it = list.items[i];
        if (list.truth.at(it.doc_id) && it.trust >= threshold) out.push_back(it.doc_id);
        if (out.size() == quota) break;
    }
    return out;
}

inline std::vector<std::string> doc_ids(const std::vector<evidence::EvidenceItem>& items) {
    std::vector<std::string> out;
    for (const auto& i : items) out.push_back(i.doc_id);
    return out;
}

}  // namespace dragun::testing
