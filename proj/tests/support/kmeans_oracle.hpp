#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace dragun::testing {

// Minimum within-cluster SSE over every split of the points into two
// non-empty groups, each scored against its own mean.
inline double exhaustive_two_cluster_sse(const std::vector<std::vector<double>>& pts) {
    const std::size_t n = pts.size();
    const std::size_t dim = pts.front().size();
    double best = std::numeric_limits<double>::infinity();
    // Point 0 stays in group A, so each split is visited once.
    for (std::uint32_t mask = 1; mask < (1u << (n - 1)); ++mask) {
        double total = 0;
        for (int group = 0; group < 2; ++group) {
            std::vector<double> mean(dim, 0.0);
            std::size_t count = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const bool in_b = i > 0 && ((mask >> (i - 1)) & 1u);
                if (in_b != (group == 1)) continue;
                for (std::size_t d = 0; d < dim; ++d) mean[d] += pts[i][d];
                ++count;
            }
            for (auto& m : mean) m /= static_cast<double>(count);
            for (std::size_t i = 0; i < n; ++i) {
                const bool in_b = i > 0 && ((mask >> (i - 1)) & 1u);
                if (in_b != (group == 1)) continue;
                for (std::size_t d = 0; d < dim; ++d) total += (pts[i][d] - mean[d]) * (pts[i][d] - mean[d]);
            }
        }
        if (total < best) best = total;
    }
    return best;
}

}  // namespace dragun::testing
