#include "dragun/questions/kmeans.hpp"

#include "dragun/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <random>

namespace dragun::questions {
namespace {

// Uniform double in [0, 1) from the top 53 bits; identical on every platform,
// unlike std::uniform_real_distribution.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<Point> seed_plus_plus(std::span<const Point> points, int k, std::mt19937_64& rng) {
    const std::size_t n = points.size();
    std::vector<Point> centers;
    std::vector<bool> chosen(n, false);
    std::size_t first = std::min(n - 1, static_cast<std::size_t>(unit(rng) * static_cast<double>(n)));
    centers.push_back(points[first]);
    chosen[first] = true;

    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points[i], centers[0]);

    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (double v : d2) total += v;
        std::size_t pick = n;
        if (total > 0.0) {
            const double r = unit(rng) * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (d2[i] <= 0.0) continue;
                acc += d2[i];
                pick = i;
                if (acc > r) break;
            }
        } else {
            for (std::size_t i = 0; i < n && pick == n; ++i) {
                if (!chosen[i]) pick = i;
            }
        }
        centers.push_back(points[pick]);
        chosen[pick] = true;
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points[i], centers.back()));
    }
    return centers;
}

}  // namespace

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double within_cluster_sse(std::span<const Point> points, std::span<const int> assignments,
                          std::span<const Point> centroids) {
    double sse = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        sse += squared_distance(points[i], centroids[static_cast<std::size_t>(assignments[i])]);
    }
    return sse;
}

ClusterSelection kmeans(std::span<const Point> points, int k, std::uint64_t seed, KMeansOptions options) {
    if (k <= 0) throw DataError(fmt::format("k-means needs k >= 1, got {}", k));
    if (static_cast<std::size_t>(k) > points.size()) {
        throw DataError(fmt::format("k-means with k={} over only {} points", k, points.size()));
    }
    const std::size_t dim = points.front().size();
    for (const auto& p : points) {
        if (p.size() != dim) throw DataError("k-means points have different dimensions");
    }

    const std::size_t n = points.size();
    const auto kk = static_cast<std::size_t>(k);
    std::mt19937_64 rng(seed);

    ClusterSelection result;
    result.k = k;
    result.centroids = seed_plus_plus(points, k, rng);
    result.assignments.assign(n, -1);

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        // Assignment: move only to a strictly closer centroid.
        for (std::size_t i = 0; i < n; ++i) {
            int best = result.assignments[i];
            double best_d = best < 0 ? std::numeric_limits<double>::infinity()
                                     : squared_distance(points[i], result.centroids[static_cast<std::size_t>(best)]);
            for (std::size_t c = 0; c < kk; ++c) {
                const double d = squared_distance(points[i], result.centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(c);
                }
            }
            result.assignments[i] = best;
        }

        // Empty-cluster repair.
        std::vector<std::size_t> sizes(kk, 0);
        for (int a : result.assignments) ++sizes[static_cast<std::size_t>(a)];
        for (std::size_t c = 0; c < kk; ++c) {
            if (sizes[c] != 0) continue;
            std::size_t far = n;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const auto own = static_cast<std::size_t>(result.assignments[i]);
                if (sizes[own] < 2) continue;
                const double d = squared_distance(points[i], result.centroids[own]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            --sizes[static_cast<std::size_t>(result.assignments[far])];
            result.assignments[far] = static_cast<int>(c);
            result.centroids[c] = points[far];
            sizes[c] = 1;
        }

        // Update.
        std::vector<Point> next(kk, Point(dim, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            auto& acc = next[static_cast<std::size_t>(result.assignments[i])];
            for (std::size_t d = 0; d < dim; ++d) acc[d] += points[i][d];
        }
        double moved = 0.0;
        for (std::size_t c = 0; c < kk; ++c) {
            for (auto& v : next[c]) v /= static_cast<double>(sizes[c]);
            moved = std::max(moved, std::sqrt(squared_distance(next[c], result.centroids[c])));
        }
        result.centroids = std::move(next);

        const double sse = within_cluster_sse(points, result.assignments, result.centroids);
        assert(result.sse_history.empty() ||
               sse <= result.sse_history.back() + 1e-9 * std::max(1.0, result.sse_history.back()));
        result.sse_history.push_back(sse);
        result.iterations = iter + 1;
        if (moved < options.tolerance) {
            result.converged = true;
            break;
        }
    }

    result.selected_indices.assign(kk, n);
    std::vector<double> best(kk, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(result.assignments[i]);
        const double d = squared_distance(points[i], result.centroids[c]);
        if (d < best[c]) {
            best[c] = d;
            result.selected_indices[c] = i;
        }
    }
    return result;
}

}  // namespace dragun::questions
