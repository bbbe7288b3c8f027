#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dragun::questions {

using Point = std::vector<double>;

struct KMeansOptions {
    int max_iterations = 100;
    /// Stop once no centroid moves farther than this (Euclidean).
    double tolerance = 1e-4;
};

struct ClusterSelection {
    int k = 0;
    std::vector<int> assignments;
    std::vector<Point> centroids;
    /// Per cluster, the member nearest its centroid (ties: lowest index).
    std::vector<std::size_t> selected_indices;
    /// Within-cluster sum of squared distances after each iteration's update step.
    std::vector<double> sse_history;
    int iterations = 0;
    bool converged = false;
};

double squared_distance(std::span<const double> a, std::span<const double> b);

/// Within-cluster SSE of an assignment against the given centroids.
double within_cluster_sse(std::span<const Point> points, std::span<const int> assignments,
                          std::span<const Point> centroids);

/// Lloyd's algorithm with k-means++ seeding from `seed`. Points keep their
/// cluster unless another centroid is strictly closer. A cluster left empty
/// is reseeded with the point farthest from its own centroid (taken from a
/// cluster with more than one member). Deterministic for (points, k, seed).
/// Throws DataError unless 1 <= k <= points.size() and dimensions agree.
ClusterSelection kmeans(std::span<const Point> points, int k, std::uint64_t seed, KMeansOptions options = {});

}  // namespace dragun::questions
