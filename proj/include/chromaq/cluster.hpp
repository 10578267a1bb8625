#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "chromaq/matrix.hpp"

namespace chromaq {

/// Fitted k-means state. Labels are argmin-consistent with the centroids
/// (ties to the lowest centroid index) and every cluster is non-empty.
struct KMeansModel {
    std::size_t k = 0;
    Matrix centroids;                  // k x d
    std::vector<std::size_t> labels;   // per fitting row
    double inertia = 0.0;              // sum of squared distances to own centroid
    std::size_t n_iter = 0;            // Lloyd iterations of the winning restart
    std::uint64_t seed = 0;            // master seed the fit derived from
    std::vector<double> inertia_trace; // end-of-iteration inertia, non-increasing
};

struct ElbowCurve {
    std::vector<std::size_t> k_values; // ascending
    std::vector<double> wcss;          // non-increasing
    std::size_t selected_k = 0;
    bool low_curvature = false; // no pronounced elbow; selection is weak
    bool degenerate = false;    // no interior k to select from
};

struct SilhouetteReport {
    std::vector<double> values; // per sample, in [-1, 1]
    double mean = 0.0;
};

/// Best of `n_init` k-means++ restarts, each a Lloyd run iterated until the
/// largest centroid shift drops below `tol` or `max_iter` passes. Restart r
/// draws from an independent stream derived from (seed, r), so results do
/// not depend on evaluation order. Empty clusters are repaired by reseeding
/// them on the point farthest from its centroid (singletons excluded).
KMeansModel kmeans_fit(const Matrix& m, std::size_t k, std::uint64_t seed,
                       std::size_t n_init = 10, std::size_t max_iter = 300,
                       double tol = 1e-6);

/// Nearest-centroid labels for new rows, ties to the lowest index.
std::vector<std::size_t> assign(const KMeansModel& model, const Matrix& m);

/// WCSS curve over [k_min, k_max]. Each k takes the better of a fresh
/// kmeans_fit and a warm start built from the previous k's centroids plus
/// the farthest point, which keeps the curve non-increasing in k.
ElbowCurve elbow_scan(const Matrix& m, std::size_t k_min, std::size_t k_max,
                      std::uint64_t seed);

/// Maximum-curvature elbow: argmax over interior k of the second difference
/// wcss(k-1) - 2 wcss(k) + wcss(k+1), ties to the lowest k. With no interior
/// point the first k is returned with `degenerate` set; near-equal second
/// differences set `low_curvature`.
std::size_t select_elbow(const std::vector<std::size_t>& k_values,
                         const std::vector<double>& wcss, bool* low_curvature,
                         bool* degenerate);

/// Exact O(n^2) silhouette: s = (b - a) / max(a, b) with a the mean
/// intra-cluster distance and b the best neighboring cluster's mean
/// distance; singletons score 0. Throws SingleCluster below 2 clusters.
SilhouetteReport silhouette(const Matrix& m, const std::vector<std::size_t>& labels);

} // namespace chromaq
