#include "chromaq/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chromaq/errors.hpp"
#include "chromaq/rng.hpp"

namespace chromaq {

namespace {

std::size_t nearest_centroid(const Matrix& centroids, std::span<const double> x) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
        const double d = squared_distance(centroids.row(c), x);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

double total_inertia(const Matrix& m, const Matrix& centroids,
                     const std::vector<std::size_t>& labels) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        sum += squared_distance(m.row(i), centroids.row(labels[i]));
    }
    return sum;
}

Matrix kmeanspp_init(const Matrix& m, std::size_t k, Rng& rng) {
    const std::size_t n = m.rows(), d = m.cols();
    Matrix centroids(k, d);
    std::vector<double> dist2(n, std::numeric_limits<double>::infinity());

    std::size_t first = rng.bounded(n);
    for (std::size_t c = 0; c < d; ++c) centroids(0, c) = m(first, c);

    for (std::size_t j = 1; j < k; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dd = squared_distance(m.row(i), centroids.row(j - 1));
            dist2[i] = std::min(dist2[i], dd);
            sum += dist2[i];
        }
        std::size_t pick;
        if (sum > 0.0) {
            const double u = rng.uniform() * sum;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += dist2[i];
                if (u < acc) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.bounded(n); // all remaining mass at chosen points
        }
        for (std::size_t c = 0; c < d; ++c) centroids(j, c) = m(pick, c);
    }
    return centroids;
}

struct LloydResult {
    Matrix centroids;
    std::vector<std::size_t> labels;
    double inertia = 0.0;
    std::size_t n_iter = 0;
    std::vector<double> trace;
};

LloydResult lloyd(const Matrix& m, Matrix centroids, std::size_t max_iter, double tol) {
    const std::size_t n = m.rows(), d = m.cols(), k = centroids.rows();
    LloydResult res;
    res.labels.assign(n, 0);
    std::vector<std::size_t> counts(k, 0);

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        for (std::size_t i = 0; i < n; ++i) res.labels[i] = nearest_centroid(centroids, m.row(i));

        std::fill(counts.begin(), counts.end(), std::size_t{0});
        for (std::size_t l : res.labels) ++counts[l];

        // Reseed each empty cluster on the farthest point whose cluster can
        // spare it.
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            double far_d = -1.0;
            std::size_t far_i = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[res.labels[i]] <= 1) continue;
                const double dd = squared_distance(m.row(i), centroids.row(res.labels[i]));
                if (dd > far_d) {
                    far_d = dd;
                    far_i = i;
                }
            }
            if (far_i == n) break; // nothing movable; leave for the caller's guard
            --counts[res.labels[far_i]];
            res.labels[far_i] = c;
            ++counts[c];
        }

        Matrix next(k, d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t col = 0; col < d; ++col) next(res.labels[i], col) += m(i, col);
        }
        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            double cs = 0.0;
            for (std::size_t col = 0; col < d; ++col) {
                next(c, col) /= static_cast<double>(counts[c]);
                const double dd = next(c, col) - centroids(c, col);
                cs += dd * dd;
            }
            shift = std::max(shift, std::sqrt(cs));
        }
        centroids = std::move(next);
        res.n_iter = iter + 1;
        res.trace.push_back(total_inertia(m, centroids, res.labels));
        if (shift < tol) break;
    }

    // Final pass: make labels argmin-consistent with the final centroids.
    std::vector<std::size_t> final_labels(n);
    std::fill(counts.begin(), counts.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
        final_labels[i] = nearest_centroid(centroids, m.row(i));
        ++counts[final_labels[i]];
    }
    // Keep the repaired labels when pure argmin would empty a cluster (only
    // reachable with duplicate points).
    if (std::find(counts.begin(), counts.end(), std::size_t{0}) == counts.end()) {
        res.labels = std::move(final_labels);
    }
    res.centroids = std::move(centroids);
    res.inertia = total_inertia(m, res.centroids, res.labels);
    return res;
}

} // namespace

KMeansModel kmeans_fit(const Matrix& m, std::size_t k, std::uint64_t seed,
                       std::size_t n_init, std::size_t max_iter, double tol) {
    const std::size_t n = m.rows();
    if (k == 0) throw Error("kmeans_fit: k must be at least 1");
    if (n < k) {
        throw TooFewSamples("kmeans_fit: " + std::to_string(n) + " samples for k = " +
                            std::to_string(k));
    }
    if (m.cols() == 0) throw DimensionMismatch("kmeans_fit: zero-width matrix");

    LloydResult best;
    bool have = false;
    for (std::size_t r = 0; r < n_init; ++r) {
        Rng rng(derive_seed(seed, "kmeans_restart", r));
        auto run = lloyd(m, kmeanspp_init(m, k, rng), max_iter, tol);
        if (!have || run.inertia < best.inertia) {
            best = std::move(run);
            have = true;
        }
    }

    KMeansModel model;
    model.k = k;
    model.centroids = std::move(best.centroids);
    model.labels = std::move(best.labels);
    model.inertia = best.inertia;
    model.n_iter = best.n_iter;
    model.seed = seed;
    model.inertia_trace = std::move(best.trace);
    return model;
}

std::vector<std::size_t> assign(const KMeansModel& model, const Matrix& m) {
    if (m.cols() != model.centroids.cols()) {
        throw DimensionMismatch("assign: feature width does not match the model");
    }
    std::vector<std::size_t> labels(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        labels[i] = nearest_centroid(model.centroids, m.row(i));
    }
    return labels;
}

ElbowCurve elbow_scan(const Matrix& m, std::size_t k_min, std::size_t k_max,
                      std::uint64_t seed) {
    if (k_min == 0 || k_min > k_max) throw Error("elbow_scan: bad k range");
    if (k_max > m.rows()) {
        throw TooFewSamples("elbow_scan: k_max exceeds the sample count");
    }

    ElbowCurve curve;
    KMeansModel prev;
    for (std::size_t k = k_min; k <= k_max; ++k) {
        auto model = kmeans_fit(m, k, derive_seed(seed, "elbow_k", k));
        if (!prev.labels.empty() && prev.k == k - 1) {
            // Warm start: previous centroids plus the farthest point. Its
            // starting inertia is below wcss(k-1), so the curve cannot rise.
            double far_d = -1.0;
            std::size_t far_i = 0;
            for (std::size_t i = 0; i < m.rows(); ++i) {
                const double dd =
                    squared_distance(m.row(i), prev.centroids.row(prev.labels[i]));
                if (dd > far_d) {
                    far_d = dd;
                    far_i = i;
                }
            }
            Matrix warm(k, m.cols());
            for (std::size_t c = 0; c < k - 1; ++c) {
                for (std::size_t col = 0; col < m.cols(); ++col) warm(c, col) = prev.centroids(c, col);
            }
            for (std::size_t col = 0; col < m.cols(); ++col) warm(k - 1, col) = m(far_i, col);
            auto warm_run = lloyd(m, std::move(warm), 300, 1e-6);
            if (warm_run.inertia < model.inertia) {
                model.k = k;
                model.centroids = std::move(warm_run.centroids);
                model.labels = std::move(warm_run.labels);
                model.inertia = warm_run.inertia;
                model.n_iter = warm_run.n_iter;
                model.inertia_trace = std::move(warm_run.trace);
            }
        }
        curve.k_values.push_back(k);
        curve.wcss.push_back(model.inertia);
        prev = std::move(model);
    }
    curve.selected_k =
        select_elbow(curve.k_values, curve.wcss, &curve.low_curvature, &curve.degenerate);
    return curve;
}

std::size_t select_elbow(const std::vector<std::size_t>& k_values,
                         const std::vector<double>& wcss, bool* low_curvature,
                         bool* degenerate) {
    if (k_values.empty() || k_values.size() != wcss.size()) {
        throw Error("select_elbow: malformed curve");
    }
    if (low_curvature) *low_curvature = false;
    if (degenerate) *degenerate = false;
    if (k_values.size() < 3) {
        if (degenerate) *degenerate = true;
        return k_values.front();
    }

    double best_d2 = -std::numeric_limits<double>::infinity();
    double min_d2 = std::numeric_limits<double>::infinity();
    std::size_t best_i = 1;
    for (std::size_t i = 1; i + 1 < wcss.size(); ++i) {
        const double d2 = wcss[i - 1] - 2.0 * wcss[i] + wcss[i + 1];
        if (d2 > best_d2) {
            best_d2 = d2;
            best_i = i;
        }
        min_d2 = std::min(min_d2, d2);
    }
    const double scale = std::max({1.0, std::abs(wcss.front()), std::abs(wcss.back())});
    if (low_curvature && best_d2 - min_d2 <= 1e-9 * scale) *low_curvature = true;
    return k_values[best_i];
}

SilhouetteReport silhouette(const Matrix& m, const std::vector<std::size_t>& labels) {
    const std::size_t n = m.rows();
    if (labels.size() != n) throw DimensionMismatch("silhouette: labels/rows mismatch");
    if (n == 0) throw EmptyDataset("silhouette: no samples");

    std::size_t k = 0;
    for (std::size_t l : labels) k = std::max(k, l + 1);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t l : labels) ++counts[l];
    std::size_t non_empty = 0;
    for (std::size_t c : counts) non_empty += c > 0 ? 1 : 0;
    if (non_empty < 2) throw SingleCluster("silhouette: needs at least 2 clusters");

    SilhouetteReport rep;
    rep.values.assign(n, 0.0);
    std::vector<double> mean_to(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(mean_to.begin(), mean_to.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            mean_to[labels[j]] += euclidean_distance(m.row(i), m.row(j));
        }
        const std::size_t own = labels[i];
        if (counts[own] <= 1) {
            rep.values[i] = 0.0; // singleton convention
            continue;
        }
        const double a = mean_to[own] / static_cast<double>(counts[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c == own || counts[c] == 0) continue;
            b = std::min(b, mean_to[c] / static_cast<double>(counts[c]));
        }
        const double denom = std::max(a, b);
        rep.values[i] = denom > 0.0 ? (b - a) / denom : 0.0;
    }
    double sum = 0.0;
    for (double v : rep.values) sum += v;
    rep.mean = sum / static_cast<double>(n);
    return rep;
}

} // namespace chromaq
