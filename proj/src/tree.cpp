#include "chromaq/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "chromaq/errors.hpp"

namespace chromaq {

namespace {

struct Split {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double reduction = 0.0;
};

double mean_of(const std::vector<double>& y, const std::vector<std::size_t>& idx) {
    double sum = 0.0;
    for (std::size_t i : idx) sum += y[i];
    return sum / static_cast<double>(idx.size());
}

/// Best axis-aligned split of the index subset. The squared-error
/// reduction is computed as n_l*n_r/n * (mean_l - mean_r)^2, which is
/// exact and never negative, so no cancellation guard is needed beyond
/// the caller's minimum-gain threshold.
Split best_split(const Matrix& x, const std::vector<double>& y,
                 const std::vector<std::size_t>& idx, double min_gain) {
    Split best;
    const std::size_t n = idx.size();
    if (n < 2) return best;

    double total = 0.0;
    for (std::size_t i : idx) total += y[i];

    std::vector<std::size_t> order(idx);
    for (std::size_t f = 0; f < x.cols(); ++f) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (x(a, f) != x(b, f)) return x(a, f) < x(b, f);
            return a < b;
        });
        double left_sum = 0.0;
        for (std::size_t pos = 1; pos < n; ++pos) {
            left_sum += y[order[pos - 1]];
            const double lo = x(order[pos - 1], f);
            const double hi = x(order[pos], f);
            if (lo == hi) continue;
            const double nl = static_cast<double>(pos);
            const double nr = static_cast<double>(n - pos);
            const double diff = left_sum / nl - (total - left_sum) / nr;
            const double reduction = nl * nr / static_cast<double>(n) * diff * diff;
            if (reduction > best.reduction && reduction > min_gain) {
                best.found = true;
                best.feature = static_cast<int>(f);
                best.threshold = lo + (hi - lo) / 2.0;
                best.reduction = reduction;
            }
        }
    }
    return best;
}

struct Candidate {
    double reduction = 0.0;
    std::size_t seq = 0;  // creation order, older nodes expand first on ties
    int node = -1;
    std::size_t depth = 0;
    Split split;
    std::vector<std::size_t> idx;
};

struct CandidateOrder {
    bool operator()(const Candidate& a, const Candidate& b) const {
        if (a.reduction != b.reduction) return a.reduction < b.reduction;
        return a.seq > b.seq;
    }
};

} // namespace

DecisionTree DecisionTree::fit(const Matrix& x, const std::vector<double>& y,
                               std::size_t max_depth, std::size_t max_leaf_nodes) {
    if (x.rows() == 0) throw EmptyDataset("cannot fit a tree on zero rows");
    if (y.size() != x.rows())
        throw DimensionMismatch("target length does not match row count");
    if (max_depth < 1) throw ConfigError("max_depth must be at least 1");
    if (max_leaf_nodes < 1) throw ConfigError("max_leaf_nodes must be at least 1");

    DecisionTree tree;
    std::vector<std::size_t> all(x.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});

    double y_min = y[0];
    double y_max = y[0];
    for (double v : y) {
        y_min = std::min(y_min, v);
        y_max = std::max(y_max, v);
    }
    const double spread = y_max - y_min;
    const double min_gain =
        1e-12 * static_cast<double>(x.rows()) * std::max(1.0, spread * spread);

    tree.nodes_.push_back({-1, 0.0, -1, -1, mean_of(y, all)});

    std::priority_queue<Candidate, std::vector<Candidate>, CandidateOrder> frontier;
    std::size_t seq = 0;
    auto consider = [&](int node, std::size_t depth, std::vector<std::size_t>&& idx) {
        if (depth >= max_depth) return;
        Split s = best_split(x, y, idx, min_gain);
        if (!s.found) return;
        frontier.push({s.reduction, seq++, node, depth, s, std::move(idx)});
    };
    consider(0, 0, std::move(all));

    std::size_t leaves = 1;
    while (leaves < max_leaf_nodes && !frontier.empty()) {
        Candidate c = frontier.top();
        frontier.pop();

        std::vector<std::size_t> left_idx;
        std::vector<std::size_t> right_idx;
        for (std::size_t i : c.idx) {
            if (x(i, static_cast<std::size_t>(c.split.feature)) <= c.split.threshold)
                left_idx.push_back(i);
            else
                right_idx.push_back(i);
        }

        const int left = static_cast<int>(tree.nodes_.size());
        tree.nodes_.push_back({-1, 0.0, -1, -1, mean_of(y, left_idx)});
        const int right = static_cast<int>(tree.nodes_.size());
        tree.nodes_.push_back({-1, 0.0, -1, -1, mean_of(y, right_idx)});

        Node& parent = tree.nodes_[static_cast<std::size_t>(c.node)];
        parent.feature = c.split.feature;
        parent.threshold = c.split.threshold;
        parent.left = left;
        parent.right = right;
        ++leaves;

        consider(left, c.depth + 1, std::move(left_idx));
        consider(right, c.depth + 1, std::move(right_idx));
    }
    return tree;
}

double DecisionTree::predict_row(std::span<const double> x) const {
    std::size_t at = 0;
    while (nodes_[at].feature >= 0) {
        const Node& node = nodes_[at];
        const std::size_t f = static_cast<std::size_t>(node.feature);
        at = static_cast<std::size_t>(x[f] <= node.threshold ? node.left : node.right);
    }
    return nodes_[at].value;
}

std::vector<double> DecisionTree::predict(const Matrix& x) const {
    std::vector<double> out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) out[r] = predict_row(x.row(r));
    return out;
}

std::size_t DecisionTree::leaf_count() const {
    std::size_t count = 0;
    for (const Node& node : nodes_)
        if (node.feature < 0) ++count;
    return count;
}

std::size_t DecisionTree::depth() const {
    std::vector<std::size_t> level(nodes_.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t at = 0; at < nodes_.size(); ++at) {
        const Node& node = nodes_[at];
        if (node.feature < 0) {
            deepest = std::max(deepest, level[at]);
            continue;
        }
        level[static_cast<std::size_t>(node.left)] = level[at] + 1;
        level[static_cast<std::size_t>(node.right)] = level[at] + 1;
    }
    return deepest;
}

} // namespace chromaq
