#include "chromaq/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chromaq/errors.hpp"

namespace chromaq {

namespace {

double rbf(std::span<const double> a, std::span<const double> b, double gamma) {
    return std::exp(-gamma * squared_distance(a, b));
}

/// The dual has 2l box variables: index p < l is the "up" coefficient of
/// sample p (sign +1), index p >= l the "down" coefficient of sample p - l
/// (sign -1); alpha_i is their difference.
struct DualView {
    std::size_t l;
    std::size_t sample(std::size_t p) const { return p < l ? p : p - l; }
    double sign(std::size_t p) const { return p < l ? 1.0 : -1.0; }
};

} // namespace

Svr Svr::fit(const Matrix& x, const std::vector<double>& y, const SvrParams& params) {
    const std::size_t l = x.rows();
    if (l == 0) throw EmptyDataset("cannot fit SVR on zero rows");
    if (y.size() != l) throw DimensionMismatch("target length does not match row count");
    if (!(params.c > 0.0)) throw ConfigError("C must be positive");
    if (!(params.gamma > 0.0)) throw ConfigError("gamma must be positive");
    if (!(params.epsilon > 0.0)) throw ConfigError("epsilon must be positive");

    const double c = params.c;
    const double eps = params.epsilon;
    const DualView view{l};

    Matrix kernel(l, l);
    for (std::size_t i = 0; i < l; ++i) {
        kernel(i, i) = 1.0;
        for (std::size_t j = i + 1; j < l; ++j) {
            const double k = rbf(x.row(i), x.row(j), params.gamma);
            kernel(i, j) = k;
            kernel(j, i) = k;
        }
    }

    std::vector<double> beta(2 * l, 0.0);
    // Residual of the kernel expansion without bias: e_i = sum_j alpha_j K_ij - y_i.
    std::vector<double> residual(l);
    for (std::size_t i = 0; i < l; ++i) residual[i] = -y[i];

    // Value driving selection: v_p = -sign_p * gradient_p. Optimality is
    // max over the movable-up set minus min over the movable-down set < tol.
    auto value_of = [&](std::size_t p) {
        const std::size_t i = view.sample(p);
        const double grad = view.sign(p) > 0.0 ? residual[i] + eps : -residual[i] + eps;
        return -view.sign(p) * grad;
    };

    double best_up = 0.0;
    double best_low = 0.0;
    std::size_t p_up = 0;
    std::size_t p_low = 0;
    auto scan = [&]() {
        best_up = -std::numeric_limits<double>::infinity();
        best_low = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < 2 * l; ++p) {
            const bool positive = view.sign(p) > 0.0;
            const bool can_up = positive ? beta[p] < c : beta[p] > 0.0;
            const bool can_low = positive ? beta[p] > 0.0 : beta[p] < c;
            if (!can_up && !can_low) continue;
            const double v = value_of(p);
            if (can_up && v > best_up) {
                best_up = v;
                p_up = p;
            }
            if (can_low && v < best_low) {
                best_low = v;
                p_low = p;
            }
        }
        return best_up - best_low;
    };

    // Rebuild the residual from the current coefficients. The pairwise
    // updates accumulate rounding drift, so convergence is re-verified
    // against this exact value before the solver declares success.
    auto refresh_residual = [&]() {
        for (std::size_t i = 0; i < l; ++i) residual[i] = -y[i];
        for (std::size_t j = 0; j < l; ++j) {
            const double a = beta[j] - beta[l + j];
            if (a == 0.0) continue;
            for (std::size_t i = 0; i < l; ++i) residual[i] += a * kernel(i, j);
        }
    };

    Svr model;
    double violation = scan();
    std::size_t iter = 0;
    while (true) {
        if (violation < params.tol) {
            refresh_residual();
            violation = scan();
            if (violation < params.tol) break;
        }
        if (iter >= params.max_iter) {
            refresh_residual();
            violation = scan();
            model.warned_ = violation >= params.tol;
            break;
        }
        const std::size_t si = view.sample(p_up);
        const std::size_t sj = view.sample(p_low);
        double curvature = kernel(si, si) + kernel(sj, sj) - 2.0 * kernel(si, sj);
        curvature = std::max(curvature, 1e-12);

        // Move beta[p_up] along +sign and beta[p_low] along -sign by t,
        // which keeps the equality constraint and changes alpha_si by +t
        // and alpha_sj by -t.
        double t = violation / curvature;
        const double cap_up = view.sign(p_up) > 0.0 ? c - beta[p_up] : beta[p_up];
        const double cap_low = view.sign(p_low) > 0.0 ? beta[p_low] : c - beta[p_low];
        t = std::min(t, std::min(cap_up, cap_low));

        // Snap near-bound values onto the bound so rounding dust cannot
        // leave a variable marginally movable forever.
        auto snap = [&](double v) {
            if (v <= 1e-12 * c) return 0.0;
            if (v >= c * (1.0 - 1e-12)) return c;
            return v;
        };
        beta[p_up] = snap(std::clamp(beta[p_up] + view.sign(p_up) * t, 0.0, c));
        beta[p_low] = snap(std::clamp(beta[p_low] - view.sign(p_low) * t, 0.0, c));
        for (std::size_t r = 0; r < l; ++r)
            residual[r] += t * (kernel(r, si) - kernel(r, sj));

        ++iter;
        violation = scan();
    }
    model.violation_ = violation;

    double bias_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t p = 0; p < 2 * l; ++p) {
        if (beta[p] > 0.0 && beta[p] < c) {
            bias_sum += value_of(p);
            ++free_count;
        }
    }
    model.bias_ = free_count > 0 ? bias_sum / static_cast<double>(free_count)
                                 : (best_up + best_low) / 2.0;

    model.support_ = x;
    model.alpha_.resize(l);
    for (std::size_t i = 0; i < l; ++i) model.alpha_[i] = beta[i] - beta[l + i];
    model.gamma_ = params.gamma;
    return model;
}

std::vector<double> Svr::predict(const Matrix& x) const {
    std::vector<double> out(x.rows(), bias_);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t i = 0; i < support_.rows(); ++i) {
            if (alpha_[i] == 0.0) continue;
            out[r] += alpha_[i] * rbf(x.row(r), support_.row(i), gamma_);
        }
    }
    return out;
}

} // namespace chromaq
