#include "chromaq/models.hpp"

#include <cmath>
#include <numeric>

#include "chromaq/errors.hpp"
#include "chromaq/rng.hpp"

namespace chromaq {

GradientBoost GradientBoost::fit(const Matrix& x, const std::vector<double>& y,
                                 const GbParams& params) {
    if (x.rows() == 0) throw EmptyDataset("cannot fit boosting on zero rows");
    if (y.size() != x.rows())
        throw DimensionMismatch("target length does not match row count");
    if (!(params.learning_rate >= 0.0))
        throw ConfigError("learning_rate must be non-negative");
    if (params.n_estimators < 1) throw ConfigError("n_estimators must be at least 1");

    GradientBoost model;
    model.learning_rate_ = params.learning_rate;
    model.base_ = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());

    double y_scale = 1.0;
    for (double v : y) y_scale = std::max(y_scale, std::abs(v));

    std::vector<double> current(y.size(), model.base_);
    std::vector<double> residual(y.size());
    model.trace_.reserve(params.n_estimators);
    for (std::size_t round = 0; round < params.n_estimators; ++round) {
        double peak = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            residual[i] = y[i] - current[i];
            peak = std::max(peak, std::abs(residual[i]));
        }
        if (peak <= 1e-14 * y_scale) break;

        DecisionTree tree =
            DecisionTree::fit(x, residual, params.max_depth, params.max_leaf_nodes);
        for (std::size_t i = 0; i < y.size(); ++i)
            current[i] += params.learning_rate * tree.predict_row(x.row(i));
        model.trees_.push_back(std::move(tree));
        model.trace_.push_back(rmse(y, current));
    }
    return model;
}

std::vector<double> GradientBoost::predict(const Matrix& x) const {
    std::vector<double> out(x.rows(), base_);
    for (const DecisionTree& tree : trees_)
        for (std::size_t r = 0; r < x.rows(); ++r)
            out[r] += learning_rate_ * tree.predict_row(x.row(r));
    return out;
}

double rmse(const std::vector<double>& y_true, const std::vector<double>& y_pred) {
    if (y_true.size() != y_pred.size())
        throw DimensionMismatch("metric inputs differ in length");
    if (y_true.empty()) throw EmptyDataset("metric inputs are empty");
    double sum = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const double d = y_true[i] - y_pred[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(y_true.size()));
}

double r_squared(const std::vector<double>& y_true, const std::vector<double>& y_pred) {
    if (y_true.size() != y_pred.size())
        throw DimensionMismatch("metric inputs differ in length");
    if (y_true.empty()) throw EmptyDataset("metric inputs are empty");
    const double mean =
        std::accumulate(y_true.begin(), y_true.end(), 0.0) /
        static_cast<double>(y_true.size());
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const double r = y_true[i] - y_pred[i];
        const double t = y_true[i] - mean;
        ss_res += r * r;
        ss_tot += t * t;
    }
    if (ss_tot <= 0.0)
        throw ZeroVarianceTarget("r_squared is undefined for a constant target");
    return 1.0 - ss_res / ss_tot;
}

ModelFamily parse_model_family(const std::string& name) {
    if (name == "gradient_boost") return ModelFamily::gradient_boost;
    if (name == "svr") return ModelFamily::svr;
    throw ConfigError("unknown model family: " + name);
}

std::string to_string(ModelFamily family) {
    return family == ModelFamily::gradient_boost ? "gradient_boost" : "svr";
}

std::size_t ParamGrid::combination_count() const {
    std::size_t count = 1;
    for (const auto& [name, values] : params) {
        if (values.empty()) throw ConfigError("empty value list for parameter " + name);
        count *= values.size();
    }
    return count;
}

ParamMap ParamGrid::combination(std::size_t index) const {
    if (index >= combination_count()) throw ConfigError("grid combination out of range");
    ParamMap out;
    for (std::size_t p = params.size(); p-- > 0;) {
        const auto& [name, values] = params[p];
        out[name] = values[index % values.size()];
        index /= values.size();
    }
    return out;
}

namespace {

std::size_t as_count(double value, const std::string& name, std::size_t minimum) {
    const double rounded = std::round(value);
    if (std::abs(value - rounded) > 1e-9 || rounded < static_cast<double>(minimum))
        throw ConfigError("parameter " + name + " must be an integer >= " +
                          std::to_string(minimum));
    return static_cast<std::size_t>(rounded);
}

double take(ParamMap& params, const std::string& name, double fallback) {
    auto it = params.find(name);
    if (it == params.end()) return fallback;
    const double v = it->second;
    params.erase(it);
    return v;
}

} // namespace

std::unique_ptr<Regressor> fit_model(ModelFamily family, const ParamMap& params,
                                     const Matrix& x, const std::vector<double>& y) {
    ParamMap rest = params;
    if (family == ModelFamily::gradient_boost) {
        GbParams p;
        p.learning_rate = take(rest, "learning_rate", p.learning_rate);
        p.n_estimators = as_count(
            take(rest, "n_estimators", static_cast<double>(p.n_estimators)),
            "n_estimators", 1);
        p.max_depth = as_count(take(rest, "max_depth", static_cast<double>(p.max_depth)),
                               "max_depth", 1);
        p.max_leaf_nodes = as_count(
            take(rest, "max_leaf_nodes", static_cast<double>(p.max_leaf_nodes)),
            "max_leaf_nodes", 2);
        if (!rest.empty())
            throw ConfigError("unknown gradient_boost parameter: " + rest.begin()->first);
        return std::make_unique<GradientBoost>(GradientBoost::fit(x, y, p));
    }
    SvrParams p;
    p.c = take(rest, "c", p.c);
    p.gamma = take(rest, "gamma", p.gamma);
    p.epsilon = take(rest, "epsilon", p.epsilon);
    p.max_iter = as_count(take(rest, "max_iter", static_cast<double>(p.max_iter)),
                          "max_iter", 1);
    if (!rest.empty()) throw ConfigError("unknown svr parameter: " + rest.begin()->first);
    return std::make_unique<Svr>(Svr::fit(x, y, p));
}

std::vector<std::size_t> kfold_assignments(std::size_t n, std::size_t folds,
                                           std::uint64_t seed) {
    if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
    if (n < folds) throw TooFewSamples("fewer rows than folds");

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(perm);

    std::vector<std::size_t> out(n);
    const std::size_t base = n / folds;
    const std::size_t extra = n % folds;
    std::size_t at = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        const std::size_t size = base + (f < extra ? 1 : 0);
        for (std::size_t j = 0; j < size; ++j) out[perm[at++]] = f;
    }
    return out;
}

namespace {

Matrix rows_subset(const Matrix& m, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), m.cols());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(rows[r], c);
    return out;
}

std::vector<double> rows_subset_values(const std::vector<double>& v,
                                       const std::vector<std::size_t>& rows) {
    std::vector<double> out(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) out[r] = v[rows[r]];
    return out;
}

} // namespace

GridSearchResult grid_search(ModelFamily family, const ParamGrid& grid, const Matrix& x,
                             const std::vector<double>& y, std::size_t folds,
                             std::uint64_t seed) {
    if (y.size() != x.rows())
        throw DimensionMismatch("target length does not match row count");
    const std::size_t n = x.rows();
    const std::vector<std::size_t> assignment = kfold_assignments(n, folds, seed);

    std::vector<std::vector<std::size_t>> train_rows(folds);
    std::vector<std::vector<std::size_t>> test_rows(folds);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < folds; ++f)
            (assignment[i] == f ? test_rows : train_rows)[f].push_back(i);
    }

    GridSearchResult result;
    const std::size_t combos = grid.combination_count();
    bool have_best = false;
    for (std::size_t index = 0; index < combos; ++index) {
        GridSearchRow row;
        row.index = index;
        row.params = grid.combination(index);
        try {
            double total = 0.0;
            for (std::size_t f = 0; f < folds; ++f) {
                auto model = fit_model(family, row.params, rows_subset(x, train_rows[f]),
                                       rows_subset_values(y, train_rows[f]));
                const std::vector<double> pred = model->predict(rows_subset(x, test_rows[f]));
                const double score = rmse(rows_subset_values(y, test_rows[f]), pred);
                row.fold_rmse.push_back(score);
                total += score;
            }
            row.mean_rmse = total / static_cast<double>(folds);
        } catch (const std::exception& error) {
            row.failed = true;
            row.message = error.what();
            row.fold_rmse.clear();
        }
        if (!row.failed && (!have_best || row.mean_rmse < result.best_score)) {
            have_best = true;
            result.best_index = index;
            result.best_params = row.params;
            result.best_score = row.mean_rmse;
        }
        result.table.push_back(std::move(row));
    }
    if (!have_best)
        throw AllCombinationsFailed("every grid combination failed cross-validation");

    result.model = fit_model(family, result.best_params, x, y);
    return result;
}

} // namespace chromaq
