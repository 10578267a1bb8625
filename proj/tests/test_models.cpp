#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include "chromaq/errors.hpp"
#include "chromaq/models.hpp"
#include "chromaq/rng.hpp"

using namespace chromaq;

namespace {

// Independent KKT measure of a returned SVR model: rebuild the kernel
// residual from the dual coefficients and take the gap between the most
// movable-up and most movable-down variable values.
double oracle_kkt(const Matrix& x, const std::vector<double>& y, double cval,
                  double gamma, double eps, const std::vector<double>& alpha) {
    const std::size_t l = x.rows();
    std::vector<double> e(l);
    for (std::size_t i = 0; i < l; ++i) e[i] = -y[i];
    for (std::size_t j = 0; j < l; ++j) {
        if (alpha[j] == 0.0) continue;
        for (std::size_t i = 0; i < l; ++i)
            e[i] += alpha[j] * std::exp(-gamma * squared_distance(x.row(i), x.row(j)));
    }
    double up = -std::numeric_limits<double>::infinity();
    double low = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < l; ++i) {
        const double a = std::max(alpha[i], 0.0);
        const double s = std::max(-alpha[i], 0.0);
        const double va = -(e[i] + eps);
        const double vs = -e[i] + eps;
        if (a < cval) up = std::max(up, va);
        if (a > 0.0) low = std::min(low, va);
        if (s > 0.0) up = std::max(up, vs);
        if (s < cval) low = std::min(low, vs);
    }
    return up - low;
}

double oracle_rmse(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(sum / static_cast<double>(a.size()));
}

// Independent cross-validation score for one parameter combination, using
// the published fold assignment but its own subsetting and scoring.
double oracle_cv_score(ModelFamily family, const ParamMap& params, const Matrix& x,
                       const std::vector<double>& y,
                       const std::vector<std::size_t>& fold_of, std::size_t folds) {
    double total = 0.0;
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<std::vector<double>> train_rows;
        std::vector<std::vector<double>> test_rows;
        std::vector<double> train_y;
        std::vector<double> test_y;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            std::vector<double> row(x.row(i).begin(), x.row(i).end());
            if (fold_of[i] == f) {
                test_rows.push_back(row);
                test_y.push_back(y[i]);
            } else {
                train_rows.push_back(row);
                train_y.push_back(y[i]);
            }
        }
        auto model = fit_model(family, params, Matrix::from_rows(train_rows), train_y);
        total += oracle_rmse(test_y, model->predict(Matrix::from_rows(test_rows)));
    }
    return total / static_cast<double>(folds);
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Matrix m(rows, cols);
    Rng rng(seed);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = rng.uniform(-1.0, 1.0);
    return m;
}

Matrix single_column(const std::vector<double>& values) {
    Matrix m(values.size(), 1);
    for (std::size_t i = 0; i < values.size(); ++i) m(i, 0) = values[i];
    return m;
}

struct SineData {
    Matrix x;
    std::vector<double> y;
};

SineData sine_fixture(std::size_t n) {
    SineData d;
    d.x = Matrix(n, 1);
    d.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(i) /
                         static_cast<double>(n - 1);
        d.x(i, 0) = t;
        d.y[i] = std::sin(t);
    }
    return d;
}

double train_sse(const Regressor& model, const Matrix& x, const std::vector<double>& y) {
    const std::vector<double> pred = model.predict(x);
    double sse = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) sse += (y[i] - pred[i]) * (y[i] - pred[i]);
    return sse;
}

} // namespace

TEST_CASE("tree fits a step function exactly") {
    const Matrix x = single_column({1.0, 2.0, 3.0, 4.0});
    const std::vector<double> y = {0.0, 0.0, 1.0, 1.0};
    const DecisionTree tree = DecisionTree::fit(x, y, 4, 16);

    CHECK(tree.leaf_count() == 2);
    CHECK(tree.depth() == 1);
    CHECK(tree.nodes()[0].feature == 0);
    CHECK(tree.nodes()[0].threshold == 2.5);
    CHECK(tree.predict(x) == y);
    const double at_threshold = 2.5;
    CHECK(tree.predict_row(std::span<const double>(&at_threshold, 1)) == 0.0);
}

TEST_CASE("constant target yields a single leaf") {
    const Matrix x = random_matrix(12, 3, 5);
    const std::vector<double> y(12, 4.25);
    const DecisionTree tree = DecisionTree::fit(x, y, 6, 32);
    CHECK(tree.leaf_count() == 1);
    CHECK(tree.depth() == 0);
    CHECK(tree.predict_row(x.row(3)) == 4.25);
}

TEST_CASE("split ties break toward the lowest feature index") {
    // Two identical informative columns: every candidate split has the
    // same gain on both, so feature 0 must win.
    Matrix x(6, 2);
    const std::vector<double> y = {0.0, 0.0, 0.0, 5.0, 5.0, 5.0};
    for (std::size_t i = 0; i < 6; ++i) {
        x(i, 0) = static_cast<double>(i);
        x(i, 1) = static_cast<double>(i);
    }
    const DecisionTree tied = DecisionTree::fit(x, y, 3, 8);
    CHECK(tied.nodes()[0].feature == 0);

    // Make only the second column informative and it should be chosen.
    Rng rng(9);
    for (std::size_t i = 0; i < 6; ++i) x(i, 0) = rng.uniform();
    const DecisionTree informative = DecisionTree::fit(x, y, 3, 8);
    CHECK(informative.nodes()[0].feature == 1);
    CHECK(informative.nodes()[0].threshold == 2.5);
}

TEST_CASE("threshold lands midway between adjacent distinct values") {
    const Matrix x = single_column({0.0, 1.0, 10.0});
    const std::vector<double> y = {0.0, 0.0, 1.0};
    const DecisionTree tree = DecisionTree::fit(x, y, 2, 4);
    CHECK(tree.nodes()[0].threshold == 5.5);
}

TEST_CASE("leaf budget binds exactly on rich data") {
    const Matrix x = random_matrix(64, 2, 17);
    std::vector<double> y(64);
    Rng rng(18);
    for (double& v : y) v = rng.uniform(0.0, 10.0);
    for (std::size_t budget : {2, 5, 10, 25}) {
        const DecisionTree tree = DecisionTree::fit(x, y, 64, budget);
        CHECK(tree.leaf_count() == budget);
    }
}

TEST_CASE("depth cap limits growth regardless of leaf budget") {
    const Matrix x = random_matrix(64, 2, 23);
    std::vector<double> y(64);
    Rng rng(24);
    for (double& v : y) v = rng.uniform(0.0, 10.0);

    const DecisionTree shallow = DecisionTree::fit(x, y, 2, 64);
    CHECK(shallow.depth() <= 2);
    CHECK(shallow.leaf_count() <= 4);

    const DecisionTree stump = DecisionTree::fit(x, y, 1, 64);
    CHECK(stump.depth() == 1);
    CHECK(stump.leaf_count() == 2);
}

TEST_CASE("deeper trees never fit the training data worse") {
    const Matrix x = random_matrix(200, 6, 31);
    std::vector<double> y(200);
    Rng rng(32);
    for (std::size_t i = 0; i < 200; ++i)
        y[i] = 2.0 * x(i, 0) - x(i, 3) + 0.3 * rng.normal();

    const DecisionTree stump = DecisionTree::fit(x, y, 1, 1024);
    const DecisionTree deep = DecisionTree::fit(x, y, 5, 1024);
    CHECK(train_sse(deep, x, y) <= train_sse(stump, x, y));
}

TEST_CASE("expansion is best-first, not creation order") {
    // After the root split the older child has a tiny gain and the newer
    // child a large one; with a budget of three leaves only a best-first
    // policy refines the newer child.
    const Matrix x = single_column({0, 1, 2, 3, 4, 5, 6, 7});
    const std::vector<double> y = {100.0, 100.0, 101.0, 101.0, 0.0, 0.0, 50.0, 50.0};
    const DecisionTree tree = DecisionTree::fit(x, y, 8, 3);

    CHECK(tree.leaf_count() == 3);
    const double probes[] = {1.0, 2.0, 4.5, 6.5};
    CHECK(tree.predict_row({&probes[0], 1}) == 100.5);
    CHECK(tree.predict_row({&probes[1], 1}) == 100.5);
    CHECK(tree.predict_row({&probes[2], 1}) == 0.0);
    CHECK(tree.predict_row({&probes[3], 1}) == 50.0);
}

TEST_CASE("growth stops when no split reduces error") {
    const Matrix x = single_column({0, 1, 2, 3, 4, 5, 6, 7});
    const std::vector<double> y = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 100.0, 100.0};
    const DecisionTree tree = DecisionTree::fit(x, y, 8, 16);
    CHECK(tree.leaf_count() == 2);
    CHECK(tree.predict(x) == y);
}

TEST_CASE("tree input validation") {
    const Matrix x = single_column({1.0, 2.0});
    CHECK_THROWS_AS(DecisionTree::fit(Matrix(), {}, 3, 8), EmptyDataset);
    CHECK_THROWS_AS(DecisionTree::fit(x, {1.0}, 3, 8), DimensionMismatch);
    CHECK_THROWS_AS(DecisionTree::fit(x, {1.0, 2.0}, 0, 8), ConfigError);
    CHECK_THROWS_AS(DecisionTree::fit(x, {1.0, 2.0}, 3, 0), ConfigError);
}

TEST_CASE("boosting trace is non-increasing across rounds") {
    for (std::uint64_t fixture = 0; fixture < 20; ++fixture) {
        const Matrix x = random_matrix(40, 3, 100 + fixture);
        std::vector<double> y(40);
        Rng rng(200 + fixture);
        for (std::size_t i = 0; i < 40; ++i)
            y[i] = x(i, 0) * x(i, 1) + 0.5 * rng.normal();

        GbParams params;
        params.learning_rate = fixture % 2 == 0 ? 0.1 : 0.6;
        params.n_estimators = 40;
        params.max_depth = 3;
        params.max_leaf_nodes = 6;
        const GradientBoost model = GradientBoost::fit(x, y, params);
        const auto& trace = model.train_rmse_trace();
        REQUIRE(!trace.empty());
        for (std::size_t t = 1; t < trace.size(); ++t)
            CHECK(trace[t] <= trace[t - 1] + 1e-12);
    }
}

TEST_CASE("zero learning rate predicts the target mean everywhere") {
    const Matrix x = random_matrix(30, 2, 41);
    std::vector<double> y(30);
    Rng rng(42);
    for (double& v : y) v = rng.uniform(0.0, 7.0);
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / 30.0;

    GbParams params;
    params.learning_rate = 0.0;
    params.n_estimators = 5;
    const GradientBoost model = GradientBoost::fit(x, y, params);
    for (double p : model.predict(x)) CHECK(p == mean);
    for (double p : model.predict(random_matrix(4, 2, 43))) CHECK(p == mean);
}

TEST_CASE("boosting drives training error far below target spread") {
    const Matrix x = random_matrix(200, 2, 51);
    std::vector<double> y(200);
    for (std::size_t i = 0; i < 200; ++i) y[i] = x(i, 0);

    GbParams params;
    params.learning_rate = 0.1;
    params.n_estimators = 500;
    params.max_depth = 5;
    params.max_leaf_nodes = 16;
    const GradientBoost model = GradientBoost::fit(x, y, params);

    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / 200.0;
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    const double spread = std::sqrt(var / 200.0);
    CHECK(model.train_rmse_trace().back() < 0.05 * spread);
}

TEST_CASE("constant target needs no boosting rounds") {
    const Matrix x = random_matrix(10, 2, 61);
    const std::vector<double> y(10, -2.5);
    const GradientBoost model = GradientBoost::fit(x, y, {});
    CHECK(model.trees().empty());
    CHECK(model.base() == -2.5);
    for (double p : model.predict(x)) CHECK(p == -2.5);
}

TEST_CASE("a longer run extends a shorter run without changing its prefix") {
    const Matrix x = random_matrix(50, 3, 71);
    std::vector<double> y(50);
    Rng rng(72);
    for (std::size_t i = 0; i < 50; ++i) y[i] = x(i, 1) + 0.2 * rng.normal();

    GbParams short_run;
    short_run.n_estimators = 20;
    GbParams long_run;
    long_run.n_estimators = 50;
    const auto a = GradientBoost::fit(x, y, short_run);
    const auto b = GradientBoost::fit(x, y, long_run);

    REQUIRE(a.train_rmse_trace().size() == 20);
    REQUIRE(b.train_rmse_trace().size() == 50);
    for (std::size_t t = 0; t < 20; ++t)
        CHECK(a.train_rmse_trace()[t] == b.train_rmse_trace()[t]);
    CHECK(b.train_rmse_trace().back() <= a.train_rmse_trace().back());
}

TEST_CASE("svr on a constant target returns the constant") {
    const Matrix x = random_matrix(15, 2, 81);
    const std::vector<double> y(15, 3.7);
    SvrParams params;
    params.c = 10.0;
    params.gamma = 0.5;
    params.epsilon = 0.01;
    const Svr model = Svr::fit(x, y, params);

    CHECK(model.bias() == doctest::Approx(3.7).epsilon(1e-12));
    for (double a : model.dual_coefficients()) CHECK(a == 0.0);
    for (double p : model.predict(x)) CHECK(p == doctest::Approx(3.7).epsilon(1e-12));
    CHECK(!model.convergence_warning());
}

TEST_CASE("svr duals stay in the box and pass an independent check") {
    const SineData d = sine_fixture(60);
    SvrParams params;
    params.c = 10.0;
    params.gamma = 1.0;
    params.epsilon = 0.01;
    const Svr model = Svr::fit(d.x, d.y, params);

    REQUIRE(!model.convergence_warning());
    for (double a : model.dual_coefficients()) {
        CHECK(a <= params.c);
        CHECK(a >= -params.c);
    }
    CHECK(model.kkt_violation() < params.tol);
    CHECK(oracle_kkt(d.x, d.y, params.c, params.gamma, params.epsilon,
                     model.dual_coefficients()) < params.tol);
    CHECK(oracle_rmse(d.y, model.predict(d.x)) < 0.05);
}

TEST_CASE("iteration cap sets the convergence warning") {
    const SineData d = sine_fixture(40);
    SvrParams params;
    params.c = 10.0;
    params.gamma = 1.0;
    params.epsilon = 0.001;
    params.max_iter = 3;
    const Svr model = Svr::fit(d.x, d.y, params);
    CHECK(model.convergence_warning());
    CHECK(model.kkt_violation() >= params.tol);
}

TEST_CASE("shifting the target shifts only the bias") {
    const SineData d = sine_fixture(40);
    SvrParams params;
    params.c = 5.0;
    params.gamma = 2.0;
    params.epsilon = 0.05;
    const Svr base = Svr::fit(d.x, d.y, params);

    std::vector<double> shifted(d.y);
    for (double& v : shifted) v += 10.0;
    const Svr moved = Svr::fit(d.x, shifted, params);

    REQUIRE(base.dual_coefficients().size() == moved.dual_coefficients().size());
    for (std::size_t i = 0; i < 40; ++i)
        CHECK(moved.dual_coefficients()[i] ==
              doctest::Approx(base.dual_coefficients()[i]).epsilon(1e-9).scale(1.0));
    CHECK(moved.bias() - base.bias() == doctest::Approx(10.0).epsilon(1e-6));

    const auto pa = base.predict(d.x);
    const auto pb = moved.predict(d.x);
    for (std::size_t i = 0; i < 40; ++i)
        CHECK(pb[i] - pa[i] == doctest::Approx(10.0).epsilon(1e-6));
}

TEST_CASE("a wider tube needs fewer support vectors") {
    const SineData d = sine_fixture(60);
    SvrParams tight;
    tight.c = 10.0;
    tight.gamma = 1.0;
    tight.epsilon = 0.01;
    SvrParams wide = tight;
    wide.epsilon = 0.5;

    auto supports = [](const Svr& m) {
        std::size_t n = 0;
        for (double a : m.dual_coefficients())
            if (a != 0.0) ++n;
        return n;
    };
    const Svr a = Svr::fit(d.x, d.y, tight);
    const Svr b = Svr::fit(d.x, d.y, wide);
    CHECK(supports(b) < supports(a));

    // A tube wider than the whole response range needs no supports at all.
    SvrParams huge = tight;
    huge.epsilon = 2.0;
    const Svr c = Svr::fit(d.x, d.y, huge);
    CHECK(supports(c) == 0);
    CHECK(c.bias() == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
}

TEST_CASE("svr input validation") {
    const Matrix x = single_column({1.0, 2.0});
    const std::vector<double> y = {1.0, 2.0};
    SvrParams bad;
    bad.c = 0.0;
    CHECK_THROWS_AS(Svr::fit(x, y, bad), ConfigError);
    bad = {};
    bad.gamma = -1.0;
    CHECK_THROWS_AS(Svr::fit(x, y, bad), ConfigError);
    bad = {};
    bad.epsilon = 0.0;
    CHECK_THROWS_AS(Svr::fit(x, y, bad), ConfigError);
    CHECK_THROWS_AS(Svr::fit(x, {1.0}, {}), DimensionMismatch);
    CHECK_THROWS_AS(Svr::fit(Matrix(), {}, {}), EmptyDataset);
}

TEST_CASE("metric hand values") {
    const std::vector<double> truth = {0.0, 0.0, 1.0, 1.0};
    const std::vector<double> pred = {0.0, 1.0, 0.0, 1.0};
    CHECK(rmse(truth, pred) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
    CHECK(r_squared(truth, pred) == doctest::Approx(-1.0).epsilon(1e-15));

    CHECK(rmse(truth, truth) == 0.0);
    CHECK(r_squared(truth, truth) == 1.0);

    const std::vector<double> at_mean(4, 0.5);
    CHECK(r_squared(truth, at_mean) == doctest::Approx(0.0).epsilon(1e-15));

    CHECK_THROWS_AS(r_squared({2.0, 2.0, 2.0}, {2.0, 2.0, 2.0}), ZeroVarianceTarget);
    CHECK_THROWS_AS(rmse({1.0}, {1.0, 2.0}), DimensionMismatch);
    CHECK_THROWS_AS(rmse({}, {}), EmptyDataset);
}

TEST_CASE("grid combinations iterate in document order, last parameter fastest") {
    ParamGrid grid;
    grid.params = {{"a", {1.0, 2.0}}, {"b", {10.0, 20.0, 30.0}}};
    REQUIRE(grid.combination_count() == 6);

    const double expect_a[] = {1, 1, 1, 2, 2, 2};
    const double expect_b[] = {10, 20, 30, 10, 20, 30};
    for (std::size_t i = 0; i < 6; ++i) {
        const ParamMap combo = grid.combination(i);
        CHECK(combo.at("a") == expect_a[i]);
        CHECK(combo.at("b") == expect_b[i]);
    }
    CHECK_THROWS_AS(grid.combination(6), ConfigError);

    const ParamGrid empty;
    CHECK(empty.combination_count() == 1);
    CHECK(empty.combination(0).empty());
}

TEST_CASE("fold assignment is a balanced deterministic partition") {
    const auto fold_of = kfold_assignments(10, 3, 99);
    REQUIRE(fold_of.size() == 10);
    std::vector<std::size_t> counts(3, 0);
    for (std::size_t f : fold_of) {
        REQUIRE(f < 3);
        ++counts[f];
    }
    CHECK(counts == std::vector<std::size_t>{4, 3, 3});

    CHECK(kfold_assignments(10, 3, 99) == fold_of);
    CHECK(kfold_assignments(10, 3, 100) != fold_of);
    CHECK_THROWS_AS(kfold_assignments(10, 1, 0), ConfigError);
    CHECK_THROWS_AS(kfold_assignments(3, 5, 0), TooFewSamples);
}

TEST_CASE("grid search scores match an exhaustive oracle") {
    const Matrix x = random_matrix(40, 2, 301);
    std::vector<double> y(40);
    Rng rng(302);
    for (std::size_t i = 0; i < 40; ++i) y[i] = 3.0 * x(i, 0) + 0.4 * rng.normal();

    ParamGrid grid;
    grid.params = {{"learning_rate", {0.1, 0.5}},
                   {"n_estimators", {20.0}},
                   {"max_depth", {2.0}},
                   {"max_leaf_nodes", {4.0}}};
    const std::size_t folds = 4;
    const std::uint64_t seed = 7;
    GridSearchResult result =
        grid_search(ModelFamily::gradient_boost, grid, x, y, folds, seed);

    const auto fold_of = kfold_assignments(40, folds, seed);
    REQUIRE(result.table.size() == 2);
    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < 2; ++i) {
        const double expect = oracle_cv_score(ModelFamily::gradient_boost,
                                              result.table[i].params, x, y, fold_of, folds);
        CHECK(result.table[i].mean_rmse == doctest::Approx(expect).epsilon(1e-12));
        CHECK(result.table[i].fold_rmse.size() == folds);
        if (expect < best_score) {
            best_score = expect;
            best = i;
        }
    }
    CHECK(result.best_index == best);
    CHECK(result.best_score == doctest::Approx(best_score).epsilon(1e-12));

    // The returned model is the best combination refit on all rows.
    auto refit = fit_model(ModelFamily::gradient_boost, result.best_params, x, y);
    CHECK(result.model->predict(x) == refit->predict(x));
}

TEST_CASE("grid search finds a planted best combination") {
    // The target is an exact step of the first feature, so one round of
    // full-strength boosting on a stump fits it perfectly while a tiny
    // learning rate cannot.
    Matrix x(24, 2);
    std::vector<double> y(24);
    Rng rng(311);
    for (std::size_t i = 0; i < 24; ++i) {
        // A wide gap keeps the learned threshold between the classes no
        // matter which rows a fold withholds.
        x(i, 0) = static_cast<double>(i < 12 ? i : 100 + i);
        x(i, 1) = rng.uniform();
        y[i] = i < 12 ? 1.0 : 9.0;
    }

    ParamGrid grid;
    grid.params = {{"learning_rate", {0.01, 1.0}},
                   {"n_estimators", {1.0}},
                   {"max_depth", {1.0}},
                   {"max_leaf_nodes", {2.0}}};
    const GridSearchResult result =
        grid_search(ModelFamily::gradient_boost, grid, x, y, 3, 12345);
    CHECK(result.best_params.at("learning_rate") == 1.0);
    CHECK(result.best_score < 0.5);
}

TEST_CASE("failed combinations are recorded without aborting the search") {
    const SineData d = sine_fixture(24);
    ParamGrid grid;
    grid.params = {{"gamma", {-1.0, 0.5}}, {"c", {10.0}}, {"epsilon", {0.05}}};
    const GridSearchResult result = grid_search(ModelFamily::svr, grid, d.x, d.y, 3, 8);

    REQUIRE(result.table.size() == 2);
    CHECK(result.table[0].failed);
    CHECK(!result.table[0].message.empty());
    CHECK(result.table[0].fold_rmse.empty());
    CHECK(!result.table[1].failed);
    CHECK(result.best_index == 1);

    ParamGrid hopeless;
    hopeless.params = {{"gamma", {-1.0, -2.0}}};
    CHECK_THROWS_AS(grid_search(ModelFamily::svr, hopeless, d.x, d.y, 3, 8),
                    AllCombinationsFailed);
}

TEST_CASE("ties go to the earliest combination") {
    const Matrix x = random_matrix(30, 2, 321);
    std::vector<double> y(30);
    Rng rng(322);
    for (std::size_t i = 0; i < 30; ++i) y[i] = x(i, 0) + 0.1 * rng.normal();

    ParamGrid grid;
    grid.params = {{"learning_rate", {0.2, 0.2}},
                   {"n_estimators", {10.0}},
                   {"max_depth", {2.0}},
                   {"max_leaf_nodes", {4.0}}};
    const GridSearchResult result =
        grid_search(ModelFamily::gradient_boost, grid, x, y, 3, 5);
    CHECK(result.table[0].mean_rmse == result.table[1].mean_rmse);
    CHECK(result.best_index == 0);
}

TEST_CASE("reordering candidate lists does not change the winning values") {
    const Matrix x = random_matrix(36, 2, 331);
    std::vector<double> y(36);
    Rng rng(332);
    for (std::size_t i = 0; i < 36; ++i) y[i] = 2.0 * x(i, 1) + 0.2 * rng.normal();

    ParamGrid forward;
    forward.params = {{"learning_rate", {0.02, 0.4}},
                      {"n_estimators", {30.0}},
                      {"max_depth", {2.0}},
                      {"max_leaf_nodes", {4.0}}};
    ParamGrid backward = forward;
    backward.params[0].second = {0.4, 0.02};

    const auto a = grid_search(ModelFamily::gradient_boost, forward, x, y, 3, 77);
    const auto b = grid_search(ModelFamily::gradient_boost, backward, x, y, 3, 77);
    CHECK(a.best_params.at("learning_rate") == b.best_params.at("learning_rate"));
    CHECK(a.best_score == b.best_score);
}

TEST_CASE("identical seeds reproduce the whole search") {
    const Matrix x = random_matrix(30, 3, 341);
    std::vector<double> y(30);
    Rng rng(342);
    for (std::size_t i = 0; i < 30; ++i) y[i] = x(i, 2) + 0.3 * rng.normal();

    ParamGrid grid;
    grid.params = {{"learning_rate", {0.1, 0.3}},
                   {"n_estimators", {15.0}},
                   {"max_depth", {2.0}},
                   {"max_leaf_nodes", {4.0}}};
    const auto a = grid_search(ModelFamily::gradient_boost, grid, x, y, 5, 2024);
    const auto b = grid_search(ModelFamily::gradient_boost, grid, x, y, 5, 2024);
    REQUIRE(a.table.size() == b.table.size());
    for (std::size_t i = 0; i < a.table.size(); ++i) {
        CHECK(a.table[i].mean_rmse == b.table[i].mean_rmse);
        CHECK(a.table[i].fold_rmse == b.table[i].fold_rmse);
    }
    CHECK(a.best_index == b.best_index);
}

TEST_CASE("model factory validates parameters") {
    const Matrix x = single_column({1.0, 2.0, 3.0, 4.0});
    const std::vector<double> y = {1.0, 2.0, 3.0, 4.0};

    CHECK_THROWS_AS(fit_model(ModelFamily::gradient_boost, {{"bogus", 1.0}}, x, y),
                    ConfigError);
    CHECK_THROWS_AS(
        fit_model(ModelFamily::gradient_boost, {{"n_estimators", 100.5}}, x, y),
        ConfigError);
    CHECK_THROWS_AS(fit_model(ModelFamily::svr, {{"c", -5.0}}, x, y), ConfigError);
    CHECK_THROWS_AS(fit_model(ModelFamily::svr, {{"kernel", 1.0}}, x, y), ConfigError);

    CHECK(parse_model_family("svr") == ModelFamily::svr);
    CHECK(parse_model_family("gradient_boost") == ModelFamily::gradient_boost);
    CHECK_THROWS_AS(parse_model_family("forest"), ConfigError);
    CHECK(to_string(ModelFamily::svr) == "svr");
}
