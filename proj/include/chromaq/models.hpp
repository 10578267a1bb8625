#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chromaq/matrix.hpp"

namespace chromaq {

/// Common prediction interface for every trained model.
class Regressor {
  public:
    virtual ~Regressor() = default;
    virtual std::vector<double> predict(const Matrix& x) const = 0;
    virtual bool convergence_warning() const { return false; }
};

/// Regression tree grown best-first by squared-error reduction, so
/// max_leaf_nodes binds exactly. Split ties break by (feature index,
/// threshold) ascending; expansion ties by node age.
class DecisionTree final : public Regressor {
  public:
    struct Node {
        int feature = -1; // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0; // leaf prediction: mean target in the leaf
    };

    static DecisionTree fit(const Matrix& x, const std::vector<double>& y,
                            std::size_t max_depth, std::size_t max_leaf_nodes);

    double predict_row(std::span<const double> x) const;
    std::vector<double> predict(const Matrix& x) const override;

    std::size_t leaf_count() const;
    std::size_t depth() const;
    const std::vector<Node>& nodes() const { return nodes_; }

  private:
    std::vector<Node> nodes_;
};

struct GbParams {
    double learning_rate = 0.1;
    std::size_t n_estimators = 100;
    std::size_t max_depth = 3;
    std::size_t max_leaf_nodes = 8;
};

/// Stagewise squared-error boosting: base prediction is the target mean,
/// each round fits a tree to the current residuals. Training RMSE is
/// non-increasing for learning rates in (0, 2); fitting stops early only
/// when the residuals are identically zero.
class GradientBoost final : public Regressor {
  public:
    static GradientBoost fit(const Matrix& x, const std::vector<double>& y,
                             const GbParams& params);

    std::vector<double> predict(const Matrix& x) const override;

    double base() const { return base_; }
    const std::vector<DecisionTree>& trees() const { return trees_; }
    /// Train RMSE after each boosting round.
    const std::vector<double>& train_rmse_trace() const { return trace_; }

  private:
    double base_ = 0.0;
    double learning_rate_ = 0.0;
    std::vector<DecisionTree> trees_;
    std::vector<double> trace_;
};

struct SvrParams {
    double c = 1.0;
    double gamma = 0.1;
    double epsilon = 0.1;
    std::size_t max_iter = 100'000;
    double tol = 1e-3; // KKT violation threshold
};

/// Epsilon-insensitive SVR with an RBF kernel, solved by sequential
/// pairwise optimization on the box-constrained dual. The working pair is
/// the maximal KKT violator (ties to the lowest index), so runs are
/// deterministic. Hitting the iteration cap sets convergence_warning.
class Svr final : public Regressor {
  public:
    static Svr fit(const Matrix& x, const std::vector<double>& y, const SvrParams& params);

    std::vector<double> predict(const Matrix& x) const override;
    bool convergence_warning() const override { return warned_; }

    /// Per-training-row coefficients alpha_i in [-C, C].
    const std::vector<double>& dual_coefficients() const { return alpha_; }
    double bias() const { return bias_; }
    /// Final maximal KKT violation reached by the solver.
    double kkt_violation() const { return violation_; }

  private:
    Matrix support_;
    std::vector<double> alpha_;
    double bias_ = 0.0;
    double gamma_ = 0.0;
    double violation_ = 0.0;
    bool warned_ = false;
};

/// Root mean squared error over equal-length vectors.
double rmse(const std::vector<double>& y_true, const std::vector<double>& y_pred);

/// 1 - SS_res / SS_tot about the mean of y_true. Throws ZeroVarianceTarget
/// when y_true is constant.
double r_squared(const std::vector<double>& y_true, const std::vector<double>& y_pred);

struct MetricPair {
    double rmse = 0.0;
    double r2 = 0.0;
};

enum class ModelFamily { gradient_boost, svr };

ModelFamily parse_model_family(const std::string& name);
std::string to_string(ModelFamily family);

/// Hyperparameter values for one grid combination.
using ParamMap = std::map<std::string, double>;

/// Named candidate lists; the cartesian product iterates in document order
/// with the last parameter varying fastest.
struct ParamGrid {
    std::vector<std::pair<std::string, std::vector<double>>> params;

    std::size_t combination_count() const;
    ParamMap combination(std::size_t index) const;
};

/// Trains one model of the family with the given parameters. Unknown or
/// out-of-domain parameters throw.
std::unique_ptr<Regressor> fit_model(ModelFamily family, const ParamMap& params,
                                     const Matrix& x, const std::vector<double>& y);

struct GridSearchRow {
    std::size_t index = 0;
    ParamMap params;
    std::vector<double> fold_rmse;
    double mean_rmse = 0.0;
    bool failed = false;
    std::string message;
};

struct GridSearchResult {
    std::vector<GridSearchRow> table; // one row per combination, in order
    std::size_t best_index = 0;
    ParamMap best_params;
    double best_score = 0.0;
    std::unique_ptr<Regressor> model; // refit on the full data
};

/// Seeded contiguous k-fold assignment after a Fisher-Yates shuffle; the
/// first n mod folds folds take one extra row. Exposed so manual pipeline
/// reproduction can reuse the exact folds.
std::vector<std::size_t> kfold_assignments(std::size_t n, std::size_t folds,
                                           std::uint64_t seed);

/// Exhaustive CV over the grid with folds fixed across combinations; the
/// best combination has the lowest mean RMSE, ties to the earliest in
/// iteration order. Per-combination failures are recorded, not fatal;
/// AllCombinationsFailed when nothing succeeds.
GridSearchResult grid_search(ModelFamily family, const ParamGrid& grid, const Matrix& x,
                             const std::vector<double>& y, std::size_t folds,
                             std::uint64_t seed);

} // namespace chromaq
