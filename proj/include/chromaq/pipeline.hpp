#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "chromaq/cluster.hpp"
#include "chromaq/models.hpp"
#include "chromaq/signal.hpp"
#include "chromaq/tabular.hpp"

namespace chromaq {

enum class ClusterSpace { pca, features };

/// Chromatogram synthesis settings for the `synth` command.
struct ChromatogramConfig {
    double duration_s = 0.0;
    double sample_rate_hz = 0.0;
    std::string id = "synthetic";
    std::vector<SyntheticPeakSpec> peaks;

    bool configured() const { return duration_s > 0.0; }
};

/// Parsed pipeline configuration. The text format is dotted key-value
/// lines (`section.key = value`, `#` comments, comma-separated lists);
/// unknown keys are rejected. `grid.<name>` entries keep file order and
/// become the hyperparameter grid.
struct PipelineConfig {
    std::string dataset_path;  // empty: generate the tiered synthetic set
    std::string dataset_name;  // empty: file stem, or "synthetic"
    std::size_t synthetic_rows = 900;

    double test_fraction = 0.2;
    double pca_variance_threshold = 0.8;
    std::size_t pca_components = 0;  // 0: choose by variance threshold
    ClusterSpace cluster_space = ClusterSpace::pca;

    std::size_t k_min = 1;
    std::size_t k_max = 8;
    std::size_t k_override = 0;  // 0: select k by the elbow rule

    ModelFamily model_family = ModelFamily::gradient_boost;
    std::size_t folds = 5;
    ParamGrid grid;  // empty: default_grid(model_family)

    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir = "out";

    ChromatogramConfig chromatogram;
    std::string fingerprint;  // hash of the source text
};

PipelineConfig parse_config_text(const std::string& text);
PipelineConfig load_config(const std::string& path);

/// Built-in hyperparameter grid used when the config declares none.
ParamGrid default_grid(ModelFamily family);

/// Bundled three-tier synthetic dataset: equal thirds of high, medium and
/// low quality rows whose measurement distributions and target noise are
/// tiered, so quality clustering has a known ground truth.
QualityDataset generate_tiered_dataset(std::size_t rows, std::uint64_t seed);

struct FeatureStats {
    double mean = 0.0;
    double stddev = 0.0;  // sample (n-1); 0 with degenerate flag when n = 1
    double min = 0.0;
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
    double max = 0.0;
    bool degenerate = false;
    bool applicable = true;  // false when every value is missing
};

/// Descriptive statistics of one cluster over the raw record values,
/// including the target and injection volume where present.
struct ClusterStats {
    std::size_t size = 0;
    std::vector<std::string> feature_names;
    std::vector<FeatureStats> features;  // parallel to feature_names
};

/// Quantiles interpolate linearly between order statistics.
ClusterStats cluster_stats(const QualityDataset& ds, const std::vector<std::size_t>& labels,
                           std::size_t cluster_id);

struct ClusterReport {
    std::size_t cluster = 0;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    ClusterStats stats;  // over the cluster's train and test members
    bool modeled = false;
    std::string note;  // reason when not modeled
    ParamMap best_params;
    MetricPair train_metrics;
    MetricPair test_metrics;
    bool convergence_warning = false;
    std::vector<GridSearchRow> cv_table;  // exported to CSV, not JSON
};

struct EvaluationReport {
    std::string dataset;
    std::size_t n_rows = 0;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;

    std::size_t pca_components = 0;  // 0 when clustering on scaled features
    std::vector<double> variance_ratios;

    std::size_t selected_k = 0;
    bool k_overridden = false;
    ElbowCurve elbow;  // empty when k was overridden
    double silhouette_mean = 0.0;

    std::string model_family;
    std::size_t folds = 0;
    std::vector<ClusterReport> clusters;
    MetricPair global_train;  // pooled over modeled clusters

    ClusterStats dataset_stats;  // whole-dataset reference statistics
    std::vector<std::string> warnings;
    std::uint64_t seed = 0;
    std::string config_fingerprint;
};

struct FeedbackEntry {
    std::size_t cluster = 0;
    bool has_metrics = false;
    double r2_test = 0.0;
    // "snr: above dataset mean" style notes for features whose cluster
    // mean deviates more than one dataset standard deviation.
    std::vector<std::string> characteristics;
};

struct FeedbackSummary {
    std::vector<FeedbackEntry> ranking;  // permutation of cluster indices
};

/// Ranks clusters by test R² descending (ties and unmodeled clusters by
/// index ascending) and extracts per-cluster dominant characteristics.
FeedbackSummary rank_clusters(const EvaluationReport& report);

struct PipelineResult {
    EvaluationReport report;
    FeedbackSummary feedback;
    QualityDataset data;               // rows in train-then-test order
    std::vector<std::size_t> labels;   // parallel cluster labels
};

/// Runs load -> split -> scale -> project -> select k -> cluster ->
/// per-cluster tuning -> statistics -> ranking. Every stochastic stage is
/// seeded from the master seed via derive_seed(master, stage, index);
/// stage failures abort with the stage name.
PipelineResult run_pipeline(const PipelineConfig& config);

/// Canonical JSON document (sorted keys, no timestamps).
std::string report_to_json(const PipelineResult& result);

/// Rebuilds report and feedback from the canonical JSON; the dataset and
/// label fields of the result stay empty.
PipelineResult report_from_json(const std::string& text);

enum class ReportFormat { json, csv, markdown };

/// Writes report.json, metrics.csv plus per-cluster CV tables, and
/// report.md as selected; returns the written paths.
std::vector<std::string> emit_report(const PipelineResult& result, const std::string& out_dir,
                                     const std::vector<ReportFormat>& formats);

} // namespace chromaq
