#include "chromaq/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "chromaq/errors.hpp"
#include "chromaq/reduce.hpp"
#include "chromaq/rng.hpp"

namespace chromaq {

namespace {

std::string trim(std::string_view s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return std::string(s.substr(begin, end - begin + 1));
}

double parse_double(const std::string& value, const std::string& key) {
    double out = 0.0;
    const char* last = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), last, out);
    if (ec != std::errc() || ptr != last)
        throw ConfigError("key " + key + ": expected a number, got \"" + value + "\"");
    return out;
}

std::uint64_t parse_u64(const std::string& value, const std::string& key) {
    std::uint64_t out = 0;
    const char* last = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), last, out);
    if (ec != std::errc() || ptr != last)
        throw ConfigError("key " + key + ": expected a non-negative integer, got \"" +
                          value + "\"");
    return out;
}

std::size_t parse_size(const std::string& value, const std::string& key,
                       std::size_t minimum) {
    const std::uint64_t v = parse_u64(value, key);
    if (v < minimum)
        throw ConfigError("key " + key + ": must be at least " + std::to_string(minimum));
    return static_cast<std::size_t>(v);
}

std::vector<double> parse_list(const std::string& value, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item), key));
    if (out.empty()) throw ConfigError("key " + key + ": empty value list");
    return out;
}

std::string hash_hex(std::string_view text) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(text)));
    return buf;
}

void apply_peak_key(SyntheticPeakSpec& peak, const std::string& field, double value,
                    const std::string& key) {
    if (field == "apex_time_s")
        peak.apex_time_s = value;
    else if (field == "amplitude")
        peak.amplitude = value;
    else if (field == "sigma_s")
        peak.sigma_s = value;
    else if (field == "tau_s")
        peak.tau_s = value;
    else if (field == "baseline_offset")
        peak.baseline_offset = value;
    else if (field == "baseline_slope")
        peak.baseline_slope = value;
    else if (field == "noise_sigma")
        peak.noise_sigma = value;
    else
        throw ConfigError("unknown config key: " + key);
}

} // namespace

PipelineConfig parse_config_text(const std::string& text) {
    PipelineConfig cfg;
    cfg.fingerprint = hash_hex(text);

    std::map<std::uint64_t, SyntheticPeakSpec> peaks;
    std::set<std::string> seen;
    std::istringstream lines(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(lines, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) +
                              ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(line_no) + ": missing key");
        if (!seen.insert(key).second)
            throw ConfigError("duplicate config key: " + key);

        if (key == "pipeline.seed") {
            cfg.seed = parse_u64(value, key);
            cfg.seed_set = true;
        } else if (key == "pipeline.out_dir") {
            cfg.out_dir = value;
        } else if (key == "dataset.path") {
            cfg.dataset_path = value;
        } else if (key == "dataset.name") {
            cfg.dataset_name = value;
        } else if (key == "synthetic.rows") {
            cfg.synthetic_rows = parse_size(value, key, 3);
        } else if (key == "split.test_fraction") {
            cfg.test_fraction = parse_double(value, key);
            if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0))
                throw ConfigError("key " + key + ": must lie strictly between 0 and 1");
        } else if (key == "pca.variance_threshold") {
            cfg.pca_variance_threshold = parse_double(value, key);
            if (!(cfg.pca_variance_threshold > 0.0 && cfg.pca_variance_threshold <= 1.0))
                throw ConfigError("key " + key + ": must lie in (0, 1]");
        } else if (key == "pca.components") {
            cfg.pca_components = parse_size(value, key, 1);
        } else if (key == "cluster.k_min") {
            cfg.k_min = parse_size(value, key, 1);
        } else if (key == "cluster.k_max") {
            cfg.k_max = parse_size(value, key, 1);
        } else if (key == "cluster.k") {
            cfg.k_override = parse_size(value, key, 1);
        } else if (key == "cluster.space") {
            if (value == "pca")
                cfg.cluster_space = ClusterSpace::pca;
            else if (value == "features")
                cfg.cluster_space = ClusterSpace::features;
            else
                throw ConfigError("key " + key + ": expected pca or features");
        } else if (key == "model.family") {
            cfg.model_family = parse_model_family(value);
        } else if (key == "model.folds") {
            cfg.folds = parse_size(value, key, 2);
        } else if (key.rfind("grid.", 0) == 0) {
            const std::string name = key.substr(5);
            if (name.empty()) throw ConfigError("key " + key + ": missing parameter name");
            cfg.grid.params.emplace_back(name, parse_list(value, key));
        } else if (key == "chromatogram.duration_s") {
            cfg.chromatogram.duration_s = parse_double(value, key);
            if (!(cfg.chromatogram.duration_s > 0.0))
                throw ConfigError("key " + key + ": must be positive");
        } else if (key == "chromatogram.sample_rate_hz") {
            cfg.chromatogram.sample_rate_hz = parse_double(value, key);
            if (!(cfg.chromatogram.sample_rate_hz > 0.0))
                throw ConfigError("key " + key + ": must be positive");
        } else if (key == "chromatogram.id") {
            cfg.chromatogram.id = value;
        } else if (key.rfind("peak.", 0) == 0) {
            const auto dot = key.find('.', 5);
            if (dot == std::string::npos) throw ConfigError("unknown config key: " + key);
            const std::uint64_t index = parse_u64(key.substr(5, dot - 5), key);
            apply_peak_key(peaks[index], key.substr(dot + 1), parse_double(value, key),
                           key);
        } else {
            throw ConfigError("unknown config key: " + key);
        }
    }

    if (cfg.k_min > cfg.k_max)
        throw ConfigError("cluster.k_min exceeds cluster.k_max");
    for (auto& [index, peak] : peaks) cfg.chromatogram.peaks.push_back(peak);
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

ParamGrid default_grid(ModelFamily family) {
    ParamGrid g;
    if (family == ModelFamily::gradient_boost) {
        g.params = {{"learning_rate", {0.1}},
                    {"n_estimators", {100.0, 300.0}},
                    {"max_depth", {3.0, 5.0}},
                    {"max_leaf_nodes", {8.0}}};
    } else {
        g.params = {{"c", {1.0, 10.0, 100.0}}, {"gamma", {0.1, 1.0}}, {"epsilon", {0.01}}};
    }
    return g;
}

namespace {

struct TierSpec {
    double snr_mean, snr_sd;
    double skew_mean, skew_sd;
    double dtr_mean, dtr_sd;
    double area_mean, area_sd;
    double noise_sd;
    int len_lo, len_hi;
    int sul_lo, sul_hi;
};

// High, medium and low quality tiers: SNR, skewness and peak area degrade
// monotonically and target noise grows from tier to tier, so predictability
// tracks quality. The middle tier is additionally set apart by sulfur-free
// sequences and a systematic retention drift between replicates, which keeps
// the three tier centroids well separated in every direction rather than
// collapsed onto a single quality axis.
constexpr TierSpec kTiers[3] = {
    {600.0, 100.0, 1.1, 0.05, 0.0, 0.05, 20000.0, 800.0, 0.05, 8, 16, 3, 5},
    {200.0, 50.0, 1.5, 0.2, 0.6, 0.1, 15000.0, 800.0, 0.3, 8, 16, 0, 1},
    {80.0, 30.0, 1.7, 0.4, 0.0, 0.25, 6000.0, 800.0, 0.8, 8, 16, 3, 5},
};

double positive_normal(Rng& rng, double mean, double sd) {
    double v = rng.normal(mean, sd);
    while (v <= 0.0) v = rng.normal(mean, sd);
    return v;
}

} // namespace

QualityDataset generate_tiered_dataset(std::size_t rows, std::uint64_t seed) {
    if (rows < 3) throw ConfigError("synthetic dataset needs at least 3 rows");

    QualityDataset ds;
    ds.name = "synthetic";
    ds.feature_names.assign(kFeatureNames.begin(), kFeatureNames.end());
    ds.records.reserve(rows);

    Rng rng(seed);
    const char bases[] = {'A', 'T', 'C', 'G'};
    const std::size_t third = rows / 3;
    const std::size_t sizes[3] = {third, third, rows - 2 * third};
    for (std::size_t tier = 0; tier < 3; ++tier) {
        const TierSpec& t = kTiers[tier];
        for (std::size_t i = 0; i < sizes[tier]; ++i) {
            QualityRecord rec;
            const int length =
                t.len_lo + static_cast<int>(rng.bounded(
                               static_cast<std::uint64_t>(t.len_hi - t.len_lo + 1)));
            const int sul_hi = std::min(t.sul_hi, length - 1);
            const int sul_lo = std::min(t.sul_lo, sul_hi);
            const int sulfur =
                sul_lo + static_cast<int>(rng.bounded(
                             static_cast<std::uint64_t>(sul_hi - sul_lo + 1)));
            rec.sequence_id.reserve(static_cast<std::size_t>(length));
            for (int b = 0; b < length; ++b) rec.sequence_id.push_back(bases[rng.bounded(4)]);

            rec.length = length;
            rec.sulfur_count = sulfur;
            rec.snr = positive_normal(rng, t.snr_mean, t.snr_sd);
            rec.skewness = positive_normal(rng, t.skew_mean, t.skew_sd);
            rec.delta_tr = rng.normal(t.dtr_mean, t.dtr_sd);
            rec.peak_area = positive_normal(rng, t.area_mean, t.area_sd);

            const double smooth = 2.0 + 0.35 * length - 0.12 * sulfur +
                                  0.015 * static_cast<double>(length) * sulfur;
            rec.retention_time = positive_normal(rng, smooth, t.noise_sd);
            ds.records.push_back(std::move(rec));
        }
    }
    return ds;
}

namespace {

double interpolated_quantile(const std::vector<double>& sorted, double p) {
    const double h = p * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

FeatureStats stats_of(std::vector<double> values) {
    FeatureStats s;
    if (values.empty()) {
        s.applicable = false;
        return s;
    }
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / n;
    if (values.size() < 2) {
        s.stddev = 0.0;
        s.degenerate = true;
    } else {
        double acc = 0.0;
        for (double v : values) acc += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(acc / (n - 1.0));
    }
    std::sort(values.begin(), values.end());
    s.min = values.front();
    s.q25 = interpolated_quantile(values, 0.25);
    s.median = interpolated_quantile(values, 0.5);
    s.q75 = interpolated_quantile(values, 0.75);
    s.max = values.back();
    return s;
}

std::optional<double> record_value(const QualityRecord& rec, std::string_view name) {
    if (name == "delta_tr") return rec.delta_tr;
    if (name == "snr") return rec.snr;
    if (name == "skewness") return rec.skewness;
    if (name == "peak_area") return rec.peak_area;
    if (name == "length")
        return rec.length ? std::optional<double>(*rec.length) : std::nullopt;
    if (name == "sulfur_count")
        return rec.sulfur_count ? std::optional<double>(*rec.sulfur_count) : std::nullopt;
    if (name == "injection_volume") return rec.injection_volume;
    if (name == "retention_time") return rec.retention_time;
    return std::nullopt;
}

std::vector<std::string> stats_feature_names() {
    std::vector<std::string> names(kFeatureNames.begin(), kFeatureNames.end());
    names.push_back("injection_volume");
    names.push_back("retention_time");
    return names;
}

} // namespace

ClusterStats cluster_stats(const QualityDataset& ds, const std::vector<std::size_t>& labels,
                           std::size_t cluster_id) {
    if (labels.size() != ds.size())
        throw DimensionMismatch("labels length does not match record count");
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == cluster_id) members.push_back(i);
    if (members.empty())
        throw InsufficientClusterData("cluster " + std::to_string(cluster_id) +
                                      " is empty");

    ClusterStats out;
    out.size = members.size();
    out.feature_names = stats_feature_names();
    for (const std::string& name : out.feature_names) {
        std::vector<double> values;
        values.reserve(members.size());
        for (std::size_t i : members) {
            const auto v = record_value(ds.records[i], name);
            if (v) values.push_back(*v);
        }
        out.features.push_back(stats_of(std::move(values)));
    }
    return out;
}

FeedbackSummary rank_clusters(const EvaluationReport& report) {
    // Dataset-level mean and spread per feature, for deviation checks.
    std::map<std::string, std::pair<double, double>> reference;
    for (std::size_t f = 0; f < report.dataset_stats.feature_names.size(); ++f) {
        const FeatureStats& s = report.dataset_stats.features[f];
        if (s.applicable)
            reference[report.dataset_stats.feature_names[f]] = {s.mean, s.stddev};
    }

    FeedbackSummary summary;
    for (const ClusterReport& cluster : report.clusters) {
        FeedbackEntry entry;
        entry.cluster = cluster.cluster;
        entry.has_metrics = cluster.modeled;
        entry.r2_test = cluster.modeled ? cluster.test_metrics.r2 : 0.0;
        for (const auto& name : kFeatureNames) {
            const auto ref = reference.find(std::string(name));
            if (ref == reference.end() || ref->second.second <= 0.0) continue;
            for (std::size_t f = 0; f < cluster.stats.feature_names.size(); ++f) {
                if (cluster.stats.feature_names[f] != name) continue;
                const FeatureStats& s = cluster.stats.features[f];
                if (!s.applicable) break;
                const double deviation = s.mean - ref->second.first;
                if (std::abs(deviation) > ref->second.second)
                    entry.characteristics.push_back(
                        std::string(name) + ": " +
                        (deviation > 0.0 ? "above" : "below") + " dataset mean");
                break;
            }
        }
        summary.ranking.push_back(std::move(entry));
    }

    std::stable_sort(summary.ranking.begin(), summary.ranking.end(),
                     [](const FeedbackEntry& a, const FeedbackEntry& b) {
                         if (a.has_metrics != b.has_metrics) return a.has_metrics;
                         if (a.has_metrics && a.r2_test != b.r2_test)
                             return a.r2_test > b.r2_test;
                         return a.cluster < b.cluster;
                     });
    return summary;
}

namespace {

template <class F>
auto run_stage(const std::string& name, F&& f) -> decltype(f()) {
    try {
        return std::forward<F>(f)();
    } catch (const std::exception& error) {
        throw PipelineStageError("stage " + name + ": " + error.what());
    }
}

std::vector<std::size_t> member_rows(const std::vector<std::size_t>& labels,
                                     std::size_t cluster) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == cluster) rows.push_back(i);
    return rows;
}

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), m.cols());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(rows[r], c);
    return out;
}

std::vector<double> take_values(const std::vector<double>& v,
                                const std::vector<std::size_t>& rows) {
    std::vector<double> out(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) out[r] = v[rows[r]];
    return out;
}

} // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
    if (!config.seed_set)
        throw ConfigError("a master seed is required (pipeline.seed or --seed)");
    if (!(config.test_fraction > 0.0 && config.test_fraction < 1.0))
        throw ConfigError("test fraction must lie strictly between 0 and 1");
    if (config.folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
    if (config.k_min < 1 || config.k_min > config.k_max)
        throw ConfigError("invalid k range");

    const std::uint64_t master = config.seed;
    PipelineResult result;
    EvaluationReport& report = result.report;
    report.seed = master;
    report.config_fingerprint = config.fingerprint;
    report.model_family = to_string(config.model_family);
    report.folds = config.folds;

    const QualityDataset full = run_stage("load", [&] {
        QualityDataset ds;
        if (!config.dataset_path.empty()) {
            ds = drop_nulls(load_csv(config.dataset_path));
        } else {
            ds = generate_tiered_dataset(config.synthetic_rows,
                                         derive_seed(master, "synthetic"));
        }
        if (!config.dataset_name.empty()) ds.name = config.dataset_name;
        return ds;
    });
    report.dataset = full.name;
    report.n_rows = full.size();

    const auto [train, test] = run_stage("split", [&] {
        return split_train_test(full, config.test_fraction, derive_seed(master, "split"));
    });
    report.train_rows = train.size();
    report.test_rows = test.size();

    struct ScaledData {
        Matrix train_x;
        Matrix test_x;
        std::vector<double> train_y;
        std::vector<double> test_y;
        bool clamped = false;
    };
    const ScaledData scaled = run_stage("scale", [&] {
        ScaledData s;
        const FeatureBlock ftr = feature_matrix(train, FeatureSet::regression);
        const FeatureBlock fte = feature_matrix(test, FeatureSet::regression);
        const ScaleResult std_train = standardize(ftr.x);
        const ScaleResult norm_train = normalize(std_train.matrix);
        const ScaleResult std_test = standardize(fte.x, &std_train.params);
        const ScaleResult norm_test = normalize(std_test.matrix, &norm_train.params);
        s.train_x = norm_train.matrix;
        s.test_x = norm_test.matrix;
        s.train_y = ftr.target;
        s.test_y = fte.target;
        s.clamped = norm_test.clamped;
        return s;
    });
    if (scaled.clamped)
        report.warnings.push_back("test rows were clamped into the training value range");

    Matrix train_z = scaled.train_x;
    Matrix test_z = scaled.test_x;
    if (config.cluster_space == ClusterSpace::pca) {
        run_stage("pca", [&] {
            const std::size_t d = scaled.train_x.cols();
            const PcaModel probe = fit_pca(scaled.train_x, d);
            std::size_t m = config.pca_components > 0
                                ? std::min(config.pca_components, d)
                                : choose_components(probe.full_ratios,
                                                    config.pca_variance_threshold);
            const PcaModel model = fit_pca(scaled.train_x, m);
            train_z = transform(model, scaled.train_x);
            test_z = transform(model, scaled.test_x);
            report.pca_components = m;
            report.variance_ratios = model.variance_ratios;
            if (model.rank_deficient)
                report.warnings.push_back("retained principal components include a "
                                          "near-zero eigenvalue");
            return 0;
        });
    }

    if (config.k_override > 0) {
        report.selected_k = config.k_override;
        report.k_overridden = true;
    } else {
        run_stage("elbow", [&] {
            const std::size_t k_cap = std::min(config.k_max, train_z.rows());
            report.elbow = elbow_scan(train_z, std::min(config.k_min, k_cap), k_cap,
                                      derive_seed(master, "elbow"));
            report.selected_k = report.elbow.selected_k;
            if (report.elbow.low_curvature)
                report.warnings.push_back(
                    "elbow curvature is weak; k selection is low-confidence");
            if (report.elbow.degenerate)
                report.warnings.push_back("k range left no interior elbow candidate");
            return 0;
        });
    }

    const KMeansModel km = run_stage("cluster", [&] {
        return kmeans_fit(train_z, report.selected_k, derive_seed(master, "kmeans"));
    });
    const std::vector<std::size_t> labels_test = assign(km, test_z);

    run_stage("silhouette", [&] {
        if (report.selected_k >= 2) {
            report.silhouette_mean = silhouette(train_z, km.labels).mean;
        } else {
            report.silhouette_mean = 0.0;
            report.warnings.push_back("silhouette is undefined for a single cluster");
        }
        return 0;
    });

    run_stage("evaluate", [&] {
        const std::size_t min_rows = std::max<std::size_t>(10, config.folds);
        const ParamGrid grid =
            config.grid.params.empty() ? default_grid(config.model_family) : config.grid;
        std::vector<double> pooled_truth;
        std::vector<double> pooled_pred;
        for (std::size_t c = 0; c < report.selected_k; ++c) {
            ClusterReport cluster;
            cluster.cluster = c;
            const std::vector<std::size_t> rows_tr = member_rows(km.labels, c);
            const std::vector<std::size_t> rows_te = member_rows(labels_test, c);
            cluster.train_size = rows_tr.size();
            cluster.test_size = rows_te.size();

            if (rows_tr.size() < min_rows) {
                cluster.note = "insufficient data: " + std::to_string(rows_tr.size()) +
                               " training rows (minimum " + std::to_string(min_rows) +
                               ")";
            } else if (rows_te.empty()) {
                cluster.note = "insufficient data: no test rows";
            } else {
                try {
                    GridSearchResult search = grid_search(
                        config.model_family, grid, take_rows(scaled.train_x, rows_tr),
                        take_values(scaled.train_y, rows_tr), config.folds,
                        derive_seed(master, "grid", c));
                    const std::vector<double> pred_tr =
                        search.model->predict(take_rows(scaled.train_x, rows_tr));
                    const std::vector<double> pred_te =
                        search.model->predict(take_rows(scaled.test_x, rows_te));
                    const std::vector<double> truth_tr =
                        take_values(scaled.train_y, rows_tr);
                    const std::vector<double> truth_te =
                        take_values(scaled.test_y, rows_te);
                    cluster.train_metrics = {rmse(truth_tr, pred_tr),
                                             r_squared(truth_tr, pred_tr)};
                    cluster.test_metrics = {rmse(truth_te, pred_te),
                                            r_squared(truth_te, pred_te)};
                    cluster.best_params = search.best_params;
                    cluster.convergence_warning = search.model->convergence_warning();
                    cluster.cv_table = std::move(search.table);
                    cluster.modeled = true;
                    pooled_truth.insert(pooled_truth.end(), truth_tr.begin(),
                                        truth_tr.end());
                    pooled_pred.insert(pooled_pred.end(), pred_tr.begin(), pred_tr.end());
                } catch (const std::exception& error) {
                    cluster.note = std::string("insufficient data: ") + error.what();
                }
            }
            if (!cluster.modeled)
                report.warnings.push_back("cluster " + std::to_string(c) + " was not "
                                          "modeled (" + cluster.note + ")");
            report.clusters.push_back(std::move(cluster));
        }
        if (!pooled_truth.empty()) {
            report.global_train.rmse = rmse(pooled_truth, pooled_pred);
            report.global_train.r2 = r_squared(pooled_truth, pooled_pred);
        } else {
            report.warnings.push_back("no cluster was modeled; global metrics omitted");
        }
        return 0;
    });

    run_stage("stats", [&] {
        result.data = full;
        result.data.records.clear();
        result.data.records.reserve(full.size());
        result.labels.clear();
        result.labels.reserve(full.size());
        for (std::size_t i = 0; i < train.size(); ++i) {
            result.data.records.push_back(train.records[i]);
            result.labels.push_back(km.labels[i]);
        }
        for (std::size_t i = 0; i < test.size(); ++i) {
            result.data.records.push_back(test.records[i]);
            result.labels.push_back(labels_test[i]);
        }
        for (ClusterReport& cluster : report.clusters)
            cluster.stats = cluster_stats(result.data, result.labels, cluster.cluster);
        const std::vector<std::size_t> everything(result.data.size(), 0);
        report.dataset_stats = cluster_stats(result.data, everything, 0);
        return 0;
    });

    result.feedback = run_stage("rank", [&] { return rank_clusters(report); });
    return result;
}

} // namespace chromaq
