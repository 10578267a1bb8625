#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "chromaq/cluster.hpp"
#include "chromaq/errors.hpp"
#include "chromaq/models.hpp"
#include "chromaq/pipeline.hpp"
#include "chromaq/reduce.hpp"
#include "chromaq/rng.hpp"
#include "chromaq/signal.hpp"
#include "chromaq/tabular.hpp"

using namespace chromaq;

namespace {

std::string fmt(double v) {
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.17g", v);
    return buffer;
}

std::string fmt_short(double v) {
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.6g", v);
    return buffer;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool is_null_cell(const std::string& cell) {
    return cell.empty() || cell == "NA" || cell == "-";
}

std::vector<std::string> split_cells(const std::string& line) {
    std::vector<std::string> cells;
    std::string current;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(trim(current));
            current.clear();
        } else {
            current.push_back(ch);
        }
    }
    cells.push_back(trim(current));
    return cells;
}

double parse_double_cell(const std::string& cell, std::size_t row, const std::string& column) {
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value))
        throw ParseError("row " + std::to_string(row) + ", column " + column +
                         ": cannot parse '" + cell + "' as a number");
    return value;
}

int parse_int_cell(const std::string& cell, std::size_t row, const std::string& column) {
    int value = 0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw ParseError("row " + std::to_string(row) + ", column " + column +
                         ": cannot parse '" + cell + "' as an integer");
    return value;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

void ensure_out_dir(const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write failed for " + path);
    std::printf("wrote %s\n", path.c_str());
}

Chromatogram read_chromatogram(const std::string& path) {
    const std::vector<std::string> lines = read_lines(path);
    if (lines.empty()) throw SchemaMismatch(path + ": empty file");
    if (trim(lines[0]) != "time_s,intensity")
        throw SchemaMismatch(path + ": expected header 'time_s,intensity', got '" +
                             lines[0] + "'");
    Chromatogram chrom;
    chrom.id = std::filesystem::path(path).stem().string();
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const std::vector<std::string> cells = split_cells(lines[i]);
        if (cells.size() != 2)
            throw ParseError(path + ", row " + std::to_string(i) + ": expected 2 fields, got " +
                             std::to_string(cells.size()));
        chrom.times.push_back(parse_double_cell(cells[0], i, "time_s"));
        chrom.intensities.push_back(parse_double_cell(cells[1], i, "intensity"));
    }
    validate(chrom);
    return chrom;
}

std::string chromatogram_csv(const Chromatogram& chrom) {
    std::ostringstream out;
    out << "time_s,intensity\n";
    for (std::size_t i = 0; i < chrom.size(); ++i)
        out << fmt(chrom.times[i]) << ',' << fmt(chrom.intensities[i]) << '\n';
    return out.str();
}

/// Noise from the longer idle flank between the analysis window edge and the
/// detected region; falls back to the other flank when the first is too
/// short. Flanks never extend past the window, so a window placed around one
/// peak keeps neighbouring peaks out of the noise estimate.
NoiseEstimate flank_noise(const Chromatogram& chrom, const PeakRegion& region,
                          const TimeWindow& window) {
    const double step = chrom.times.back() - chrom.times[chrom.size() - 2];
    const std::size_t first_in = static_cast<std::size_t>(
        std::lower_bound(chrom.times.begin(), chrom.times.end(), window.begin_s) -
        chrom.times.begin());
    const std::size_t past_end = static_cast<std::size_t>(
        std::lower_bound(chrom.times.begin(), chrom.times.end(), window.end_s) -
        chrom.times.begin());
    const TimeWindow left{window.begin_s, chrom.times[region.left_index]};
    const TimeWindow right{region.right_index + 1 < chrom.size()
                               ? chrom.times[region.right_index + 1]
                               : chrom.times.back() + step,
                           window.end_s};
    const std::size_t left_count =
        region.left_index > first_in ? region.left_index - first_in : 0;
    const std::size_t right_count =
        past_end > region.right_index + 1 ? past_end - region.right_index - 1 : 0;
    const TimeWindow& first = left_count >= right_count ? left : right;
    const TimeWindow& second = left_count >= right_count ? right : left;
    try {
        return estimate_noise(chrom, first);
    } catch (const InsufficientIdleSamples&) {
        return estimate_noise(chrom, second);
    }
}

struct HeaderMap {
    std::map<std::string, std::size_t> index;

    static HeaderMap parse(const std::string& line, const std::vector<std::string>& required,
                           const std::string& path) {
        HeaderMap map;
        const std::vector<std::string> cells = split_cells(line);
        for (std::size_t i = 0; i < cells.size(); ++i) map.index.emplace(cells[i], i);
        for (const std::string& name : required)
            if (!map.index.count(name))
                throw SchemaMismatch(path + ": missing required column '" + name + "'");
        return map;
    }

    const std::string& cell(const std::vector<std::string>& cells, const std::string& name,
                            std::size_t row) const {
        const std::size_t at = index.at(name);
        if (at >= cells.size())
            throw ParseError("row " + std::to_string(row) + ": missing field '" + name + "'");
        return cells[at];
    }
    bool has(const std::string& name) const { return index.count(name) != 0; }
};

std::vector<ReportFormat> to_formats(const std::vector<std::string>& names,
                                     const std::vector<ReportFormat>& fallback) {
    if (names.empty()) return fallback;
    std::vector<ReportFormat> formats;
    for (const std::string& name : names) {
        ReportFormat f = ReportFormat::json;
        if (name == "json")
            f = ReportFormat::json;
        else if (name == "csv")
            f = ReportFormat::csv;
        else if (name == "md")
            f = ReportFormat::markdown;
        else
            throw ConfigError("unknown format '" + name + "' (expected json, csv or md)");
        if (std::find(formats.begin(), formats.end(), f) == formats.end())
            formats.push_back(f);
    }
    return formats;
}

void require_seed(const PipelineConfig& cfg) {
    if (!cfg.seed_set)
        throw ConfigError("a master seed is required (pipeline.seed or --seed)");
}

Matrix rows_of(const Matrix& m, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), m.cols());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(rows[r], c);
    return out;
}

std::vector<double> values_of(const std::vector<double>& v, const std::vector<std::size_t>& rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(v[r]);
    return out;
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

int cmd_synth(const PipelineConfig& cfg) {
    require_seed(cfg);
    ensure_out_dir(cfg.out_dir);
    if (cfg.chromatogram.configured()) {
        const Chromatogram chrom = synthesize_chromatogram(
            cfg.chromatogram.peaks, cfg.chromatogram.duration_s,
            cfg.chromatogram.sample_rate_hz, derive_seed(cfg.seed, "chromatogram"),
            cfg.chromatogram.id);
        write_text(cfg.out_dir + "/chromatogram.csv", chromatogram_csv(chrom));
        return 0;
    }
    const QualityDataset ds =
        generate_tiered_dataset(cfg.synthetic_rows, derive_seed(cfg.seed, "synthetic"));
    const std::string path = cfg.out_dir + "/dataset.csv";
    save_csv(ds, path);
    std::printf("wrote %s (%zu rows)\n", path.c_str(), ds.size());
    return 0;
}

int cmd_peaks(const PipelineConfig& cfg, const std::vector<std::string>& inputs,
              std::optional<double> window_begin, std::optional<double> window_end) {
    ensure_out_dir(cfg.out_dir);
    std::ostringstream out;
    out << "id,retention_time_min,height,snr,skewness,area\n";
    for (const std::string& input : inputs) {
        const Chromatogram chrom = read_chromatogram(input);
        const double step = chrom.times.back() - chrom.times[chrom.size() - 2];
        TimeWindow window{window_begin.value_or(chrom.times.front()),
                          window_end.value_or(chrom.times.back() + step)};
        const PeakRegion region = detect_peak(chrom, window);
        const std::vector<double> baseline = estimate_baseline(chrom, region);
        const NoiseEstimate noise = flank_noise(chrom, region, window);
        std::string warning;
        const PeakMetrics metrics = measure_peak(chrom, region, baseline, noise, &warning);
        if (!warning.empty())
            std::fprintf(stderr, "chromaq: %s: %s\n", input.c_str(), warning.c_str());
        out << chrom.id << ',' << fmt(metrics.retention_time_min) << ',' << fmt(metrics.height)
            << ',' << fmt(metrics.snr) << ',' << fmt(metrics.skewness) << ','
            << fmt(metrics.area) << '\n';
    }
    write_text(cfg.out_dir + "/peaks.csv", out.str());
    return 0;
}

int cmd_build_table(const PipelineConfig& cfg, const std::string& input) {
    struct RunRow {
        double retention_time_min = 0.0;
        double snr = 0.0;
        double skewness = 0.0;
        double area = 0.0;
        int length = 0;
        int sulfur_count = 0;
        std::optional<double> injection_volume;
    };

    const std::vector<std::string> lines = read_lines(input);
    if (lines.empty()) throw SchemaMismatch(input + ": empty file");
    const std::vector<std::string> required = {
        "sequence_id", "run",    "retention_time_min", "snr",
        "skewness",    "area",   "length",             "sulfur_count"};
    const HeaderMap header = HeaderMap::parse(lines[0], required, input);

    // sequence_id -> per-run measurements, in first-seen order.
    std::vector<std::string> order;
    std::map<std::string, std::map<int, RunRow>> groups;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const std::vector<std::string> cells = split_cells(lines[i]);
        const std::string id = header.cell(cells, "sequence_id", i);
        if (id.empty()) throw ParseError("row " + std::to_string(i) + ": empty sequence_id");
        const int run = parse_int_cell(header.cell(cells, "run", i), i, "run");
        if (run != 1 && run != 2)
            throw ParseError("row " + std::to_string(i) + ": run must be 1 or 2, got " +
                             std::to_string(run));
        RunRow row;
        row.retention_time_min =
            parse_double_cell(header.cell(cells, "retention_time_min", i), i, "retention_time_min");
        row.snr = parse_double_cell(header.cell(cells, "snr", i), i, "snr");
        row.skewness = parse_double_cell(header.cell(cells, "skewness", i), i, "skewness");
        row.area = parse_double_cell(header.cell(cells, "area", i), i, "area");
        row.length = parse_int_cell(header.cell(cells, "length", i), i, "length");
        row.sulfur_count = parse_int_cell(header.cell(cells, "sulfur_count", i), i, "sulfur_count");
        if (header.has("injection_volume")) {
            const std::string& cell = header.cell(cells, "injection_volume", i);
            if (!is_null_cell(cell))
                row.injection_volume = parse_double_cell(cell, i, "injection_volume");
        }
        if (!groups.count(id)) order.push_back(id);
        if (groups[id].count(run))
            throw ParseError("row " + std::to_string(i) + ": duplicate run " +
                             std::to_string(run) + " for sequence " + id);
        groups[id][run] = row;
    }

    QualityDataset ds;
    ds.name = std::filesystem::path(input).stem().string();
    ds.feature_names.assign(kFeatureNames.begin(), kFeatureNames.end());
    std::size_t dropped = 0;
    for (const std::string& id : order) {
        const std::map<int, RunRow>& runs = groups[id];
        if (!runs.count(1) || !runs.count(2)) {
            std::fprintf(stderr, "chromaq: dropping %s: replicate run %d missing\n", id.c_str(),
                         runs.count(1) ? 2 : 1);
            ++dropped;
            continue;
        }
        const RunRow& first = runs.at(1);
        const RunRow& second = runs.at(2);
        QualityRecord rec;
        rec.sequence_id = id;
        rec.delta_tr = delta_tr(first.retention_time_min, second.retention_time_min);
        rec.snr = first.snr;
        rec.skewness = first.skewness;
        rec.peak_area = first.area;
        rec.length = first.length;
        rec.sulfur_count = first.sulfur_count;
        rec.injection_volume = first.injection_volume;
        rec.retention_time = first.retention_time_min;
        ds.records.push_back(std::move(rec));
    }
    if (ds.records.empty()) throw EmptyDataset("no sequence had both replicate runs");
    if (dropped > 0)
        std::fprintf(stderr, "chromaq: dropped %zu unpaired sequence(s)\n", dropped);

    ensure_out_dir(cfg.out_dir);
    const std::string path = cfg.out_dir + "/dataset.csv";
    save_csv(ds, path);
    std::printf("wrote %s (%zu rows)\n", path.c_str(), ds.size());
    return 0;
}

int cmd_cluster(const PipelineConfig& cfg, const std::string& input) {
    require_seed(cfg);
    std::vector<std::string> warnings;
    QualityDataset ds = load_csv(input, &warnings);
    for (const std::string& w : warnings) std::fprintf(stderr, "chromaq: %s\n", w.c_str());
    std::size_t removed = 0;
    ds = drop_nulls(ds, &removed);
    if (removed > 0)
        std::fprintf(stderr, "chromaq: dropped %zu incomplete row(s)\n", removed);

    const FeatureBlock fb = feature_matrix(ds, FeatureSet::clustering);
    const ScaleResult standardized = standardize(fb.x);
    const ScaleResult normalized = normalize(standardized.matrix);

    Matrix z = normalized.matrix;
    if (cfg.cluster_space == ClusterSpace::pca) {
        const PcaModel probe = fit_pca(normalized.matrix, normalized.matrix.cols());
        const std::size_t m = cfg.pca_components > 0
                                  ? std::min(cfg.pca_components, normalized.matrix.cols())
                                  : choose_components(probe.full_ratios, cfg.pca_variance_threshold);
        const PcaModel pca = fit_pca(normalized.matrix, m);
        z = transform(pca, normalized.matrix);
        std::printf("pca: %zu component(s)\n", m);
    }

    ElbowCurve elbow;
    std::size_t k = cfg.k_override;
    if (k == 0) {
        const std::size_t k_cap = std::min(cfg.k_max, z.rows());
        elbow = elbow_scan(z, std::min(cfg.k_min, k_cap), k_cap, derive_seed(cfg.seed, "elbow"));
        k = elbow.selected_k;
        std::printf("elbow selected k = %zu%s\n", k,
                    elbow.low_curvature ? " (weak curvature)" : "");
    } else {
        std::printf("k = %zu (override)\n", k);
    }

    const KMeansModel km = kmeans_fit(z, k, derive_seed(cfg.seed, "kmeans"));

    ensure_out_dir(cfg.out_dir);
    std::ostringstream labels_out;
    labels_out << "row,sequence_id,cluster\n";
    for (std::size_t i = 0; i < ds.size(); ++i)
        labels_out << i << ',' << ds.records[i].sequence_id << ',' << km.labels[i] << '\n';
    write_text(cfg.out_dir + "/labels.csv", labels_out.str());

    if (!elbow.k_values.empty()) {
        std::ostringstream elbow_out;
        elbow_out << "k,wcss\n";
        for (std::size_t i = 0; i < elbow.k_values.size(); ++i)
            elbow_out << elbow.k_values[i] << ',' << fmt(elbow.wcss[i]) << '\n';
        write_text(cfg.out_dir + "/elbow.csv", elbow_out.str());
    }

    if (k >= 2) {
        const SilhouetteReport sil = silhouette(z, km.labels);
        std::ostringstream sil_out;
        sil_out << "row,sequence_id,silhouette\n";
        for (std::size_t i = 0; i < ds.size(); ++i)
            sil_out << i << ',' << ds.records[i].sequence_id << ',' << fmt(sil.values[i]) << '\n';
        write_text(cfg.out_dir + "/silhouette.csv", sil_out.str());
        std::printf("mean silhouette: %s\n", fmt_short(sil.mean).c_str());
    }
    return 0;
}

std::vector<std::size_t> read_labels(const std::string& path, const QualityDataset& ds) {
    const std::vector<std::string> lines = read_lines(path);
    if (lines.empty()) throw SchemaMismatch(path + ": empty file");
    if (trim(lines[0]) != "row,sequence_id,cluster")
        throw SchemaMismatch(path + ": expected header 'row,sequence_id,cluster'");
    std::vector<std::size_t> labels;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const std::vector<std::string> cells = split_cells(lines[i]);
        if (cells.size() != 3)
            throw ParseError(path + ", row " + std::to_string(i) + ": expected 3 fields");
        const std::size_t row = labels.size();
        if (static_cast<std::size_t>(parse_int_cell(cells[0], i, "row")) != row)
            throw ParseError(path + ", row " + std::to_string(i) + ": row index out of order");
        if (row >= ds.size())
            throw DimensionMismatch(path + ": more labels than table rows");
        if (cells[1] != ds.records[row].sequence_id)
            throw SchemaMismatch(path + ", row " + std::to_string(i) +
                                 ": sequence_id does not match the table");
        const int cluster = parse_int_cell(cells[2], i, "cluster");
        if (cluster < 0) throw ParseError(path + ": negative cluster id");
        labels.push_back(static_cast<std::size_t>(cluster));
    }
    if (labels.size() != ds.size())
        throw DimensionMismatch(path + ": " + std::to_string(labels.size()) + " labels for " +
                                std::to_string(ds.size()) + " table rows");
    return labels;
}

int cmd_evaluate(const PipelineConfig& cfg, const std::string& input, const std::string& labels_path,
                 const std::vector<std::string>& format_names) {
    require_seed(cfg);
    if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0))
        throw ConfigError("test fraction must lie strictly between 0 and 1");

    std::vector<std::string> warnings;
    QualityDataset ds = load_csv(input, &warnings);
    for (const std::string& w : warnings) std::fprintf(stderr, "chromaq: %s\n", w.c_str());
    std::size_t removed = 0;
    ds = drop_nulls(ds, &removed);
    if (removed > 0)
        std::fprintf(stderr, "chromaq: dropped %zu incomplete row(s)\n", removed);

    const std::vector<std::size_t> labels = read_labels(labels_path, ds);
    const std::size_t n_clusters = 1 + *std::max_element(labels.begin(), labels.end());

    // Deterministic index split: shuffled row indices, first ceil(n * f) to test.
    const std::size_t n = ds.size();
    std::size_t test_n = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * cfg.test_fraction));
    if (test_n == 0) test_n = 1;
    if (test_n >= n) throw TooFewSamples("split leaves no training rows");
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng(derive_seed(cfg.seed, "split")).shuffle(perm);
    std::vector<std::size_t> test_rows(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(test_n));
    std::vector<std::size_t> train_rows(perm.begin() + static_cast<std::ptrdiff_t>(test_n), perm.end());
    std::sort(test_rows.begin(), test_rows.end());
    std::sort(train_rows.begin(), train_rows.end());

    const FeatureBlock fb = feature_matrix(ds, FeatureSet::regression);
    const ScaleResult std_train = standardize(rows_of(fb.x, train_rows));
    const ScaleResult norm_train = normalize(std_train.matrix);
    const ScaleResult std_test = standardize(rows_of(fb.x, test_rows), &std_train.params);
    const ScaleResult norm_test = normalize(std_test.matrix, &norm_train.params);
    const std::vector<double> y_train = values_of(fb.target, train_rows);
    const std::vector<double> y_test = values_of(fb.target, test_rows);

    PipelineResult result;
    EvaluationReport& report = result.report;
    report.dataset = ds.name;
    report.n_rows = n;
    report.train_rows = train_rows.size();
    report.test_rows = test_rows.size();
    report.selected_k = n_clusters;
    report.model_family = to_string(cfg.model_family);
    report.folds = cfg.folds;
    report.seed = cfg.seed;
    report.config_fingerprint = cfg.fingerprint;
    report.warnings.push_back("silhouette and elbow are not computed by evaluate");

    const ParamGrid grid =
        cfg.grid.params.empty() ? default_grid(cfg.model_family) : cfg.grid;
    const std::size_t min_rows = std::max<std::size_t>(10, cfg.folds);
    std::vector<double> pooled_truth;
    std::vector<double> pooled_pred;
    for (std::size_t c = 0; c < n_clusters; ++c) {
        ClusterReport cluster;
        cluster.cluster = c;
        std::vector<std::size_t> tr;
        for (std::size_t i = 0; i < train_rows.size(); ++i)
            if (labels[train_rows[i]] == c) tr.push_back(i);
        std::vector<std::size_t> te;
        for (std::size_t i = 0; i < test_rows.size(); ++i)
            if (labels[test_rows[i]] == c) te.push_back(i);
        cluster.train_size = tr.size();
        cluster.test_size = te.size();

        if (tr.size() < min_rows) {
            cluster.note = "insufficient data: " + std::to_string(tr.size()) +
                           " training rows (minimum " + std::to_string(min_rows) + ")";
        } else if (te.empty()) {
            cluster.note = "insufficient data: no test rows";
        } else {
            try {
                GridSearchResult search =
                    grid_search(cfg.model_family, grid, rows_of(norm_train.matrix, tr),
                                values_of(y_train, tr), cfg.folds, derive_seed(cfg.seed, "grid", c));
                const std::vector<double> pred_tr = search.model->predict(rows_of(norm_train.matrix, tr));
                const std::vector<double> pred_te = search.model->predict(rows_of(norm_test.matrix, te));
                const std::vector<double> truth_tr = values_of(y_train, tr);
                const std::vector<double> truth_te = values_of(y_test, te);
                cluster.train_metrics = {rmse(truth_tr, pred_tr), r_squared(truth_tr, pred_tr)};
                cluster.test_metrics = {rmse(truth_te, pred_te), r_squared(truth_te, pred_te)};
                cluster.best_params = search.best_params;
                cluster.convergence_warning = search.model->convergence_warning();
                cluster.cv_table = std::move(search.table);
                cluster.modeled = true;
                pooled_truth.insert(pooled_truth.end(), truth_tr.begin(), truth_tr.end());
                pooled_pred.insert(pooled_pred.end(), pred_tr.begin(), pred_tr.end());
            } catch (const std::exception& error) {
                cluster.note = std::string("insufficient data: ") + error.what();
            }
        }
        if (!cluster.modeled)
            report.warnings.push_back("cluster " + std::to_string(c) + " was not modeled (" +
                                      cluster.note + ")");
        report.clusters.push_back(std::move(cluster));
    }
    if (!pooled_truth.empty()) {
        report.global_train.rmse = rmse(pooled_truth, pooled_pred);
        report.global_train.r2 = r_squared(pooled_truth, pooled_pred);
    } else {
        report.warnings.push_back("no cluster was modeled; global metrics omitted");
    }

    result.data = ds;
    result.data.records.clear();
    result.labels.clear();
    for (std::size_t i : train_rows) {
        result.data.records.push_back(ds.records[i]);
        result.labels.push_back(labels[i]);
    }
    for (std::size_t i : test_rows) {
        result.data.records.push_back(ds.records[i]);
        result.labels.push_back(labels[i]);
    }
    for (ClusterReport& cluster : report.clusters)
        cluster.stats = cluster_stats(result.data, result.labels, cluster.cluster);
    const std::vector<std::size_t> everything(result.data.size(), 0);
    report.dataset_stats = cluster_stats(result.data, everything, 0);
    result.feedback = rank_clusters(report);

    const std::vector<ReportFormat> formats = to_formats(format_names, {ReportFormat::csv});
    for (const std::string& path : emit_report(result, cfg.out_dir, formats))
        std::printf("wrote %s\n", path.c_str());

    for (const ClusterReport& cluster : report.clusters) {
        if (cluster.modeled)
            std::printf("cluster %zu: train %zu, test %zu, test rmse %s, test r2 %s\n",
                        cluster.cluster, cluster.train_size, cluster.test_size,
                        fmt_short(cluster.test_metrics.rmse).c_str(),
                        fmt_short(cluster.test_metrics.r2).c_str());
        else
            std::printf("cluster %zu: train %zu, test %zu, not modeled (%s)\n", cluster.cluster,
                        cluster.train_size, cluster.test_size, cluster.note.c_str());
    }
    return 0;
}

int cmd_run(const PipelineConfig& cfg, const std::vector<std::string>& format_names) {
    const PipelineResult result = run_pipeline(cfg);
    const EvaluationReport& report = result.report;

    const std::vector<ReportFormat> formats = to_formats(
        format_names, {ReportFormat::json, ReportFormat::csv, ReportFormat::markdown});
    const std::vector<std::string> written = emit_report(result, cfg.out_dir, formats);

    std::printf("dataset: %s (%zu rows; %zu train / %zu test)\n", report.dataset.c_str(),
                report.n_rows, report.train_rows, report.test_rows);
    std::printf("selected k: %zu (%s), mean silhouette %s\n", report.selected_k,
                report.k_overridden ? "override" : "elbow",
                fmt_short(report.silhouette_mean).c_str());
    for (const ClusterReport& cluster : report.clusters) {
        if (cluster.modeled)
            std::printf("cluster %zu: train %zu, test %zu, test rmse %s, test r2 %s\n",
                        cluster.cluster, cluster.train_size, cluster.test_size,
                        fmt_short(cluster.test_metrics.rmse).c_str(),
                        fmt_short(cluster.test_metrics.r2).c_str());
        else
            std::printf("cluster %zu: train %zu, test %zu, not modeled (%s)\n", cluster.cluster,
                        cluster.train_size, cluster.test_size, cluster.note.c_str());
    }
    if (!result.feedback.ranking.empty()) {
        const FeedbackEntry& top = result.feedback.ranking[0];
        std::string traits;
        for (const std::string& ch : top.characteristics) {
            if (!traits.empty()) traits += "; ";
            traits += ch;
        }
        std::printf("top cluster: %zu%s%s\n", top.cluster, traits.empty() ? "" : " - ",
                    traits.c_str());
    }
    for (const std::string& w : report.warnings)
        std::fprintf(stderr, "chromaq: warning: %s\n", w.c_str());
    for (const std::string& path : written) std::printf("wrote %s\n", path.c_str());
    return 0;
}

int cmd_report(const PipelineConfig& cfg, std::string input,
               const std::vector<std::string>& format_names) {
    if (input.empty()) input = cfg.out_dir + "/report.json";
    std::ifstream in(input, std::ios::binary);
    if (!in) throw IoError("cannot open " + input);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const PipelineResult result = report_from_json(buffer.str());
    const std::vector<ReportFormat> formats =
        to_formats(format_names, {ReportFormat::csv, ReportFormat::markdown});
    for (const std::string& path : emit_report(result, cfg.out_dir, formats))
        std::printf("wrote %s\n", path.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"quality-centric evaluation of chromatographic data"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    std::vector<std::string> format_names;
    app.add_option("--config", config_path, "Pipeline configuration file");
    CLI::Option* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the config)");
    CLI::Option* out_opt = app.add_option("--out", out_dir, "Output directory")
                               ->capture_default_str();
    app.add_option("--format", format_names, "Report formats (json, csv, md)")
        ->check(CLI::IsMember({"json", "csv", "md"}))
        ->delimiter(',');

    CLI::App* synth = app.add_subcommand(
        "synth", "Generate a synthetic chromatogram or tiered dataset from the config");
    synth->fallthrough();

    CLI::App* peaks =
        app.add_subcommand("peaks", "Measure the dominant peak of chromatogram CSVs");
    peaks->fallthrough();
    std::vector<std::string> peak_inputs;
    std::optional<double> window_begin;
    std::optional<double> window_end;
    peaks->add_option("inputs", peak_inputs, "Chromatogram CSV files (time_s,intensity)")
        ->required()
        ->check(CLI::ExistingFile);
    peaks->add_option("--window-begin", window_begin, "Search window start, seconds");
    peaks->add_option("--window-end", window_end, "Search window end, seconds");

    CLI::App* build_table = app.add_subcommand(
        "build-table", "Pair replicate peak measurements into a quality dataset CSV");
    build_table->fallthrough();
    std::string table_input;
    build_table->add_option("--input", table_input, "Per-run peak metrics CSV")
        ->required()
        ->check(CLI::ExistingFile);

    CLI::App* cluster =
        app.add_subcommand("cluster", "Cluster a quality dataset and export labels");
    cluster->fallthrough();
    std::string cluster_input;
    cluster->add_option("--input", cluster_input, "Quality dataset CSV")
        ->required()
        ->check(CLI::ExistingFile);

    CLI::App* evaluate = app.add_subcommand(
        "evaluate", "Grid-search and evaluate per-cluster models for given labels");
    evaluate->fallthrough();
    std::string evaluate_input;
    std::string labels_input;
    evaluate->add_option("--input", evaluate_input, "Quality dataset CSV")
        ->required()
        ->check(CLI::ExistingFile);
    evaluate->add_option("--labels", labels_input, "Cluster labels CSV from `cluster`")
        ->required()
        ->check(CLI::ExistingFile);

    CLI::App* run = app.add_subcommand("run", "Run the full evaluation pipeline");
    run->fallthrough();

    CLI::App* report = app.add_subcommand("report", "Re-render a stored report.json");
    report->fallthrough();
    std::string report_input;
    report->add_option("--input", report_input, "Stored report (default: <out>/report.json)");

    CLI11_PARSE(app, argc, argv);

    try {
        PipelineConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        if (seed_opt->count() > 0) {
            cfg.seed = seed;
            cfg.seed_set = true;
        }
        if (out_opt->count() > 0 || cfg.out_dir.empty()) cfg.out_dir = out_dir;

        if (*synth) return cmd_synth(cfg);
        if (*peaks) return cmd_peaks(cfg, peak_inputs, window_begin, window_end);
        if (*build_table) return cmd_build_table(cfg, table_input);
        if (*cluster) return cmd_cluster(cfg, cluster_input);
        if (*evaluate) return cmd_evaluate(cfg, evaluate_input, labels_input, format_names);
        if (*run) return cmd_run(cfg, format_names);
        if (*report) return cmd_report(cfg, report_input, format_names);
    } catch (const std::exception& error) {
        std::fprintf(stderr, "chromaq: error: %s\n", error.what());
        return 1;
    }
    return 0;
}
