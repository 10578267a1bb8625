#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "chromaq/errors.hpp"
#include "chromaq/pipeline.hpp"

namespace chromaq {

namespace {

using nlohmann::json;

std::string fmt_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

json stats_to_json(const ClusterStats& stats) {
    json features = json::array();
    for (std::size_t f = 0; f < stats.feature_names.size(); ++f) {
        const FeatureStats& s = stats.features[f];
        json item;
        item["name"] = stats.feature_names[f];
        item["applicable"] = s.applicable;
        if (s.applicable) {
            item["mean"] = s.mean;
            item["std"] = s.stddev;
            item["min"] = s.min;
            item["q25"] = s.q25;
            item["median"] = s.median;
            item["q75"] = s.q75;
            item["max"] = s.max;
            item["degenerate"] = s.degenerate;
        }
        features.push_back(std::move(item));
    }
    return json{{"size", stats.size}, {"features", std::move(features)}};
}

ClusterStats stats_from_json(const json& j) {
    ClusterStats stats;
    stats.size = j.at("size").get<std::size_t>();
    for (const json& item : j.at("features")) {
        stats.feature_names.push_back(item.at("name").get<std::string>());
        FeatureStats s;
        s.applicable = item.at("applicable").get<bool>();
        if (s.applicable) {
            s.mean = item.at("mean").get<double>();
            s.stddev = item.at("std").get<double>();
            s.min = item.at("min").get<double>();
            s.q25 = item.at("q25").get<double>();
            s.median = item.at("median").get<double>();
            s.q75 = item.at("q75").get<double>();
            s.max = item.at("max").get<double>();
            s.degenerate = item.at("degenerate").get<bool>();
        }
        stats.features.push_back(s);
    }
    return stats;
}

json metrics_to_json(const MetricPair& m) { return json{{"rmse", m.rmse}, {"r2", m.r2}}; }

MetricPair metrics_from_json(const json& j) {
    return {j.at("rmse").get<double>(), j.at("r2").get<double>()};
}

} // namespace

std::string report_to_json(const PipelineResult& result) {
    const EvaluationReport& r = result.report;
    json clusters = json::array();
    for (const ClusterReport& c : r.clusters) {
        json item;
        item["cluster"] = c.cluster;
        item["train_size"] = c.train_size;
        item["test_size"] = c.test_size;
        item["modeled"] = c.modeled;
        item["note"] = c.note;
        item["stats"] = stats_to_json(c.stats);
        if (c.modeled) {
            item["best_params"] = json(c.best_params);
            item["train_metrics"] = metrics_to_json(c.train_metrics);
            item["test_metrics"] = metrics_to_json(c.test_metrics);
            item["convergence_warning"] = c.convergence_warning;
        }
        clusters.push_back(std::move(item));
    }

    json report;
    report["dataset"] = r.dataset;
    report["n_rows"] = r.n_rows;
    report["train_rows"] = r.train_rows;
    report["test_rows"] = r.test_rows;
    report["pca_components"] = r.pca_components;
    report["variance_ratios"] = r.variance_ratios;
    report["selected_k"] = r.selected_k;
    report["k_overridden"] = r.k_overridden;
    report["elbow"] = json{{"k_values", r.elbow.k_values},
                           {"wcss", r.elbow.wcss},
                           {"selected_k", r.elbow.selected_k},
                           {"low_curvature", r.elbow.low_curvature},
                           {"degenerate", r.elbow.degenerate}};
    report["silhouette_mean"] = r.silhouette_mean;
    report["model_family"] = r.model_family;
    report["folds"] = r.folds;
    report["clusters"] = std::move(clusters);
    report["global_train"] = metrics_to_json(r.global_train);
    report["dataset_stats"] = stats_to_json(r.dataset_stats);
    report["warnings"] = r.warnings;
    report["seed"] = r.seed;
    report["config_fingerprint"] = r.config_fingerprint;

    json ranking = json::array();
    for (const FeedbackEntry& entry : result.feedback.ranking) {
        json item;
        item["cluster"] = entry.cluster;
        item["has_metrics"] = entry.has_metrics;
        if (entry.has_metrics) item["r2_test"] = entry.r2_test;
        item["characteristics"] = entry.characteristics;
        ranking.push_back(std::move(item));
    }

    const json doc{{"report", std::move(report)},
                   {"feedback", json{{"ranking", std::move(ranking)}}}};
    return doc.dump(2) + "\n";
}

PipelineResult report_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& error) {
        throw ParseError(std::string("report JSON: ") + error.what());
    }

    PipelineResult result;
    try {
        const json& report = doc.at("report");
        EvaluationReport& r = result.report;
        r.dataset = report.at("dataset").get<std::string>();
        r.n_rows = report.at("n_rows").get<std::size_t>();
        r.train_rows = report.at("train_rows").get<std::size_t>();
        r.test_rows = report.at("test_rows").get<std::size_t>();
        r.pca_components = report.at("pca_components").get<std::size_t>();
        r.variance_ratios = report.at("variance_ratios").get<std::vector<double>>();
        r.selected_k = report.at("selected_k").get<std::size_t>();
        r.k_overridden = report.at("k_overridden").get<bool>();
        const json& elbow = report.at("elbow");
        r.elbow.k_values = elbow.at("k_values").get<std::vector<std::size_t>>();
        r.elbow.wcss = elbow.at("wcss").get<std::vector<double>>();
        r.elbow.selected_k = elbow.at("selected_k").get<std::size_t>();
        r.elbow.low_curvature = elbow.at("low_curvature").get<bool>();
        r.elbow.degenerate = elbow.at("degenerate").get<bool>();
        r.silhouette_mean = report.at("silhouette_mean").get<double>();
        r.model_family = report.at("model_family").get<std::string>();
        r.folds = report.at("folds").get<std::size_t>();
        for (const json& item : report.at("clusters")) {
            ClusterReport c;
            c.cluster = item.at("cluster").get<std::size_t>();
            c.train_size = item.at("train_size").get<std::size_t>();
            c.test_size = item.at("test_size").get<std::size_t>();
            c.modeled = item.at("modeled").get<bool>();
            c.note = item.at("note").get<std::string>();
            c.stats = stats_from_json(item.at("stats"));
            if (c.modeled) {
                c.best_params = item.at("best_params").get<ParamMap>();
                c.train_metrics = metrics_from_json(item.at("train_metrics"));
                c.test_metrics = metrics_from_json(item.at("test_metrics"));
                c.convergence_warning = item.at("convergence_warning").get<bool>();
            }
            r.clusters.push_back(std::move(c));
        }
        r.global_train = metrics_from_json(report.at("global_train"));
        r.dataset_stats = stats_from_json(report.at("dataset_stats"));
        r.warnings = report.at("warnings").get<std::vector<std::string>>();
        r.seed = report.at("seed").get<std::uint64_t>();
        r.config_fingerprint = report.at("config_fingerprint").get<std::string>();

        for (const json& item : doc.at("feedback").at("ranking")) {
            FeedbackEntry entry;
            entry.cluster = item.at("cluster").get<std::size_t>();
            entry.has_metrics = item.at("has_metrics").get<bool>();
            if (entry.has_metrics) entry.r2_test = item.at("r2_test").get<double>();
            entry.characteristics =
                item.at("characteristics").get<std::vector<std::string>>();
            result.feedback.ranking.push_back(std::move(entry));
        }
    } catch (const json::exception& error) {
        throw ParseError(std::string("report JSON: ") + error.what());
    }
    return result;
}

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << content;
    if (!out) throw IoError("write failed for " + path);
}

std::string metrics_csv(const EvaluationReport& report) {
    std::ostringstream out;
    out << "cluster,rmse_test,r2_test\n";
    for (const ClusterReport& c : report.clusters) {
        out << c.cluster << ',';
        if (c.modeled)
            out << fmt_full(c.test_metrics.rmse) << ',' << fmt_full(c.test_metrics.r2);
        else
            out << ',';
        out << '\n';
    }
    return out.str();
}

std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string quoted = "\"";
    for (char ch : field) {
        if (ch == '"') quoted += '"';
        quoted += ch;
    }
    quoted += '"';
    return quoted;
}

std::string cv_table_csv(const ClusterReport& cluster) {
    std::vector<std::string> params;
    for (const GridSearchRow& row : cluster.cv_table) {
        for (const auto& [name, value] : row.params)
            if (std::find(params.begin(), params.end(), name) == params.end())
                params.push_back(name);
        break;
    }

    std::ostringstream out;
    out << "combination";
    for (const std::string& p : params) out << ',' << p;
    out << ",fold,rmse\n";
    for (const GridSearchRow& row : cluster.cv_table) {
        std::string prefix = std::to_string(row.index);
        for (const std::string& p : params) {
            prefix += ',';
            const auto it = row.params.find(p);
            if (it != row.params.end()) prefix += fmt_full(it->second);
        }
        if (row.failed) {
            out << prefix << ",failed," << csv_quote(row.message) << '\n';
            continue;
        }
        for (std::size_t f = 0; f < row.fold_rmse.size(); ++f)
            out << prefix << ',' << f << ',' << fmt_full(row.fold_rmse[f]) << '\n';
        out << prefix << ",mean," << fmt_full(row.mean_rmse) << '\n';
    }
    return out.str();
}

void stats_table(std::ostringstream& out, const ClusterStats& stats) {
    out << "| statistic |";
    for (const std::string& name : stats.feature_names) out << ' ' << name << " |";
    out << "\n|---|";
    for (std::size_t f = 0; f < stats.feature_names.size(); ++f) out << "---|";
    out << '\n';

    const char* row_names[] = {"mean", "std", "min", "25%", "median", "75%", "max"};
    for (std::size_t row = 0; row < 7; ++row) {
        out << "| " << row_names[row] << " |";
        for (const FeatureStats& s : stats.features) {
            if (!s.applicable) {
                out << " - |";
                continue;
            }
            const double values[] = {s.mean, s.stddev, s.min, s.q25, s.median, s.q75,
                                     s.max};
            out << ' ' << fmt_short(values[row]) << " |";
        }
        out << '\n';
    }
}

std::string markdown_report(const PipelineResult& result) {
    const EvaluationReport& r = result.report;
    std::ostringstream out;
    out << "# Quality evaluation report: " << r.dataset << "\n\n";
    out << "- rows: " << r.n_rows << " (train " << r.train_rows << ", test "
        << r.test_rows << ")\n";
    if (r.pca_components > 0) {
        double captured = 0.0;
        for (double v : r.variance_ratios) captured += v;
        out << "- clustering space: " << r.pca_components
            << " principal components (variance captured " << fmt_short(captured)
            << ")\n";
    } else {
        out << "- clustering space: scaled features\n";
    }
    out << "- selected k: " << r.selected_k
        << (r.k_overridden ? " (override)" : " (elbow)") << '\n';
    out << "- mean silhouette: " << fmt_short(r.silhouette_mean) << '\n';
    out << "- model family: " << r.model_family << ", " << r.folds << "-fold CV\n";
    out << "- seed: " << r.seed << '\n';
    if (!r.config_fingerprint.empty())
        out << "- config fingerprint: " << r.config_fingerprint << '\n';
    out << '\n';

    out << "## Cluster metrics\n\n";
    out << "| cluster | size | rmse_train | r2_train | rmse_test | r2_test | note |\n";
    out << "|---|---|---|---|---|---|---|\n";
    for (const ClusterReport& c : r.clusters) {
        out << "| " << c.cluster << " | " << (c.train_size + c.test_size) << " | ";
        if (c.modeled) {
            out << fmt_short(c.train_metrics.rmse) << " | "
                << fmt_short(c.train_metrics.r2) << " | "
                << fmt_short(c.test_metrics.rmse) << " | "
                << fmt_short(c.test_metrics.r2) << " | ";
            out << (c.convergence_warning ? "convergence warning" : "") << " |\n";
        } else {
            out << "- | - | - | - | " << c.note << " |\n";
        }
    }
    out << "\nGlobal train metrics over modeled clusters: rmse "
        << fmt_short(r.global_train.rmse) << ", r2 " << fmt_short(r.global_train.r2)
        << "\n\n";

    for (const ClusterReport& c : r.clusters) {
        out << "## Cluster " << c.cluster << " statistics (" << c.stats.size
            << " rows)\n\n";
        stats_table(out, c.stats);
        out << '\n';
    }

    out << "## Dataset statistics (" << r.dataset_stats.size << " rows)\n\n";
    stats_table(out, r.dataset_stats);
    out << '\n';

    out << "## Cluster ranking\n\n";
    std::size_t place = 1;
    for (const FeedbackEntry& entry : result.feedback.ranking) {
        out << place++ << ". cluster " << entry.cluster;
        if (entry.has_metrics)
            out << " (r2 test " << fmt_short(entry.r2_test) << ")";
        else
            out << " (not modeled)";
        if (!entry.characteristics.empty()) {
            out << ": ";
            for (std::size_t i = 0; i < entry.characteristics.size(); ++i) {
                if (i > 0) out << "; ";
                out << entry.characteristics[i];
            }
        }
        out << '\n';
    }
    if (!r.warnings.empty()) {
        out << "\n## Warnings\n\n";
        for (const std::string& w : r.warnings) out << "- " << w << '\n';
    }
    return out.str();
}

} // namespace

std::vector<std::string> emit_report(const PipelineResult& result, const std::string& out_dir,
                                     const std::vector<ReportFormat>& formats) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir);

    std::vector<std::string> written;
    for (const ReportFormat format : formats) {
        if (format == ReportFormat::json) {
            const std::string path = out_dir + "/report.json";
            write_file(path, report_to_json(result));
            written.push_back(path);
        } else if (format == ReportFormat::csv) {
            const std::string path = out_dir + "/metrics.csv";
            write_file(path, metrics_csv(result.report));
            written.push_back(path);
            for (const ClusterReport& c : result.report.clusters) {
                if (c.cv_table.empty()) continue;
                const std::string cv_path =
                    out_dir + "/cv_cluster" + std::to_string(c.cluster) + ".csv";
                write_file(cv_path, cv_table_csv(c));
                written.push_back(cv_path);
            }
        } else {
            const std::string path = out_dir + "/report.md";
            write_file(path, markdown_report(result));
            written.push_back(path);
        }
    }
    return written;
}

} // namespace chromaq
