#include "chromaq/tabular.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "chromaq/errors.hpp"
#include "chromaq/rng.hpp"

namespace chromaq {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

bool is_null_marker(const std::string& s) { return s.empty() || s == "NA" || s == "-"; }

double parse_double(const std::string& raw, std::size_t row, std::string_view col) {
    const std::string s = trim(raw);
    double value = 0.0;
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, value);
    if (res.ec != std::errc{} || res.ptr != end || !std::isfinite(value)) {
        throw ParseError("row " + std::to_string(row) + ", column " + std::string(col) +
                         ": cannot parse '" + s + "' as a number");
    }
    return value;
}

int parse_int(const std::string& raw, std::size_t row, std::string_view col) {
    const std::string s = trim(raw);
    int value = 0;
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, value);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw ParseError("row " + std::to_string(row) + ", column " + std::string(col) +
                         ": cannot parse '" + s + "' as an integer");
    }
    return value;
}

void check_record(const QualityRecord& r, std::size_t row) {
    auto fail = [&](std::string_view col, const std::string& why) {
        throw ParseError("row " + std::to_string(row) + ", column " + std::string(col) +
                         ": " + why);
    };
    if (r.snr && !(*r.snr > 0.0)) fail("snr", "must be positive");
    if (r.skewness && !(*r.skewness > 0.0)) fail("skewness", "must be positive");
    if (r.peak_area && *r.peak_area < 0.0) fail("peak_area", "must be non-negative");
    if (r.length && *r.length < 1) fail("length", "must be at least 1");
    if (r.sulfur_count && *r.sulfur_count < 0) fail("sulfur_count", "must be non-negative");
    if (r.sulfur_count && r.length && *r.sulfur_count > *r.length - 1) {
        fail("sulfur_count", "exceeds the " + std::to_string(*r.length - 1) +
                                 " linkages available for this length");
    }
    if (r.retention_time && !(*r.retention_time > 0.0)) fail("retention_time", "must be positive");
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

bool QualityRecord::complete() const {
    return delta_tr && snr && skewness && peak_area && length && sulfur_count &&
           retention_time;
}

std::string matrix_fingerprint(const Matrix& m) {
    std::uint64_t h = fnv1a64("matrix");
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h = (h ^ ((v >> (8 * b)) & 0xffu)) * 1099511628211ull;
        }
    };
    mix(m.rows());
    mix(m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            std::uint64_t bits = 0;
            const double v = m(r, c);
            static_assert(sizeof(bits) == sizeof(v));
            __builtin_memcpy(&bits, &v, sizeof(bits));
            mix(bits);
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

QualityDataset load_csv(const std::string& path, std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw SchemaMismatch("'" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_csv_line(line);
    std::vector<int> schema_to_file(kCsvColumns.size(), -1);
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string name = trim(header[i]);
        bool known = false;
        for (std::size_t j = 0; j < kCsvColumns.size(); ++j) {
            if (name == kCsvColumns[j]) {
                schema_to_file[j] = static_cast<int>(i);
                known = true;
                break;
            }
        }
        if (!known && warnings) {
            warnings->push_back("ignoring unknown column '" + name + "'");
        }
    }
    for (std::size_t j = 0; j < kCsvColumns.size(); ++j) {
        if (schema_to_file[j] < 0) {
            throw SchemaMismatch("'" + path + "' is missing required column '" +
                                 std::string(kCsvColumns[j]) + "'");
        }
    }

    QualityDataset ds;
    ds.name = std::filesystem::path(path).stem().string();
    ds.feature_names.assign(kFeatureNames.begin(), kFeatureNames.end());

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++row;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() < header.size()) {
            throw ParseError("row " + std::to_string(row) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        }
        auto cell = [&](std::size_t schema_idx) {
            return trim(fields[static_cast<std::size_t>(schema_to_file[schema_idx])]);
        };
        QualityRecord r;
        r.sequence_id = cell(0);
        auto opt_d = [&](std::size_t idx) -> std::optional<double> {
            const std::string s = cell(idx);
            if (is_null_marker(s)) return std::nullopt;
            return parse_double(s, row, kCsvColumns[idx]);
        };
        auto opt_i = [&](std::size_t idx) -> std::optional<int> {
            const std::string s = cell(idx);
            if (is_null_marker(s)) return std::nullopt;
            return parse_int(s, row, kCsvColumns[idx]);
        };
        r.delta_tr = opt_d(1);
        r.snr = opt_d(2);
        r.skewness = opt_d(3);
        r.peak_area = opt_d(4);
        r.length = opt_i(5);
        r.sulfur_count = opt_i(6);
        r.injection_volume = opt_d(7);
        r.retention_time = opt_d(8);
        check_record(r, row);
        ds.records.push_back(std::move(r));
    }
    return ds;
}

void save_csv(const QualityDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (std::size_t j = 0; j < kCsvColumns.size(); ++j) {
        out << kCsvColumns[j] << (j + 1 < kCsvColumns.size() ? "," : "\n");
    }
    for (const auto& r : ds.records) {
        out << r.sequence_id << ',';
        auto put_d = [&](const std::optional<double>& v, char sep) {
            if (v) out << format_double(*v);
            out << sep;
        };
        put_d(r.delta_tr, ',');
        put_d(r.snr, ',');
        put_d(r.skewness, ',');
        put_d(r.peak_area, ',');
        if (r.length) out << *r.length;
        out << ',';
        if (r.sulfur_count) out << *r.sulfur_count;
        out << ',';
        put_d(r.injection_volume, ',');
        put_d(r.retention_time, '\n');
    }
    if (!out) throw IoError("failed while writing '" + path + "'");
}

QualityDataset drop_nulls(const QualityDataset& ds, std::size_t* removed) {
    QualityDataset out;
    out.name = ds.name;
    out.feature_names = ds.feature_names;
    for (const auto& r : ds.records) {
        if (r.complete()) out.records.push_back(r);
    }
    if (removed) *removed = ds.records.size() - out.records.size();
    if (out.records.empty()) {
        throw EmptyDataset("'" + ds.name + "': no complete records after null filtering");
    }
    return out;
}

ScaleResult standardize(const Matrix& m, const ScalingParams* params) {
    if (m.rows() == 0 || m.cols() == 0) throw EmptyDataset("standardize: empty matrix");
    ScaleResult out{Matrix(m.rows(), m.cols()), {}, false};
    if (params) {
        if (params->mean.size() != m.cols() || params->stddev.size() != m.cols()) {
            throw DimensionMismatch("standardize: params fitted on a different width");
        }
        out.params = *params;
    } else {
        auto& p = out.params;
        p.mean.resize(m.cols());
        p.stddev.resize(m.cols());
        const double n = static_cast<double>(m.rows());
        for (std::size_t c = 0; c < m.cols(); ++c) {
            double sum = 0.0;
            for (std::size_t r = 0; r < m.rows(); ++r) sum += m(r, c);
            const double mean = sum / n;
            double sq = 0.0;
            for (std::size_t r = 0; r < m.rows(); ++r) {
                const double d = m(r, c) - mean;
                sq += d * d;
            }
            const double sd = std::sqrt(sq / n); // population std: variance lands on 1
            if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
                throw ZeroVarianceFeature("standardize: column " + std::to_string(c) +
                                          " has zero variance");
            }
            p.mean[c] = mean;
            p.stddev[c] = sd;
        }
        p.fitted_on = matrix_fingerprint(m);
    }
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            out.matrix(r, c) = (m(r, c) - out.params.mean[c]) / out.params.stddev[c];
        }
    }
    return out;
}

ScaleResult normalize(const Matrix& m, const ScalingParams* params) {
    if (m.rows() == 0 || m.cols() == 0) throw EmptyDataset("normalize: empty matrix");
    ScaleResult out{Matrix(m.rows(), m.cols()), {}, false};
    if (params) {
        if (params->min.size() != m.cols() || params->max.size() != m.cols()) {
            throw DimensionMismatch("normalize: params fitted on a different width");
        }
        out.params = *params;
    } else {
        auto& p = out.params;
        p.min.resize(m.cols());
        p.max.resize(m.cols());
        for (std::size_t c = 0; c < m.cols(); ++c) {
            double lo = m(0, c), hi = m(0, c);
            for (std::size_t r = 1; r < m.rows(); ++r) {
                lo = std::min(lo, m(r, c));
                hi = std::max(hi, m(r, c));
            }
            if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) {
                throw DegenerateRange("normalize: column " + std::to_string(c) +
                                      " has a degenerate range");
            }
            p.min[c] = lo;
            p.max[c] = hi;
        }
        p.fitted_on = matrix_fingerprint(m);
    }
    const bool applying = params != nullptr;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            double v = (m(r, c) - out.params.min[c]) /
                       (out.params.max[c] - out.params.min[c]);
            if (applying && (v < 0.0 || v > 1.0)) {
                v = std::clamp(v, 0.0, 1.0);
                out.clamped = true;
            }
            out.matrix(r, c) = v;
        }
    }
    return out;
}

std::pair<QualityDataset, QualityDataset>
split_train_test(const QualityDataset& ds, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw Error("split_train_test: test_fraction must lie in (0, 1)");
    }
    const std::size_t n = ds.size();
    if (n == 0) throw EmptyDataset("split_train_test: empty dataset");

    const double raw = test_fraction * static_cast<double>(n);
    const double rounded = std::round(raw);
    // ceil(n * f), robust to representation error in f (865 * 0.2 is 173).
    const std::size_t n_test =
        std::abs(raw - rounded) < 1e-9 * std::max(1.0, raw)
            ? static_cast<std::size_t>(rounded)
            : static_cast<std::size_t>(std::ceil(raw));

    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    rng.shuffle(idx);

    std::vector<bool> in_test(n, false);
    for (std::size_t i = 0; i < n_test; ++i) in_test[idx[i]] = true;

    QualityDataset train, test;
    train.name = ds.name;
    test.name = ds.name;
    train.feature_names = ds.feature_names;
    test.feature_names = ds.feature_names;
    for (std::size_t i = 0; i < n; ++i) {
        (in_test[i] ? test : train).records.push_back(ds.records[i]);
    }
    return {std::move(train), std::move(test)};
}

FeatureBlock feature_matrix(const QualityDataset& ds, FeatureSet set) {
    (void)set; // clustering and regression share the same six features
    std::vector<std::string> cols(kFeatureNames.begin(), kFeatureNames.end());
    return feature_matrix(ds, cols);
}

FeatureBlock feature_matrix(const QualityDataset& ds,
                            const std::vector<std::string>& columns) {
    if (columns.empty()) throw MissingFeature("feature_matrix: no features requested");
    if (ds.records.empty()) throw EmptyDataset("feature_matrix: empty dataset");

    FeatureBlock out;
    out.columns = columns;
    out.x = Matrix(ds.size(), columns.size());
    out.target.resize(ds.size());

    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& r = ds.records[i];
        for (std::size_t c = 0; c < columns.size(); ++c) {
            const std::string& name = columns[c];
            std::optional<double> v;
            if (name == "delta_tr") v = r.delta_tr;
            else if (name == "snr") v = r.snr;
            else if (name == "skewness") v = r.skewness;
            else if (name == "peak_area") v = r.peak_area;
            else if (name == "length") v = r.length ? std::optional<double>(*r.length) : std::nullopt;
            else if (name == "sulfur_count")
                v = r.sulfur_count ? std::optional<double>(*r.sulfur_count) : std::nullopt;
            else if (name == "injection_volume") v = r.injection_volume;
            else throw MissingFeature("feature_matrix: unknown feature '" + name + "'");
            if (!v) {
                throw MissingFeature("feature_matrix: record " + std::to_string(i) + " ('" +
                                     r.sequence_id + "') lacks '" + name + "'");
            }
            out.x(i, c) = *v;
        }
        if (!r.retention_time) {
            throw MissingFeature("feature_matrix: record " + std::to_string(i) + " ('" +
                                 r.sequence_id + "') lacks the retention_time target");
        }
        out.target[i] = *r.retention_time;
    }
    return out;
}

} // namespace chromaq
