#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chromaq/matrix.hpp"

namespace chromaq {

/// One dataset row: the four quality measurements plus sequence descriptors
/// and the retention-time target. Absent cells stay disengaged.
struct QualityRecord {
    std::string sequence_id;
    std::optional<double> delta_tr;        // minutes
    std::optional<double> snr;             // dimensionless, > 0
    std::optional<double> skewness;        // dimensionless, > 0
    std::optional<double> peak_area;       // detector units * s, >= 0
    std::optional<int> length;             // nucleotides, >= 1
    std::optional<int> sulfur_count;       // 0 .. length - 1
    std::optional<double> injection_volume; // microliters, often absent
    std::optional<double> retention_time;  // minutes, > 0 (target)

    /// True when every independent feature and the target are present.
    bool complete() const;
};

/// Fixed feature order shared by every derived matrix.
inline constexpr std::array<std::string_view, 6> kFeatureNames = {
    "delta_tr", "snr", "skewness", "peak_area", "length", "sulfur_count"};

/// Exact input CSV header, in declared column order.
inline constexpr std::array<std::string_view, 9> kCsvColumns = {
    "sequence_id", "delta_tr",     "snr",          "skewness",      "peak_area",
    "length",      "sulfur_count", "injection_volume", "retention_time"};

struct QualityDataset {
    std::string name;
    std::vector<QualityRecord> records;
    std::vector<std::string> feature_names; // always the kFeatureNames order

    std::size_t size() const { return records.size(); }
};

/// Per-feature transform constants plus a fingerprint of the matrix they
/// were fitted on. standardize fills mean/stddev, normalize fills min/max.
struct ScalingParams {
    std::vector<double> mean;
    std::vector<double> stddev;
    std::vector<double> min;
    std::vector<double> max;
    std::string fitted_on;
};

struct ScaleResult {
    Matrix matrix;
    ScalingParams params;
    bool clamped = false; // any value clamped while applying stored params
};

/// FNV-1a hash of the matrix shape and raw values, as 16 hex digits.
std::string matrix_fingerprint(const Matrix& m);

/// Reads a dataset CSV. Columns may appear in any order but all nine schema
/// names must be present; unknown columns are skipped with a warning. Null
/// markers: empty cell, `NA`, `-`. Throws SchemaMismatch or ParseError (the
/// message names the row and column). The dataset name is the file stem.
QualityDataset load_csv(const std::string& path,
                        std::vector<std::string>* warnings = nullptr);

/// Writes the schema-ordered CSV; disengaged cells become empty fields.
void save_csv(const QualityDataset& ds, const std::string& path);

/// Removes every record missing an independent feature or the target
/// (injection_volume may stay null). Throws EmptyDataset when nothing
/// survives. `removed` reports the dropped count.
QualityDataset drop_nulls(const QualityDataset& ds, std::size_t* removed = nullptr);

/// Z-scores each column with the population standard deviation. With
/// `params` supplied, applies the stored transform without refitting.
/// Throws ZeroVarianceFeature naming the offending column.
ScaleResult standardize(const Matrix& m, const ScalingParams* params = nullptr);

/// Min-max scales each column to [0, 1]. With `params` supplied, applies
/// the stored transform; out-of-range values are clamped and flagged.
/// Throws DegenerateRange naming the offending column.
ScaleResult normalize(const Matrix& m, const ScalingParams* params = nullptr);

/// Seeded shuffled split; the test side gets ceil(n * test_fraction) rows.
/// Both sides preserve the original record order.
std::pair<QualityDataset, QualityDataset>
split_train_test(const QualityDataset& ds, double test_fraction, std::uint64_t seed);

enum class FeatureSet { clustering, regression };

struct FeatureBlock {
    Matrix x;                          // one row per record, kFeatureNames order
    std::vector<std::string> columns;  // column labels for x
    std::vector<double> target;        // retention_time per row
};

/// Builds the numeric feature matrix plus target vector. Both named sets use
/// the same six features (injection_volume is excluded by design). Throws
/// MissingFeature on an unknown or absent column, or an empty request.
FeatureBlock feature_matrix(const QualityDataset& ds, FeatureSet set);
FeatureBlock feature_matrix(const QualityDataset& ds,
                            const std::vector<std::string>& columns);

} // namespace chromaq
