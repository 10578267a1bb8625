#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "chromaq/matrix.hpp"

namespace chromaq {

/// PCA model from a covariance eigendecomposition. Component rows are
/// orthonormal, ordered by decreasing eigenvalue, and sign-fixed so the
/// largest-magnitude coordinate of each row is positive.
struct PcaModel {
    std::vector<double> mean;            // per-feature means of the fit data
    Matrix components;                   // n_components x n_features
    std::vector<double> eigenvalues;     // retained, descending
    std::vector<double> variance_ratios; // retained ratios, same order
    std::vector<double> full_ratios;     // all d ratios; sums to 1
    bool rank_deficient = false;         // a retained eigenvalue fell below 1e-12

    std::size_t n_components() const { return components.rows(); }
    std::size_t n_features() const { return components.cols(); }
};

/// Fits PCA on the rows of `m` (1/(n-1) covariance). Requires more rows
/// than retained components. Throws TooFewSamples or DimensionMismatch;
/// all-constant input surfaces as a zero total variance error.
PcaModel fit_pca(const Matrix& m, std::size_t n_components);

/// Projects rows of `m` onto the component rows after centering.
Matrix transform(const PcaModel& model, const Matrix& m);

/// Smallest component count whose cumulative ratio strictly exceeds the
/// threshold; all components when the threshold is never exceeded.
std::size_t choose_components(const std::vector<double>& ratios, double threshold = 0.8);

/// JSON round-trip for report reproducibility (exact double fidelity).
std::string pca_to_json(const PcaModel& model);
PcaModel pca_from_json(const std::string& text);

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Eigenpairs are returned sorted by descending eigenvalue; eigenvectors
/// are the rows of `vectors`. Exposed for reuse and direct testing.
void symmetric_eigen(const Matrix& sym, std::vector<double>& values, Matrix& vectors);

} // namespace chromaq
