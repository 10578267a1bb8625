#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace chromaq {

/// Time-ordered detector trace from one separation run. Times are seconds,
/// strictly increasing; intensities are detector units and must be finite.
struct Chromatogram {
    std::vector<double> times;
    std::vector<double> intensities;
    std::string id;

    std::size_t size() const { return times.size(); }
};

/// Throws if the chromatogram violates its invariants (length >= 3,
/// strictly increasing times, finite intensities).
void validate(const Chromatogram& chrom);

/// Closed interval of sample indices bracketing one peak.
struct PeakRegion {
    std::size_t left_index = 0;
    std::size_t apex_index = 0;
    std::size_t right_index = 0;
};

/// Half-open time interval [begin_s, end_s).
struct TimeWindow {
    double begin_s = 0.0;
    double end_s = 0.0;
};

/// The four quality measurements of a single detected peak.
struct PeakMetrics {
    double retention_time_min = 0.0; ///< apex time, minutes
    double height = 0.0;             ///< baseline-corrected apex intensity
    double snr = 0.0;
    double skewness = 0.0;           ///< right/left half-width ratio at half height
    double area = 0.0;               ///< detector units * seconds
};

/// Noise amplitude with an explicit flag for the residual-free case so
/// SNR division can be guarded.
struct NoiseEstimate {
    double rms = 0.0;
    bool is_zero = false;
};

/// Parameters for one synthetic peak. The peak shape is an exponentially
/// modified Gaussian: a Gaussian of apex height `amplitude` and width
/// `sigma_s` convolved with a unit-area exponential decay of time constant
/// `tau_s` (tau 0 degenerates to the pure Gaussian). Baseline and noise
/// terms describe the whole trace; when several specs are combined their
/// baseline contributions add and their noise variances add.
struct SyntheticPeakSpec {
    double apex_time_s = 0.0;
    double amplitude = 1.0;
    double sigma_s = 1.0;
    double tau_s = 0.0;
    double baseline_offset = 0.0;
    double baseline_slope = 0.0; ///< detector units per second
    double noise_sigma = 0.0;
    std::uint64_t rng_seed = 0;
};

/// Closed-form EMG value at time t for amplitude/mu/sigma/tau as defined in
/// SyntheticPeakSpec. Stable for small tau (switches between a direct and a
/// scaled-complement evaluation of erfc).
double emg_value(double t, double amplitude, double mu, double sigma, double tau);

/// Generates Y(t) = baseline(t) + sum of EMG peaks + Gaussian noise on a
/// uniform grid of `floor(duration_s * sample_rate_hz) + 1` samples.
/// Deterministic for a fixed seed.
Chromatogram synthesize_chromatogram(const std::vector<SyntheticPeakSpec>& specs,
                                     double duration_s, double sample_rate_hz,
                                     std::uint64_t seed, std::string id = "synthetic");

/// Single-spec convenience overload; uses the spec's own rng_seed.
Chromatogram synthesize_chromatogram(const SyntheticPeakSpec& spec,
                                     double duration_s, double sample_rate_hz,
                                     std::string id = "synthetic");

/// Locates the dominant peak inside `window`. The apex is the maximum
/// intensity in the window; boundaries extend outward until the
/// baseline-corrected intensity first drops below 1% of the corrected apex
/// height or a local minimum is reached, whichever comes first. A minimum
/// only qualifies once the signal rises more than 5x the edge-strip noise
/// above the lowest point seen, so flank noise cannot stop the walk early.
/// Throws NoPeakFound when no sample in the window exceeds baseline +
/// 3 * noise (baseline and noise taken from the window's edge strips).
PeakRegion detect_peak(const Chromatogram& chrom, const TimeWindow& window);

/// Baseline over the region: straight line through (median time, median
/// intensity) of the left and right idle flanks, evaluated at each region
/// sample. Flanks are all samples outside the region on each side; each
/// needs at least 5 samples.
std::vector<double> estimate_baseline(const Chromatogram& chrom, const PeakRegion& region);

/// RMS of residuals after removing a least-squares line over the window.
/// Requires >= 20 samples; the window must not contain a peak.
NoiseEstimate estimate_noise(const Chromatogram& chrom, const TimeWindow& idle_window);

/// height / noise. Throws ZeroNoise for non-positive noise.
double compute_snr(double height, double noise);
double compute_snr(double height, const NoiseEstimate& noise);

/// Half-width ratio W_R(x)/W_L(x) at level x of the baseline-corrected apex
/// height (default x = 0.5). The vertical reference line goes through the
/// parabola-refined apex; crossings are located by linear interpolation
/// between bracketing samples. 1 = symmetric, > 1 tailing, < 1 fronting.
double compute_skewness(const Chromatogram& chrom, const PeakRegion& region,
                        const std::vector<double>& baseline, double fraction = 0.5);

/// Trapezoidal integral of (intensity - baseline) over the region's time
/// span. Negative contributions enter the sum as-is; a negative total is
/// returned unchanged (callers may warn).
double compute_area(const Chromatogram& chrom, const PeakRegion& region,
                    const std::vector<double>& baseline);

/// Retention-time difference between two replicate runs, minutes:
/// t_R,1 - t_R,2. Sign preserved.
double delta_tr(double tr_run1_min, double tr_run2_min);

/// Full measurement of one detected peak: parabola-refined apex time and
/// height, SNR against the supplied noise estimate, skewness at half
/// height, trapezoidal area. A negative raw area is clamped to zero and
/// reported through `warning` when given.
PeakMetrics measure_peak(const Chromatogram& chrom, const PeakRegion& region,
                         const std::vector<double>& baseline, const NoiseEstimate& noise,
                         std::string* warning = nullptr);

/// Apex refined by a quadratic through the apex sample and its neighbours,
/// on baseline-corrected values. Falls back to the raw sample when the
/// parabola degenerates.
struct RefinedApex {
    double time_s = 0.0;
    double height = 0.0; ///< baseline-corrected
};
RefinedApex refine_apex(const Chromatogram& chrom, const PeakRegion& region,
                        const std::vector<double>& baseline);

} // namespace chromaq
