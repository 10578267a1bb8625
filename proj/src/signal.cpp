#include "chromaq/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "chromaq/errors.hpp"
#include "chromaq/rng.hpp"

namespace chromaq {

namespace {

constexpr double kBoundaryFraction = 0.01; // region edge: 1% of corrected apex height

struct IndexRange {
    std::size_t first = 0;
    std::size_t last = 0; // inclusive
    std::size_t count() const { return last >= first ? last - first + 1 : 0; }
};

IndexRange window_indices(const Chromatogram& chrom, const TimeWindow& window) {
    const auto& t = chrom.times;
    auto lo = std::lower_bound(t.begin(), t.end(), window.begin_s);
    auto hi = std::lower_bound(t.begin(), t.end(), window.end_s);
    if (lo >= hi) {
        throw Error("window [" + std::to_string(window.begin_s) + ", " +
                    std::to_string(window.end_s) + ") contains no samples of '" + chrom.id + "'");
    }
    return {static_cast<std::size_t>(lo - t.begin()), static_cast<std::size_t>(hi - t.begin()) - 1};
}

double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (n % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

struct Line {
    double intercept = 0.0;
    double slope = 0.0;
    double at(double t) const { return intercept + slope * t; }
};

Line least_squares_line(const double* t, const double* y, std::size_t n) {
    double mt = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mt += t[i];
        my += y[i];
    }
    mt /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dt = t[i] - mt;
        sxx += dt * dt;
        sxy += dt * (y[i] - my);
    }
    const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
    return {my - slope * mt, slope};
}

// exp(z^2) * erfc(z) for z >= 6 without overflow.
double erfcx_pos(double z) {
    if (z < 26.0) return std::exp(z * z) * std::erfc(z);
    const double inv2z2 = 1.0 / (2.0 * z * z);
    double series = 1.0 + inv2z2 * (-1.0 + inv2z2 * (3.0 + inv2z2 * (-15.0 + inv2z2 * 105.0)));
    return series / (z * std::sqrt(std::numbers::pi));
}

} // namespace

void validate(const Chromatogram& chrom) {
    if (chrom.times.size() != chrom.intensities.size()) {
        throw Error("chromatogram '" + chrom.id + "': times/intensities length mismatch");
    }
    if (chrom.size() < 3) {
        throw Error("chromatogram '" + chrom.id + "': needs at least 3 samples");
    }
    for (std::size_t i = 1; i < chrom.times.size(); ++i) {
        if (!(chrom.times[i] > chrom.times[i - 1])) {
            throw Error("chromatogram '" + chrom.id + "': times not strictly increasing at index " +
                        std::to_string(i));
        }
    }
    for (double v : chrom.intensities) {
        if (!std::isfinite(v)) {
            throw Error("chromatogram '" + chrom.id + "': non-finite intensity");
        }
    }
}

double emg_value(double t, double amplitude, double mu, double sigma, double tau) {
    const double dt = t - mu;
    const double gauss_exponent = -dt * dt / (2.0 * sigma * sigma);
    if (tau <= sigma * 1e-12) {
        return amplitude * std::exp(gauss_exponent);
    }
    const double z = (sigma / tau - dt / sigma) / std::numbers::sqrt2;
    const double c = amplitude * (sigma / tau) * std::sqrt(std::numbers::pi / 2.0);
    if (z < 6.0) {
        // Exponent is bounded (~36) on this branch, so the direct form is safe.
        const double e = sigma * sigma / (2.0 * tau * tau) - dt / tau;
        return c * std::exp(e) * std::erfc(z);
    }
    return c * std::exp(gauss_exponent) * erfcx_pos(z);
}

Chromatogram synthesize_chromatogram(const std::vector<SyntheticPeakSpec>& specs,
                                     double duration_s, double sample_rate_hz,
                                     std::uint64_t seed, std::string id) {
    if (!(duration_s > 0.0) || !(sample_rate_hz > 0.0)) {
        throw Error("synthesize_chromatogram: duration and sample rate must be positive");
    }
    for (const auto& s : specs) {
        if (!(s.sigma_s > 0.0) || !(s.amplitude > 0.0) || s.noise_sigma < 0.0 || s.tau_s < 0.0) {
            throw Error("synthesize_chromatogram: invalid peak spec (sigma/amplitude/noise/tau)");
        }
    }

    const auto n = static_cast<std::size_t>(std::floor(duration_s * sample_rate_hz)) + 1;
    Chromatogram out;
    out.id = std::move(id);
    out.times.resize(n);
    out.intensities.resize(n);

    double noise_var = 0.0;
    for (const auto& s : specs) noise_var += s.noise_sigma * s.noise_sigma;
    const double noise_sd = std::sqrt(noise_var);

    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sample_rate_hz;
        double y = 0.0;
        for (const auto& s : specs) {
            y += s.baseline_offset + s.baseline_slope * t;
            y += emg_value(t, s.amplitude, s.apex_time_s, s.sigma_s, s.tau_s);
        }
        if (noise_sd > 0.0) y += rng.normal(0.0, noise_sd);
        out.times[i] = t;
        out.intensities[i] = y;
    }
    return out;
}

Chromatogram synthesize_chromatogram(const SyntheticPeakSpec& spec, double duration_s,
                                     double sample_rate_hz, std::string id) {
    return synthesize_chromatogram(std::vector<SyntheticPeakSpec>{spec}, duration_s,
                                   sample_rate_hz, spec.rng_seed, std::move(id));
}

PeakRegion detect_peak(const Chromatogram& chrom, const TimeWindow& window) {
    validate(chrom);
    const IndexRange win = window_indices(chrom, window);
    const std::size_t count = win.count();
    if (count < 9) {
        throw Error("detect_peak: window holds only " + std::to_string(count) + " samples");
    }

    // Reference baseline and noise come from the window's edge strips.
    const std::size_t strip = std::clamp<std::size_t>(count / 10, 5, count / 3);
    std::vector<double> lt, li, rt, ri;
    for (std::size_t i = win.first; i < win.first + strip; ++i) {
        lt.push_back(chrom.times[i]);
        li.push_back(chrom.intensities[i]);
    }
    for (std::size_t i = win.last - strip + 1; i <= win.last; ++i) {
        rt.push_back(chrom.times[i]);
        ri.push_back(chrom.intensities[i]);
    }
    const double t_left = median_of(lt), y_left = median_of(li);
    const double t_right = median_of(rt), y_right = median_of(ri);
    Line base;
    if (t_right > t_left) {
        base.slope = (y_right - y_left) / (t_right - t_left);
        base.intercept = y_left - base.slope * t_left;
    } else {
        base.intercept = y_left;
    }

    double resid_sq = 0.0;
    for (std::size_t i = 0; i < lt.size(); ++i) {
        const double r = li[i] - base.at(lt[i]);
        resid_sq += r * r;
    }
    for (std::size_t i = 0; i < rt.size(); ++i) {
        const double r = ri[i] - base.at(rt[i]);
        resid_sq += r * r;
    }
    const double noise_rms = std::sqrt(resid_sq / static_cast<double>(lt.size() + rt.size()));

    std::size_t apex = win.first;
    for (std::size_t i = win.first; i <= win.last; ++i) {
        if (chrom.intensities[i] > chrom.intensities[apex]) apex = i;
    }
    const double apex_height = chrom.intensities[apex] - base.at(chrom.times[apex]);
    if (!(apex_height > 3.0 * noise_rms)) {
        throw NoPeakFound("detect_peak: no sample in window exceeds baseline + 3*noise in '" +
                          chrom.id + "'");
    }
    if (apex == win.first || apex == win.last) {
        throw NoPeakFound("detect_peak: window maximum sits on the window edge in '" + chrom.id + "'");
    }

    auto corrected = [&](std::size_t i) { return chrom.intensities[i] - base.at(chrom.times[i]); };
    const double floor_level = kBoundaryFraction * apex_height;
    const std::size_t n = chrom.size();

    // Walk outward; a boundary is the first sample below the 1% floor or a
    // local minimum, whichever comes first. A minimum only counts once the
    // signal turns up by more than the noise scale, otherwise noise wiggles
    // on the flank would stop the walk immediately. Extension may leave the
    // search window (the window scopes detection, not the peak).
    const double prominence = std::max(5.0 * noise_rms, 1e-9 * apex_height);
    std::size_t left = apex;
    {
        std::size_t min_idx = apex;
        double min_val = corrected(apex);
        for (std::size_t i = apex; i > 0;) {
            --i;
            const double c = corrected(i);
            if (c < floor_level) {
                min_idx = i;
                break;
            }
            if (c < min_val) {
                min_val = c;
                min_idx = i;
            } else if (c > min_val + prominence) {
                break;
            }
        }
        left = min_idx;
    }
    std::size_t right = apex;
    {
        std::size_t min_idx = apex;
        double min_val = corrected(apex);
        for (std::size_t i = apex; i + 1 < n;) {
            ++i;
            const double c = corrected(i);
            if (c < floor_level) {
                min_idx = i;
                break;
            }
            if (c < min_val) {
                min_val = c;
                min_idx = i;
            } else if (c > min_val + prominence) {
                break;
            }
        }
        right = min_idx;
    }

    if (!(left < apex && apex < right)) {
        throw NoPeakFound("detect_peak: degenerate region around apex in '" + chrom.id + "'");
    }
    return {left, apex, right};
}

std::vector<double> estimate_baseline(const Chromatogram& chrom, const PeakRegion& region) {
    validate(chrom);
    if (!(region.left_index < region.apex_index && region.apex_index < region.right_index) ||
        region.right_index >= chrom.size()) {
        throw Error("estimate_baseline: invalid region");
    }
    const std::size_t left_count = region.left_index;
    const std::size_t right_count = chrom.size() - region.right_index - 1;
    if (left_count < 5 || right_count < 5) {
        throw InsufficientIdleSamples("estimate_baseline: idle flank has fewer than 5 samples (left " +
                                      std::to_string(left_count) + ", right " +
                                      std::to_string(right_count) + ")");
    }

    std::vector<double> li(chrom.intensities.begin(),
                           chrom.intensities.begin() + static_cast<std::ptrdiff_t>(left_count));
    std::vector<double> ri(chrom.intensities.begin() + static_cast<std::ptrdiff_t>(region.right_index) + 1,
                           chrom.intensities.end());
    const double y_left = median_of(std::move(li));
    const double y_right = median_of(std::move(ri));
    // Median time of a flank: middle sample (times are already sorted).
    auto median_time = [&](std::size_t first, std::size_t count) {
        const std::size_t mid = first + count / 2;
        if (count % 2 == 1) return chrom.times[mid];
        return 0.5 * (chrom.times[mid - 1] + chrom.times[mid]);
    };
    const double t_left = median_time(0, left_count);
    const double t_right = median_time(region.right_index + 1, right_count);

    Line base;
    base.slope = (y_right - y_left) / (t_right - t_left);
    base.intercept = y_left - base.slope * t_left;

    std::vector<double> out;
    out.reserve(region.right_index - region.left_index + 1);
    for (std::size_t i = region.left_index; i <= region.right_index; ++i) {
        out.push_back(base.at(chrom.times[i]));
    }
    return out;
}

NoiseEstimate estimate_noise(const Chromatogram& chrom, const TimeWindow& idle_window) {
    validate(chrom);
    const IndexRange win = window_indices(chrom, idle_window);
    const std::size_t count = win.count();
    if (count < 20) {
        throw InsufficientIdleSamples("estimate_noise: idle window holds " + std::to_string(count) +
                                      " samples, need 20");
    }
    const Line fit = least_squares_line(chrom.times.data() + win.first,
                                        chrom.intensities.data() + win.first, count);
    double resid_sq = 0.0;
    double max_abs = 0.0;
    for (std::size_t i = win.first; i <= win.last; ++i) {
        const double r = chrom.intensities[i] - fit.at(chrom.times[i]);
        resid_sq += r * r;
        max_abs = std::max(max_abs, std::abs(chrom.intensities[i]));
    }
    const double rms = std::sqrt(resid_sq / static_cast<double>(count));
    // Residuals at rounding scale count as identically zero.
    if (rms <= 1e-10 * std::max(1.0, max_abs)) return {0.0, true};
    return {rms, false};
}

double compute_snr(double height, double noise) {
    if (!(height > 0.0)) throw Error("compute_snr: height must be positive");
    if (!(noise > 0.0)) throw ZeroNoise("compute_snr: noise must be positive");
    return height / noise;
}

double compute_snr(double height, const NoiseEstimate& noise) {
    if (noise.is_zero) throw ZeroNoise("compute_snr: noise estimate is zero");
    return compute_snr(height, noise.rms);
}

RefinedApex refine_apex(const Chromatogram& chrom, const PeakRegion& region,
                        const std::vector<double>& baseline) {
    const std::size_t rel = region.apex_index - region.left_index;
    auto corrected = [&](std::size_t r) {
        return chrom.intensities[region.left_index + r] - baseline[r];
    };
    const RefinedApex raw{chrom.times[region.apex_index], corrected(rel)};
    if (rel == 0 || region.left_index + rel + 1 > region.right_index) return raw;

    const double t0 = chrom.times[region.apex_index - 1];
    const double t1 = chrom.times[region.apex_index];
    const double t2 = chrom.times[region.apex_index + 1];
    const double y0 = corrected(rel - 1), y1 = corrected(rel), y2 = corrected(rel + 1);
    const double f01 = (y1 - y0) / (t1 - t0);
    const double f12 = (y2 - y1) / (t2 - t1);
    const double f012 = (f12 - f01) / (t2 - t0);
    if (!(f012 < 0.0)) return raw; // not concave at the apex
    const double t_star = 0.5 * (t0 + t1) - f01 / (2.0 * f012);
    if (!(t_star >= t0 && t_star <= t2)) return raw;
    const double h_star = y0 + f01 * (t_star - t0) + f012 * (t_star - t0) * (t_star - t1);
    return {t_star, h_star};
}

double compute_skewness(const Chromatogram& chrom, const PeakRegion& region,
                        const std::vector<double>& baseline, double fraction) {
    validate(chrom);
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw Error("compute_skewness: fraction must lie in (0, 1)");
    }
    const std::size_t width = region.right_index - region.left_index + 1;
    if (baseline.size() != width) {
        throw Error("compute_skewness: baseline not aligned to region");
    }
    std::vector<double> corrected(width);
    for (std::size_t r = 0; r < width; ++r) {
        corrected[r] = chrom.intensities[region.left_index + r] - baseline[r];
    }
    const RefinedApex apex = refine_apex(chrom, region, baseline);
    if (!(apex.height > 0.0)) {
        throw Error("compute_skewness: non-positive corrected apex height");
    }
    const double level = fraction * apex.height;
    const std::size_t apex_rel = region.apex_index - region.left_index;

    auto time_at = [&](std::size_t r) { return chrom.times[region.left_index + r]; };

    // Nearest crossing on each side, sub-sample position by linear interpolation.
    std::size_t j = apex_rel;
    while (j > 0 && corrected[j - 1] >= level) --j;
    if (j == 0) {
        throw LevelNotBracketed("compute_skewness: level not crossed on the left side");
    }
    const double tl = time_at(j - 1) + (level - corrected[j - 1]) /
                                           (corrected[j] - corrected[j - 1]) *
                                           (time_at(j) - time_at(j - 1));

    std::size_t k = apex_rel;
    while (k + 1 < width && corrected[k + 1] >= level) ++k;
    if (k + 1 >= width) {
        throw LevelNotBracketed("compute_skewness: level not crossed on the right side");
    }
    const double tr = time_at(k) + (corrected[k] - level) /
                                       (corrected[k] - corrected[k + 1]) *
                                       (time_at(k + 1) - time_at(k));

    const double w_left = apex.time_s - tl;
    const double w_right = tr - apex.time_s;
    if (!(w_left > 0.0) || !(w_right > 0.0)) {
        throw LevelNotBracketed("compute_skewness: crossing on the wrong side of the apex");
    }
    return w_right / w_left;
}

double compute_area(const Chromatogram& chrom, const PeakRegion& region,
                    const std::vector<double>& baseline) {
    validate(chrom);
    const std::size_t width = region.right_index - region.left_index + 1;
    if (baseline.size() != width) {
        throw Error("compute_area: baseline not aligned to region");
    }
    double area = 0.0;
    for (std::size_t r = 0; r + 1 < width; ++r) {
        const std::size_t i = region.left_index + r;
        const double c0 = chrom.intensities[i] - baseline[r];
        const double c1 = chrom.intensities[i + 1] - baseline[r + 1];
        area += 0.5 * (c0 + c1) * (chrom.times[i + 1] - chrom.times[i]);
    }
    return area;
}

double delta_tr(double tr_run1_min, double tr_run2_min) {
    if (!std::isfinite(tr_run1_min) || !std::isfinite(tr_run2_min) ||
        !(tr_run1_min > 0.0) || !(tr_run2_min > 0.0)) {
        throw Error("delta_tr: retention times must be finite and positive");
    }
    return tr_run1_min - tr_run2_min;
}

PeakMetrics measure_peak(const Chromatogram& chrom, const PeakRegion& region,
                         const std::vector<double>& baseline, const NoiseEstimate& noise,
                         std::string* warning) {
    const RefinedApex apex = refine_apex(chrom, region, baseline);
    if (!(apex.height > 0.0)) {
        throw Error("measure_peak: non-positive corrected apex height");
    }
    PeakMetrics m;
    m.retention_time_min = apex.time_s / 60.0;
    m.height = apex.height;
    m.snr = compute_snr(apex.height, noise);
    m.skewness = compute_skewness(chrom, region, baseline);
    const double raw_area = compute_area(chrom, region, baseline);
    if (raw_area < 0.0) {
        if (warning) *warning = "negative peak area " + std::to_string(raw_area) + " clamped to 0";
        m.area = 0.0;
    } else {
        m.area = raw_area;
    }
    return m;
}

} // namespace chromaq
