#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "chromaq/errors.hpp"
#include "chromaq/rng.hpp"
#include "chromaq/signal.hpp"

using namespace chromaq;

namespace {

// Independent EMG closed form in long double. The direct product
// exp(s^2/2t^2 - dt/t) * erfc(z) stays inside long double range for every
// fixture below, so no branch switching is needed here.
double oracle_emg(double t, double amplitude, double mu, double sigma, double tau) {
    const long double dt = static_cast<long double>(t) - mu;
    if (tau <= 0.0) {
        return static_cast<double>(amplitude * expl(-dt * dt / (2.0L * sigma * sigma)));
    }
    const long double s = sigma, ta = tau;
    const long double z = (s / ta - dt / s) / sqrtl(2.0L);
    const long double e = s * s / (2.0L * ta * ta) - dt / ta;
    const long double c =
        amplitude * (s / ta) * sqrtl(std::numbers::pi_v<long double> / 2.0L);
    return static_cast<double>(c * expl(e) * erfcl(z));
}

struct OracleShape {
    double apex_time = 0.0;
    double apex_height = 0.0;
    double skewness = 0.0;
};

// Dense-grid shape oracle: 1e6 closed-form samples over the peak support,
// apex from the grid maximum, fractional-height crossings by linear
// interpolation between bracketing grid points.
OracleShape oracle_emg_shape(double amplitude, double mu, double sigma, double tau,
                             double fraction = 0.5) {
    const std::size_t n = 1'000'000;
    const double lo = mu - 8.0 * sigma;
    const double hi = mu + 8.0 * sigma + 10.0 * tau;
    const double step = (hi - lo) / static_cast<double>(n - 1);
    std::vector<double> h(n);
    std::size_t apex = 0;
    for (std::size_t i = 0; i < n; ++i) {
        h[i] = oracle_emg(lo + static_cast<double>(i) * step, amplitude, mu, sigma, tau);
        if (h[i] > h[apex]) apex = i;
    }
    const double level = fraction * h[apex];
    auto t_at = [&](std::size_t i) { return lo + static_cast<double>(i) * step; };

    std::size_t j = apex;
    while (j > 0 && h[j - 1] >= level) --j;
    REQUIRE(j > 0);
    const double tl =
        t_at(j - 1) + (level - h[j - 1]) / (h[j] - h[j - 1]) * step;

    std::size_t k = apex;
    while (k + 1 < n && h[k + 1] >= level) ++k;
    REQUIRE(k + 1 < n);
    const double tr = t_at(k) + (h[k] - level) / (h[k] - h[k + 1]) * step;

    const double apex_t = t_at(apex);
    return {apex_t, h[apex], (tr - apex_t) / (apex_t - tl)};
}

// Simpson integration of the closed form, used for area cross-checks.
double oracle_emg_area(double amplitude, double mu, double sigma, double tau) {
    const std::size_t n = 200'001; // odd
    const double lo = mu - 10.0 * sigma;
    const double hi = mu + 10.0 * sigma + 20.0 * tau;
    const double step = (hi - lo) / static_cast<double>(n - 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = (i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        sum += w * oracle_emg(lo + static_cast<double>(i) * step, amplitude, mu, sigma, tau);
    }
    return sum * step / 3.0;
}

SyntheticPeakSpec basic_spec() {
    SyntheticPeakSpec s;
    s.apex_time_s = 60.0;
    s.amplitude = 100.0;
    s.sigma_s = 2.0;
    s.tau_s = 0.0;
    s.baseline_offset = 5.0;
    s.baseline_slope = 0.0;
    s.noise_sigma = 0.0;
    s.rng_seed = 1;
    return s;
}

struct MeasuredPeak {
    Chromatogram chrom;
    PeakRegion region;
    std::vector<double> baseline;
};

MeasuredPeak synth_and_detect(const SyntheticPeakSpec& spec, double duration,
                              double rate, double win_lo, double win_hi) {
    MeasuredPeak m;
    m.chrom = synthesize_chromatogram(spec, duration, rate);
    m.region = detect_peak(m.chrom, {win_lo, win_hi});
    m.baseline = estimate_baseline(m.chrom, m.region);
    return m;
}

} // namespace

TEST_CASE("emg_value reduces to the pure Gaussian at tau = 0") {
    for (double t : {50.0, 55.0, 58.0, 60.0, 61.5, 66.0, 80.0}) {
        const double g = 100.0 * std::exp(-(t - 60.0) * (t - 60.0) / (2.0 * 4.0));
        CHECK(emg_value(t, 100.0, 60.0, 2.0, 0.0) == doctest::Approx(g).epsilon(1e-14));
    }
}

TEST_CASE("emg_value matches the closed form across its evaluation branches") {
    // tau values sweep the erfc argument through both internal branch switches.
    for (double tau : {2.0, 0.5, 0.1, 0.05, 0.02}) {
        for (double dt : {-3.0, -1.0, -0.25, 0.0, 0.5, 1.5, 3.0, 8.0}) {
            const double got = emg_value(60.0 + dt, 50.0, 60.0, 1.0, tau);
            const double want = oracle_emg(60.0 + dt, 50.0, 60.0, 1.0, tau);
            if (want > 1e-280) {
                CHECK(got == doctest::Approx(want).epsilon(1e-11));
            } else {
                CHECK(std::abs(got - want) < 1e-280);
            }
        }
    }
}

TEST_CASE("emg_value integrates to amplitude * sigma * sqrt(2*pi) for any tau") {
    const double expect = 50.0 * 1.0 * std::sqrt(2.0 * std::numbers::pi);
    for (double tau : {0.0, 0.3, 1.0, 2.0, 5.0}) {
        const std::size_t n = 200'001;
        const double lo = 60.0 - 12.0, hi = 60.0 + 12.0 + 20.0 * tau;
        const double step = (hi - lo) / static_cast<double>(n - 1);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = (i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
            sum += w * emg_value(lo + static_cast<double>(i) * step, 50.0, 60.0, 1.0, tau);
        }
        CHECK(sum * step / 3.0 == doctest::Approx(expect).epsilon(1e-6));
    }
}

TEST_CASE("synthesize_chromatogram is deterministic and honors the baseline") {
    SUBCASE("no specs means no signal") {
        const auto c = synthesize_chromatogram({}, 10.0, 10.0, 42);
        REQUIRE(c.size() == 101);
        for (double v : c.intensities) CHECK(v == 0.0);
        CHECK(c.times.front() == 0.0);
        CHECK(c.times.back() == doctest::Approx(10.0));
    }
    SUBCASE("identical seed gives bit-identical output") {
        auto spec = basic_spec();
        spec.noise_sigma = 0.5;
        const auto a = synthesize_chromatogram(spec, 120.0, 20.0);
        const auto b = synthesize_chromatogram(spec, 120.0, 20.0);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a.intensities[i] == b.intensities[i]);
        }
    }
    SUBCASE("sampled apex is within 2% of the closed-form maximum") {
        auto spec = basic_spec();
        spec.tau_s = 3.0;
        spec.baseline_offset = 0.0;
        const auto c = synthesize_chromatogram(spec, 120.0, 25.0);
        const double sampled = *std::max_element(c.intensities.begin(), c.intensities.end());
        const auto shape = oracle_emg_shape(spec.amplitude, spec.apex_time_s, spec.sigma_s,
                                            spec.tau_s);
        CHECK(sampled == doctest::Approx(shape.apex_height).epsilon(0.02));
    }
}

TEST_CASE("detect_peak finds the apex of a symmetric peak near 60 s") {
    auto spec = basic_spec();
    const auto c = synthesize_chromatogram(spec, 120.0, 10.0);
    const auto region = detect_peak(c, {40.0, 80.0});
    CHECK(c.times[region.apex_index] == doctest::Approx(60.0).epsilon(1e-12));
    CHECK(region.left_index < region.apex_index);
    CHECK(region.apex_index < region.right_index);
    CHECK(c.intensities[region.apex_index] >= c.intensities[region.left_index]);
    CHECK(c.intensities[region.apex_index] >= c.intensities[region.right_index]);
}

TEST_CASE("detect_peak rejects a window holding only noise") {
    SyntheticPeakSpec spec = basic_spec();
    spec.amplitude = 1e-9; // effectively flat
    spec.baseline_offset = 0.0;
    spec.noise_sigma = 0.1;
    spec.rng_seed = 11;
    const auto c = synthesize_chromatogram(spec, 400.0, 10.0, "flat");
    CHECK_THROWS_AS((void)detect_peak(c, {150.0, 153.0}), NoPeakFound);
}

TEST_CASE("detect_peak scoped to the second of two disjoint peaks") {
    auto first = basic_spec();
    auto second = basic_spec();
    second.apex_time_s = 130.0;
    second.amplitude = 40.0;
    second.baseline_offset = 0.0;
    const auto c =
        synthesize_chromatogram(std::vector<SyntheticPeakSpec>{first, second}, 200.0, 10.0, 3);
    const auto region = detect_peak(c, {110.0, 160.0});
    CHECK(std::abs(c.times[region.apex_index] - 130.0) <= 0.1 + 1e-12);
    // The valley between the peaks bounds the leftward extension.
    CHECK(c.times[region.left_index] > 70.0);
}

TEST_CASE("estimate_baseline interpolates between flank medians") {
    SUBCASE("constant offset stays constant") {
        auto m = synth_and_detect(basic_spec(), 120.0, 10.0, 40.0, 80.0);
        for (double b : m.baseline) CHECK(b == doctest::Approx(5.0).epsilon(1e-9));
    }
    SUBCASE("linear flanks yield the linear ramp") {
        // Intensities equal t on both flanks, so the interpolant is y = t.
        Chromatogram c;
        c.id = "ramp";
        for (int i = 0; i <= 20; ++i) {
            const double t = -0.5 + 0.1 * static_cast<double>(i);
            c.times.push_back(t);
            const bool inside = t > -0.05 && t < 1.05;
            c.intensities.push_back(inside ? t + std::exp(-std::pow((t - 0.5) / 0.2, 2)) : t);
        }
        PeakRegion region{5, 10, 15};
        const auto base = estimate_baseline(c, region);
        for (std::size_t r = 0; r < base.size(); ++r) {
            CHECK(base[r] == doctest::Approx(c.times[region.left_index + r]).epsilon(1e-12));
        }
    }
    SUBCASE("sloped synthetic baseline recovered to 1e-9") {
        auto spec = basic_spec();
        spec.baseline_slope = 0.05;
        auto m = synth_and_detect(spec, 120.0, 10.0, 40.0, 80.0);
        for (std::size_t r = 0; r < m.baseline.size(); ++r) {
            const double t = m.chrom.times[m.region.left_index + r];
            CHECK(m.baseline[r] ==
                  doctest::Approx(spec.baseline_offset + spec.baseline_slope * t).epsilon(1e-9));
        }
    }
    SUBCASE("short flank raises InsufficientIdleSamples") {
        auto spec = basic_spec();
        const auto c = synthesize_chromatogram(spec, 120.0, 10.0);
        PeakRegion region{3, 600, 1100};
        CHECK_THROWS_AS((void)estimate_baseline(c, region), InsufficientIdleSamples);
    }
}

TEST_CASE("estimate_noise detrends and reports RMS") {
    SUBCASE("pure line is flagged as zero noise") {
        Chromatogram c;
        c.id = "line";
        for (int i = 0; i < 50; ++i) {
            const double t = static_cast<double>(i);
            c.times.push_back(t);
            c.intensities.push_back(2.0 + 0.1 * t);
        }
        const auto n = estimate_noise(c, {0.0, 50.0});
        CHECK(n.is_zero);
        CHECK(n.rms == 0.0);
        CHECK_THROWS_AS((void)compute_snr(10.0, n), ZeroNoise);
    }
    SUBCASE("unit-magnitude signs around zero give RMS 1") {
        // The +--+ block pattern is orthogonal to both the mean and the slope
        // of the detrending fit, so the RMS is exactly 1.
        Chromatogram c;
        c.id = "alt";
        const double block[4] = {1.0, -1.0, -1.0, 1.0};
        for (int i = 0; i < 40; ++i) {
            c.times.push_back(static_cast<double>(i));
            c.intensities.push_back(block[i % 4]);
        }
        const auto n = estimate_noise(c, {0.0, 40.0});
        CHECK_FALSE(n.is_zero);
        CHECK(n.rms == doctest::Approx(1.0).epsilon(1e-12));

        // Strict alternation leaves a tiny fitted slope; RMS within 0.2%.
        Chromatogram alt;
        alt.id = "alt2";
        for (int i = 0; i < 40; ++i) {
            alt.times.push_back(static_cast<double>(i));
            alt.intensities.push_back(i % 2 == 0 ? 1.0 : -1.0);
        }
        const auto n2 = estimate_noise(alt, {0.0, 40.0});
        CHECK(n2.rms == doctest::Approx(1.0).epsilon(2e-3));
    }
    SUBCASE("white noise RMS matches the generator stream on 10k samples") {
        auto spec = basic_spec();
        spec.apex_time_s = 30.0;
        spec.noise_sigma = 0.5;
        spec.rng_seed = 77;
        const auto c = synthesize_chromatogram(spec, 1100.0, 10.0, "noisy");
        const auto est = estimate_noise(c, {100.0, 1100.0});

        // Replay the generator's noise stream and take the sample RMS of the
        // draws inside the idle window.
        Rng rng(spec.rng_seed);
        std::vector<double> draws(c.size());
        for (auto& d : draws) d = rng.normal(0.0, spec.noise_sigma);
        double sq = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (c.times[i] >= 100.0 && c.times[i] < 1100.0) {
                sq += draws[i] * draws[i];
                ++count;
            }
        }
        REQUIRE(count >= 10'000);
        const double oracle = std::sqrt(sq / static_cast<double>(count));
        CHECK(est.rms == doctest::Approx(oracle).epsilon(0.01));
        CHECK(std::abs(est.rms - 0.5) < 0.02);
    }
    SUBCASE("window below 20 samples is rejected") {
        const auto c = synthesize_chromatogram(basic_spec(), 120.0, 10.0);
        CHECK_THROWS_AS((void)estimate_noise(c, {0.0, 1.0}), InsufficientIdleSamples);
    }
}

TEST_CASE("compute_snr arithmetic and guards") {
    CHECK(compute_snr(50.0, 1.0) == 50.0);
    CHECK(compute_snr(10.0, 10.0) == 1.0);
    CHECK_THROWS_AS((void)compute_snr(10.0, 0.0), ZeroNoise);
    CHECK_THROWS_AS((void)compute_snr(-1.0, 1.0), Error);
}

TEST_CASE("measured SNR tracks an independent recomputation from raw arrays") {
    auto spec = basic_spec();
    spec.noise_sigma = 0.125;
    spec.rng_seed = 5;
    const auto c = synthesize_chromatogram(spec, 240.0, 10.0, "snr");
    const auto region = detect_peak(c, {40.0, 80.0});
    const auto baseline = estimate_baseline(c, region);
    const auto noise = estimate_noise(c, {120.0, 240.0});
    const auto metrics = measure_peak(c, region, baseline, noise);

    // Hand recomputation straight from the generated arrays and the known
    // true baseline line.
    double height = 0.0;
    for (std::size_t i = region.left_index; i <= region.right_index; ++i) {
        height = std::max(height, c.intensities[i] - spec.baseline_offset);
    }
    double sq = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c.times[i] >= 120.0) {
            const double r = c.intensities[i] - spec.baseline_offset;
            sq += r * r;
            ++count;
        }
    }
    const double hand = height / std::sqrt(sq / static_cast<double>(count));
    CHECK(metrics.snr == doctest::Approx(hand).epsilon(0.10));
}

TEST_CASE("compute_skewness is 1 for a symmetric Gaussian") {
    auto m = synth_and_detect(basic_spec(), 120.0, 100.0, 40.0, 80.0);
    const double q = compute_skewness(m.chrom, m.region, m.baseline);
    CHECK(q == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("time-mirrored chromatogram has reciprocal skewness") {
    auto spec = basic_spec();
    spec.tau_s = 3.0;
    auto m = synth_and_detect(spec, 160.0, 50.0, 40.0, 110.0);
    const double q = compute_skewness(m.chrom, m.region, m.baseline);

    const std::size_t n = m.chrom.size();
    Chromatogram mir;
    mir.id = "mirror";
    mir.times.resize(n);
    mir.intensities.resize(n);
    const double span = m.chrom.times.back();
    for (std::size_t i = 0; i < n; ++i) {
        mir.times[i] = span - m.chrom.times[n - 1 - i];
        mir.intensities[i] = m.chrom.intensities[n - 1 - i];
    }
    PeakRegion rr{n - 1 - m.region.right_index, n - 1 - m.region.apex_index,
                  n - 1 - m.region.left_index};
    std::vector<double> rb(m.baseline.rbegin(), m.baseline.rend());
    const double qm = compute_skewness(mir, rr, rb);
    CHECK(qm == doctest::Approx(1.0 / q).epsilon(1e-9));
}

TEST_CASE("EMG skewness matches the dense-grid oracle within 1e-3") {
    auto spec = basic_spec();
    spec.sigma_s = 1.0;
    spec.tau_s = 2.0;
    spec.baseline_offset = 2.0;
    auto m = synth_and_detect(spec, 160.0, 100.0, 40.0, 110.0);
    const double q = compute_skewness(m.chrom, m.region, m.baseline);
    const auto shape =
        oracle_emg_shape(spec.amplitude, spec.apex_time_s, spec.sigma_s, spec.tau_s);
    CHECK(q > 1.0);
    CHECK(q == doctest::Approx(shape.skewness).epsilon(1e-3));
}

TEST_CASE("skewness level errors when the fraction is never crossed") {
    auto m = synth_and_detect(basic_spec(), 120.0, 10.0, 40.0, 80.0);
    // Shrink the region so the 10% level has no left crossing inside it.
    PeakRegion tight{m.region.apex_index - 1, m.region.apex_index, m.region.right_index};
    std::vector<double> base(m.baseline.end() - static_cast<std::ptrdiff_t>(
                                 m.region.right_index - m.region.apex_index + 2),
                             m.baseline.end());
    CHECK_THROWS_AS((void)compute_skewness(m.chrom, tight, base, 0.1), LevelNotBracketed);
}

TEST_CASE("compute_area handles hand fixtures and the Gaussian integral") {
    SUBCASE("unit triangle has area 1") {
        Chromatogram c;
        c.id = "tri";
        const std::vector<double> shape{0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 1.0, 0.5,
                                        0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
        for (std::size_t i = 0; i < shape.size(); ++i) {
            c.times.push_back(static_cast<double>(i) * 0.5);
            c.intensities.push_back(shape[i]);
        }
        PeakRegion region{5, 7, 9};
        const std::vector<double> base(5, 0.0);
        CHECK(compute_area(c, region, base) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("all-zero region integrates to 0") {
        Chromatogram c;
        c.id = "zero";
        for (int i = 0; i < 30; ++i) {
            c.times.push_back(static_cast<double>(i));
            c.intensities.push_back(0.0);
        }
        PeakRegion region{10, 12, 15};
        const std::vector<double> base(6, 0.0);
        CHECK(compute_area(c, region, base) == 0.0);
    }
    SUBCASE("Gaussian area within 0.1% of A*sigma*sqrt(2*pi)") {
        // The detected region stops at the 1% boundary, which clips 0.24% of
        // a pure Gaussian; widen to +-5 sigma for the analytic comparison.
        const auto spec = basic_spec();
        const double rate = 100.0;
        const auto c = synthesize_chromatogram(spec, 120.0, rate);
        const auto detected = detect_peak(c, {40.0, 80.0});
        const auto wide = static_cast<std::size_t>(5.0 * spec.sigma_s * rate);
        PeakRegion region{detected.apex_index - wide, detected.apex_index,
                          detected.apex_index + wide};
        const auto baseline = estimate_baseline(c, region);
        const double area = compute_area(c, region, baseline);
        const double expect = spec.amplitude * spec.sigma_s * std::sqrt(2.0 * std::numbers::pi);
        CHECK(area == doctest::Approx(expect).epsilon(1e-3));
    }
}

TEST_CASE("delta_tr arithmetic") {
    CHECK(delta_tr(8.00, 8.01) == doctest::Approx(-0.01).epsilon(1e-12));
    CHECK(delta_tr(7.25, 7.25) == 0.0);
    CHECK(delta_tr(9.5, 8.0) == doctest::Approx(1.5));
    CHECK(delta_tr(3.0, 4.5) == doctest::Approx(-delta_tr(4.5, 3.0)));
    CHECK_THROWS_AS((void)delta_tr(-1.0, 2.0), Error);
}

TEST_CASE("intensity scaling and time shifts act as expected on metrics") {
    auto spec = basic_spec();
    spec.tau_s = 1.5;
    auto m = synth_and_detect(spec, 160.0, 50.0, 40.0, 100.0);
    const double q = compute_skewness(m.chrom, m.region, m.baseline);
    const double area = compute_area(m.chrom, m.region, m.baseline);
    const auto apex = refine_apex(m.chrom, m.region, m.baseline);

    SUBCASE("scaling intensities by c scales height and area, not skewness") {
        const double cscale = 3.5;
        Chromatogram scaled = m.chrom;
        for (auto& v : scaled.intensities) v *= cscale;
        std::vector<double> sbase = m.baseline;
        for (auto& v : sbase) v *= cscale;
        CHECK(compute_skewness(scaled, m.region, sbase) == doctest::Approx(q).epsilon(1e-12));
        CHECK(compute_area(scaled, m.region, sbase) ==
              doctest::Approx(cscale * area).epsilon(1e-12));
        const auto sapex = refine_apex(scaled, m.region, sbase);
        CHECK(sapex.height == doctest::Approx(cscale * apex.height).epsilon(1e-12));
    }
    SUBCASE("shifting the time axis shifts only the retention time") {
        const double shift = 17.0;
        Chromatogram moved = m.chrom;
        for (auto& t : moved.times) t += shift;
        CHECK(compute_skewness(moved, m.region, m.baseline) == doctest::Approx(q).epsilon(1e-9));
        CHECK(compute_area(moved, m.region, m.baseline) == doctest::Approx(area).epsilon(1e-9));
        const auto mapex = refine_apex(moved, m.region, m.baseline);
        CHECK(mapex.time_s == doctest::Approx(apex.time_s + shift).epsilon(1e-9));
    }
}

TEST_CASE("EMG skewness grows with tau at fixed sampling") {
    double prev = 0.0;
    for (double tau : {0.5, 1.0, 2.0, 4.0}) {
        auto spec = basic_spec();
        spec.sigma_s = 1.0;
        spec.tau_s = tau;
        auto m = synth_and_detect(spec, 200.0, 50.0, 40.0, 150.0);
        const double q = compute_skewness(m.chrom, m.region, m.baseline);
        CHECK(q > prev);
        prev = q;
    }
}

TEST_CASE("trapezoidal Gaussian area converges under sample-rate doubling") {
    auto area_at = [&](double rate) {
        auto m = synth_and_detect(basic_spec(), 120.0, rate, 40.0, 80.0);
        return compute_area(m.chrom, m.region, m.baseline);
    };
    const double a1 = area_at(50.0);  // 100 samples per sigma
    const double a2 = area_at(100.0); // doubled
    CHECK(std::abs(a2 - a1) / a1 < 1e-4);
}

TEST_CASE("measure_peak assembles all metrics coherently") {
    auto spec = basic_spec();
    spec.tau_s = 3.0;
    spec.noise_sigma = 0.05;
    spec.rng_seed = 21;
    const auto c = synthesize_chromatogram(spec, 240.0, 20.0, "full");
    const auto region = detect_peak(c, {40.0, 100.0});
    const auto baseline = estimate_baseline(c, region);
    const auto noise = estimate_noise(c, {140.0, 240.0});
    std::string warning;
    const auto metrics = measure_peak(c, region, baseline, noise, &warning);

    const auto shape =
        oracle_emg_shape(spec.amplitude, spec.apex_time_s, spec.sigma_s, spec.tau_s);
    CHECK(warning.empty());
    CHECK(metrics.height == doctest::Approx(shape.apex_height).epsilon(0.02));
    CHECK(metrics.skewness > 1.0);
    CHECK(metrics.skewness == doctest::Approx(shape.skewness).epsilon(0.05));
    CHECK(metrics.area ==
          doctest::Approx(spec.amplitude * spec.sigma_s * std::sqrt(2.0 * std::numbers::pi))
              .epsilon(0.02));
    CHECK(metrics.retention_time_min == doctest::Approx(shape.apex_time / 60.0).epsilon(0.01));
    CHECK(metrics.snr == doctest::Approx(metrics.height / noise.rms).epsilon(1e-12));
}

TEST_CASE("measure_peak clamps a negative area with a warning") {
    Chromatogram c;
    c.id = "dip";
    for (int i = 0; i < 40; ++i) {
        c.times.push_back(static_cast<double>(i));
        double v = 0.0;
        if (i == 20) v = 1.0;            // narrow spike
        if (i >= 15 && i <= 25 && i != 20) v = -0.4; // wide dip around it
        c.intensities.push_back(v);
    }
    PeakRegion region{14, 20, 26};
    const std::vector<double> base(13, 0.0);
    NoiseEstimate noise{0.1, false};
    std::string warning;
    const auto metrics = measure_peak(c, region, base, noise, &warning);
    CHECK(metrics.area == 0.0);
    CHECK_FALSE(warning.empty());
}

TEST_CASE("validate rejects malformed chromatograms") {
    Chromatogram c;
    c.id = "bad";
    c.times = {0.0, 1.0, 1.0};
    c.intensities = {0.0, 1.0, 0.0};
    CHECK_THROWS_AS(validate(c), Error);
    c.times = {0.0, 1.0};
    CHECK_THROWS_AS(validate(c), Error);
    c.times = {0.0, 1.0, 2.0};
    c.intensities = {0.0, std::nan(""), 0.0};
    CHECK_THROWS_AS(validate(c), Error);
}
