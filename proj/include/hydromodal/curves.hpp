#pragma once
// Dispersion-curve extraction from separated modal spectrograms.
//
// Two estimators of the modal travel time per frequency row: the maximum
// method (argmax over time, refined sub-grid) and the mean method (weighted
// first moment). Both mask entries whose ridge power falls below an absolute
// threshold P = p * max(S); the surviving set of frequencies is the curve's
// significant support.
//
// Window-width rules: sigma_lim(w) = w_c/3 - w/4 (clamped at the record
// floor), the two-candidate optimum for the maximum method, and the
// noise-power law for the mean method with a fixture-calibrated prefactor.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "core.hpp"
#include "detail/util.hpp"
#include "tfr.hpp"
#include "waveguide.hpp"

namespace hydromodal::curves {

struct DispersionCurve {
    int mode = 0;
    std::vector<double> omega;        // rad/s
    std::vector<double> t_app;        // seconds, NaN where invalid
    std::vector<double> ridge_power;  // spectrogram power along the estimate
    std::vector<bool> valid;          // the significant support

    std::size_t valid_count() const {
        std::size_t n = 0;
        for (bool v : valid) n += v ? 1 : 0;
        return n;
    }
};

using DispersionCurveSet = std::vector<DispersionCurve>;

enum class ExtractionMethod { maximum, mean };

struct ExtractionConfig {
    ExtractionMethod method = ExtractionMethod::maximum;
    double sigma_rad = 0.0;     // spectrogram window; pipeline default 2*pi*(5*f_max/100)
    double threshold_abs = 0.0;  // P = p * max(S)
    double t_w = std::numeric_limits<double>::quiet_NaN();           // mean-method weight width
    double weight_center = std::numeric_limits<double>::quiet_NaN(); // NaN: energy centroid
};

/// argmax over time per frequency row, refined by a three-point parabola on
/// the log-power (exact for a Gaussian ridge). Rows whose peak power falls
/// below the absolute threshold are masked invalid.
inline DispersionCurve extract_max(const tfr::Spectrogram& sp, int mode, double threshold_abs) {
    DispersionCurve curve;
    curve.mode = mode;
    curve.omega = sp.freqs;
    std::size_t rows = sp.rows(), cols = sp.cols();
    curve.t_app.assign(rows, std::numeric_limits<double>::quiet_NaN());
    curve.ridge_power.assign(rows, 0.0);
    curve.valid.assign(rows, false);
    if (cols == 0) return curve;
    detail::parallel_for(rows, [&](std::size_t r) {
        std::size_t best = 0;
        double bv = -1.0;
        for (std::size_t c = 0; c < cols; ++c) {
            double v = sp.power_at(r, c);
            if (v > bv) {
                bv = v;
                best = c;
            }
        }
        curve.ridge_power[r] = bv;
        if (!(bv >= threshold_abs) || bv <= 0.0) return;
        double offset = 0.0;
        if (best > 0 && best + 1 < cols)
            offset = detail::refine_peak_offset(sp.power_at(r, best - 1), bv, sp.power_at(r, best + 1));
        double dt_col = cols > 1 ? sp.times[1] - sp.times[0] : 0.0;
        curve.t_app[r] = sp.times[best] + offset * dt_col;
        curve.valid[r] = true;
    });
    return curve;
}

/// Weighted first moment per frequency row with phi(t) = exp(-(t-c)^2 /
/// (2 T_w^2)). The weight center defaults to the spectrogram's energy
/// centroid since the absolute time origin of a record is arbitrary; pass an
/// explicit center of 0 for the textbook estimator.
inline DispersionCurve extract_mean(const tfr::Spectrogram& sp, int mode, double t_w, double threshold_abs,
                                    double weight_center = std::numeric_limits<double>::quiet_NaN()) {
    if (!(t_w > 0.0)) throw ConfigError("extract_mean: T_w must be > 0");
    DispersionCurve curve;
    curve.mode = mode;
    curve.omega = sp.freqs;
    std::size_t rows = sp.rows(), cols = sp.cols();
    curve.t_app.assign(rows, std::numeric_limits<double>::quiet_NaN());
    curve.ridge_power.assign(rows, 0.0);
    curve.valid.assign(rows, false);
    if (cols == 0) return curve;

    double center = weight_center;
    if (std::isnan(center)) {
        double num = 0.0, den = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            double col_power = 0.0;
            for (std::size_t r = 0; r < rows; ++r) col_power += sp.power_at(r, c);
            num += sp.times[c] * col_power;
            den += col_power;
        }
        center = den > 0.0 ? num / den : 0.5 * (sp.times.front() + sp.times.back());
    }

    detail::parallel_for(rows, [&](std::size_t r) {
        double num = 0.0, den = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            double t = sp.times[c];
            double phi = std::exp(-(t - center) * (t - center) / (2.0 * t_w * t_w));
            double w = phi * sp.power_at(r, c);
            num += t * w;
            den += w;
        }
        if (den <= 0.0) return;  // all-zero column stays invalid
        double t_est = num / den;
        // ridge power at the estimate, linearly interpolated along the row
        double x = (t_est - sp.times.front()) / (sp.times[1] - sp.times[0]);
        auto c0 = static_cast<long long>(std::floor(x));
        double ridge;
        if (c0 < 0)
            ridge = sp.power_at(r, 0);
        else if (c0 + 1 >= static_cast<long long>(cols))
            ridge = sp.power_at(r, cols - 1);
        else {
            double a = x - static_cast<double>(c0);
            ridge = sp.power_at(r, static_cast<std::size_t>(c0)) * (1.0 - a) +
                    sp.power_at(r, static_cast<std::size_t>(c0) + 1) * a;
        }
        curve.ridge_power[r] = ridge;
        if (ridge >= threshold_abs && ridge > 0.0) {
            curve.t_app[r] = t_est;
            curve.valid[r] = true;
        }
    });
    return curve;
}

/// Re-threshold a curve at p * global_max. Raising p never grows the support.
inline std::vector<bool> significant_support(const DispersionCurve& curve, double p, double global_max) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("significant_support: need 0 < p < 1");
    std::vector<bool> mask(curve.omega.size(), false);
    for (std::size_t i = 0; i < mask.size(); ++i)
        mask[i] = !std::isnan(curve.t_app[i]) && curve.ridge_power[i] > p * global_max;
    return mask;
}

// ---------------------------------------------------------------- window-width rules

struct SigmaChoice {
    double sigma = 0.0;  // rad/s
    bool clamped = false;
};

/// sigma_lim(w) = w_c/3 - w/4, clamped below at the record floor. The
/// formula crosses zero at w = 4 w_c / 3, which covers most of a mode's
/// band; the clamp is recorded so callers can tell.
inline SigmaChoice sigma_lim(double omega_c, double omega, double floor = 0.0) {
    double v = omega_c / 3.0 - omega / 4.0;
    if (v <= floor) return {floor, true};
    return {v, false};
}

/// Second optimum candidate for the maximum method:
/// (3 nu 2^{-11/4} / curvature)^{2/5}, nu the noise level delta sqrt(T)/|A|,
/// curvature the sup of |Phi''| over the band (the amplitude-sup ratio is
/// taken as 1, which matches probes near the mode's energy peak).
inline double sigma_opt_max_candidate(double noise_level, double phase_curvature) {
    if (!(phase_curvature > 0.0)) throw ConfigError("sigma_opt_max: curvature must be > 0");
    if (noise_level <= 0.0) return 0.0;
    return std::pow(3.0 * noise_level * std::pow(2.0, -11.0 / 4.0) / phase_curvature, 2.0 / 5.0);
}

/// Optimal window for the maximum method: evaluates sigma_lim against the
/// noise-balance candidate with an optional empirical probe (extraction
/// error as a function of sigma); without a probe, sigma_lim wins, which is
/// the common regime.
inline double sigma_opt_max(double omega_c, double omega, double noise_level, double phase_curvature,
                            double floor = 0.0,
                            const std::function<double(double)>& probe_error = nullptr) {
    double c1 = sigma_lim(omega_c, omega, floor).sigma;
    double c2 = sigma_opt_max_candidate(noise_level, phase_curvature);
    if (c2 <= floor || c2 <= 0.0) return c1;
    if (!probe_error) return c1;
    return probe_error(c1) <= probe_error(c2) ? c1 : c2;
}

/// Mean-method optimum prefactor, calibrated once on the synthetic fixture
/// at noise level 0.1 (grid search over sigma; see the curves test suite).
inline constexpr double kMeanSigmaPrefactor = 1.0;

/// sigma_opt for the mean method: K * (|A|/||A'||)^{4/5} * nu^{2/5}.
/// amplitude_ratio is ||A_n'||_inf / |A_n(w)|.
inline double sigma_opt_mean(double noise_level, double amplitude_ratio, double floor = 0.0,
                             double prefactor = kMeanSigmaPrefactor) {
    if (!(amplitude_ratio > 0.0)) throw ConfigError("sigma_opt_mean: amplitude ratio must be > 0");
    double v = noise_level <= 0.0
                   ? 0.0
                   : prefactor * std::pow(amplitude_ratio, -4.0 / 5.0) * std::pow(noise_level, 2.0 / 5.0);
    return std::max(v, floor);
}

// ---------------------------------------------------------------- model-side aids

/// sup |dA_n/dw| over the mode's band, finite differences on a model grid.
inline double amplitude_deriv_sup(const waveguide::WaveguideParams& p, int n, double f_lo_hz, double f_hi_hz,
                                  std::size_t samples = 200) {
    auto grid = detail::linspace(f_lo_hz, f_hi_hz, samples);
    double sup = 0.0;
    double prev_a = std::numeric_limits<double>::quiet_NaN(), prev_w = 0.0;
    for (double f : grid) {
        double w = hz_to_rad(f);
        double a;
        try {
            a = std::abs(waveguide::mode_amplitude(p, w, n));
        } catch (const EvanescentModeError&) {
            continue;
        }
        if (!std::isnan(prev_a)) sup = std::max(sup, std::abs(a - prev_a) / (w - prev_w));
        prev_a = a;
        prev_w = w;
    }
    return sup;
}

/// sup |Phi_n''| = sup |d t_n / d w| over the band, away from the cutoff
/// where the derivative diverges.
inline double phase_curvature_sup(const waveguide::WaveguideParams& p, int n, double f_lo_hz, double f_hi_hz,
                                  std::size_t samples = 200) {
    double wc = waveguide::cutoff_omega(p, n);
    auto grid = detail::linspace(f_lo_hz, f_hi_hz, samples);
    double sup = 0.0;
    double prev_t = std::numeric_limits<double>::quiet_NaN(), prev_w = 0.0;
    for (double f : grid) {
        double w = hz_to_rad(f);
        if (w < 1.05 * wc) continue;
        double t = waveguide::group_delay(p, w, n);
        if (!std::isnan(prev_t)) sup = std::max(sup, std::abs(t - prev_t) / (w - prev_w));
        prev_t = t;
        prev_w = w;
    }
    return sup;
}

}  // namespace hydromodal::curves
