#pragma once
// Time-frequency engine: Gaussian-window STFT / spectrogram, masked
// least-squares inversion back to the time domain, and the sqrt(t^2+t0^2)
// warping change of variables.
//
// Conventions: STFT(t,w) = integral u(tau) h(tau - t) e^{-i w tau} dtau with
// the absolute-time phase reference, h the unit-max-spectrum Gaussian
//   h(t) = sigma/sqrt(2 pi) * exp(-sigma^2 t^2 / 2),
//   h^(w) = exp(-w^2 / (2 sigma^2)),
// sigma in rad/s throughout (configs may speak Hz; convert with 2 pi).

#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "core.hpp"
#include "detail/fft.hpp"
#include "detail/util.hpp"

namespace hydromodal::tfr {

struct GaussianWindow {
    double sigma = 1.0;  // rad/s

    static GaussianWindow from_hz(double f) { return {hz_to_rad(f)}; }

    double h(double t) const { return sigma / std::sqrt(kTwoPi) * std::exp(-0.5 * sigma * sigma * t * t); }
    double h_hat(double w) const { return std::exp(-w * w / (2.0 * sigma * sigma)); }
    double time_sd() const { return 1.0 / sigma; }
    /// effective support in seconds (+-3 standard deviations)
    double support() const { return 6.0 / sigma; }
    /// analytic window energy: integral h^2 dt = sigma / (2 sqrt(pi))
    double energy() const { return sigma / (2.0 * std::sqrt(kPi)); }
};

/// Smallest sigma whose window support fits the record (spectrogram hard floor).
inline double sigma_floor(double record_duration) { return 6.0 / record_duration; }

// ---------------------------------------------------------------- spectrogram

struct StftPlan {
    std::size_t hop = 1;          // samples between columns
    std::size_t fft_size = 0;     // power of two
    std::size_t half_window = 0;  // window half length in samples
    std::size_t rows = 0;         // frequency bins kept, starting at bin 0
};

/// Grid defaults: one column per `hop` samples, FFT size the next power of
/// two >= fft_factor * window length, rows kept up to f_hi_hz.
inline StftPlan make_stft_plan(const TimeSeries& ts, double sigma_rad, double f_hi_hz, std::size_t hop = 1,
                               int fft_factor = 4) {
    if (!(sigma_rad > 0.0)) throw ConfigError("stft: sigma must be > 0");
    if (6.0 / sigma_rad > ts.duration())
        throw ConfigError("stft: window support 6/sigma exceeds the record length");
    if (hop == 0) throw ConfigError("stft: hop must be >= 1");
    StftPlan plan;
    plan.hop = hop;
    plan.half_window = static_cast<std::size_t>(std::ceil(3.0 / sigma_rad * ts.sample_rate));
    std::size_t window_len = 2 * plan.half_window + 1;
    plan.fft_size = detail::next_pow2(window_len * static_cast<std::size_t>(std::max(1, fft_factor)));
    double df = ts.sample_rate / static_cast<double>(plan.fft_size);
    auto max_rows = plan.fft_size / 2 + 1;
    plan.rows = std::min<std::size_t>(max_rows, static_cast<std::size_t>(std::floor(f_hi_hz / df)) + 1);
    return plan;
}

struct Spectrogram {
    GaussianWindow window;
    double sample_rate = 0.0;
    double record_start = 0.0;
    std::size_t record_length = 0;
    StftPlan plan;
    bool fft_aligned = false;  // true when built from a plan (invertible)

    std::vector<double> times;                // column centers, seconds
    std::vector<double> freqs;                // row frequencies, rad/s
    std::vector<std::complex<double>> stft;   // row-major rows x cols
    std::vector<double> power;                // |stft|^2, same layout

    std::size_t rows() const { return freqs.size(); }
    std::size_t cols() const { return times.size(); }
    std::size_t idx(std::size_t r, std::size_t c) const { return r * cols() + c; }
    double power_at(std::size_t r, std::size_t c) const { return power[idx(r, c)]; }

    double max_power() const {
        double m = 0.0;
        for (double v : power) m = std::max(m, v);
        return m;
    }

    /// nearest row to a frequency given in Hz
    std::size_t row_near_hz(double f_hz) const {
        double w = hz_to_rad(f_hz);
        std::size_t best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < freqs.size(); ++r) {
            double d = std::abs(freqs[r] - w);
            if (d < bd) {
                bd = d;
                best = r;
            }
        }
        return best;
    }
};

/// Windowed-FFT spectrogram on the plan's grid.
inline Spectrogram spectrogram(const TimeSeries& ts, double sigma_rad, const StftPlan& plan) {
    GaussianWindow win{sigma_rad};
    Spectrogram sp;
    sp.window = win;
    sp.sample_rate = ts.sample_rate;
    sp.record_start = ts.start_time;
    sp.record_length = ts.size();
    sp.plan = plan;
    sp.fft_aligned = true;

    std::size_t n = ts.size();
    std::size_t cols = (n + plan.hop - 1) / plan.hop;
    sp.times.resize(cols);
    for (std::size_t c = 0; c < cols; ++c) sp.times[c] = ts.time_at(c * plan.hop);
    double df = ts.sample_rate / static_cast<double>(plan.fft_size);
    sp.freqs.resize(plan.rows);
    for (std::size_t r = 0; r < plan.rows; ++r) sp.freqs[r] = hz_to_rad(df * static_cast<double>(r));

    sp.stft.assign(plan.rows * cols, {0.0, 0.0});
    sp.power.assign(plan.rows * cols, 0.0);
    double inv_fs = 1.0 / ts.sample_rate;

    detail::parallel_for(cols, [&](std::size_t c) {
        std::vector<std::complex<double>> buf(plan.fft_size, 0.0);
        auto center = static_cast<long long>(c * plan.hop);
        long long m0 = center - static_cast<long long>(plan.half_window);
        long long m1 = center + static_cast<long long>(plan.half_window);
        for (long long m = std::max<long long>(0, m0); m <= std::min<long long>(m1, static_cast<long long>(n) - 1);
             ++m) {
            double t_rel = static_cast<double>(m - center) * inv_fs;
            buf[static_cast<std::size_t>(m - m0)] = ts.samples[static_cast<std::size_t>(m)] * win.h(t_rel);
        }
        detail::fft_inplace(buf.data(), plan.fft_size, false);
        double tau0 = ts.start_time + static_cast<double>(m0) * inv_fs;
        for (std::size_t r = 0; r < plan.rows; ++r) {
            std::complex<double> v = buf[r] * std::polar(inv_fs, -sp.freqs[r] * tau0);
            sp.stft[sp.idx(r, c)] = v;
            sp.power[sp.idx(r, c)] = std::norm(v);
        }
    });
    return sp;
}

inline Spectrogram spectrogram(const TimeSeries& ts, double sigma_rad, double f_hi_hz, std::size_t hop = 1) {
    return spectrogram(ts, sigma_rad, make_stft_plan(ts, sigma_rad, f_hi_hz, hop));
}

/// Direct evaluation of the STFT at arbitrary grid points. O(times *
/// freqs * window) — meant for tests and small probes, and as an
/// independent route against the windowed-FFT path.
inline Spectrogram spectrogram_at(const TimeSeries& ts, double sigma_rad, const std::vector<double>& times,
                                  const std::vector<double>& freqs_rad) {
    GaussianWindow win{sigma_rad};
    Spectrogram sp;
    sp.window = win;
    sp.sample_rate = ts.sample_rate;
    sp.record_start = ts.start_time;
    sp.record_length = ts.size();
    sp.fft_aligned = false;
    sp.times = times;
    sp.freqs = freqs_rad;
    sp.stft.assign(freqs_rad.size() * times.size(), {0.0, 0.0});
    sp.power.assign(freqs_rad.size() * times.size(), 0.0);
    double inv_fs = 1.0 / ts.sample_rate;
    auto half = static_cast<long long>(std::ceil(3.0 / sigma_rad * ts.sample_rate));
    detail::parallel_for(times.size(), [&](std::size_t c) {
        double t = times[c];
        auto center = static_cast<long long>(std::llround((t - ts.start_time) * ts.sample_rate));
        for (std::size_t r = 0; r < freqs_rad.size(); ++r) {
            double w = freqs_rad[r];
            std::complex<double> acc{0.0, 0.0};
            for (long long m = std::max<long long>(0, center - half);
                 m <= std::min<long long>(center + half, static_cast<long long>(ts.size()) - 1); ++m) {
                double tau = ts.time_at(static_cast<std::size_t>(m));
                acc += ts.samples[static_cast<std::size_t>(m)] * win.h(tau - t) *
                       std::polar(1.0, -w * tau);
            }
            std::complex<double> v = acc * inv_fs;
            sp.stft[sp.idx(r, c)] = v;
            sp.power[sp.idx(r, c)] = std::norm(v);
        }
    });
    return sp;
}

/// Full-rate STFT along a single frequency, via FFT convolution.
/// row[i] = STFT(t_i, omega0) for every sample index i.
inline std::vector<std::complex<double>> stft_row(const TimeSeries& ts, double sigma_rad, double omega0) {
    GaussianWindow win{sigma_rad};
    std::size_t n = ts.size();
    auto half = static_cast<std::size_t>(std::ceil(3.0 / sigma_rad * ts.sample_rate));
    std::size_t pad = detail::next_pow2(n + 2 * half + 2);
    std::vector<std::complex<double>> v(pad, 0.0), kern(pad, 0.0);
    double inv_fs = 1.0 / ts.sample_rate;
    for (std::size_t m = 0; m < n; ++m)
        v[m] = ts.samples[m] * inv_fs * std::polar(1.0, -omega0 * ts.time_at(m));
    for (long long j = -static_cast<long long>(half); j <= static_cast<long long>(half); ++j) {
        double w = win.h(static_cast<double>(j) * inv_fs);
        kern[static_cast<std::size_t>((j + static_cast<long long>(pad)) % pad)] = w;
    }
    detail::fft(v, false);
    detail::fft(kern, false);
    for (std::size_t j = 0; j < pad; ++j) v[j] *= kern[j];
    detail::fft(v, true);
    v.resize(n);
    return v;
}

// ---------------------------------------------------------------- masked inversion

/// Least-squares signal reconstruction from a masked complex STFT
/// (overlap-add with window-energy normalization, analysis phase kept).
/// An all-zero mask yields the zero signal.
inline TimeSeries invert_masked_stft(const Spectrogram& sp, const std::vector<std::uint8_t>& mask) {
    if (!sp.fft_aligned) throw ConfigError("invert_masked_stft: spectrogram was not built on an FFT grid");
    if (mask.size() != sp.stft.size()) throw ConfigError("invert_masked_stft: mask dimensions do not match");

    std::size_t n = sp.record_length;
    std::size_t nfft = sp.plan.fft_size;
    std::vector<double> acc(n, 0.0), wsum(n, 0.0);
    std::vector<std::complex<double>> frame(nfft);
    double fs = sp.sample_rate;

    for (std::size_t c = 0; c < sp.cols(); ++c) {
        std::fill(frame.begin(), frame.end(), std::complex<double>{0.0, 0.0});
        auto center = static_cast<long long>(c * sp.plan.hop);
        long long m0 = center - static_cast<long long>(sp.plan.half_window);
        double tau0 = sp.record_start + static_cast<double>(m0) / fs;
        bool any = false;
        for (std::size_t r = 0; r < sp.rows(); ++r) {
            if (!mask[sp.idx(r, c)]) continue;
            std::complex<double> v = sp.stft[sp.idx(r, c)] * std::polar(fs, sp.freqs[r] * tau0);
            frame[r] = v;
            if (r > 0 && r < nfft - r) frame[nfft - r] = std::conj(v);
            any = any || (v != std::complex<double>{0.0, 0.0});
        }
        if (any) detail::fft_inplace(frame.data(), nfft, true);
        double scale = any ? 1.0 / static_cast<double>(nfft) : 0.0;
        long long m1 = center + static_cast<long long>(sp.plan.half_window);
        for (long long m = std::max<long long>(0, m0); m <= std::min<long long>(m1, static_cast<long long>(n) - 1);
             ++m) {
            double w = sp.window.h(static_cast<double>(m - center) / fs);
            if (any) acc[static_cast<std::size_t>(m)] += frame[static_cast<std::size_t>(m - m0)].real() * scale * w;
            wsum[static_cast<std::size_t>(m)] += w * w;
        }
    }
    double wmax = 0.0;
    for (double w : wsum) wmax = std::max(wmax, w);
    double floor = 1e-8 * wmax;
    std::vector<double> out(n, 0.0);
    for (std::size_t m = 0; m < n; ++m)
        if (wsum[m] > floor) out[m] = acc[m] / wsum[m];
    return TimeSeries(std::move(out), fs, sp.record_start);
}

// ---------------------------------------------------------------- warping

/// Time-axis change of variables psi(t) = sqrt(t^2 + t0^2). The printed
/// operator weight is implemented as sqrt(psi'(t)), which makes the warp
/// unitary and the inverse-warp step well posed.
struct WarpMap {
    double t0 = 1.0;  // seconds, > 0

    double psi(double t) const { return std::sqrt(t * t + t0 * t0); }
    double psi_inv(double t) const { return std::sqrt(std::max(0.0, t * t - t0 * t0)); }
    double dpsi(double t) const { return t / psi(t); }
    double dpsi_inv(double t) const {
        double d = psi_inv(t);
        return d > 0.0 ? t / d : std::numeric_limits<double>::infinity();
    }
};

/// u~(t) = sqrt(psi'(t)) u(psi(t)), band-limited interpolation at the
/// non-uniform points psi(t). Output grid starts at t = 0 (psi(0) = t0).
inline TimeSeries warp(const TimeSeries& ts, const WarpMap& map) {
    if (!(map.t0 > 0.0)) throw ConfigError("warp: t0 must be > 0");
    if (ts.start_time > map.t0 + 0.5 / ts.sample_rate)
        throw ConfigError("warp: record does not cover the warped support; missing interval [" +
                          std::to_string(map.t0) + ", " + std::to_string(ts.start_time) + ")");
    double t_end = map.psi_inv(ts.end_time());
    auto n_out = static_cast<std::size_t>(std::floor(t_end * ts.sample_rate)) + 1;
    std::vector<double> out(n_out);
    detail::SincInterpolator interp;
    detail::parallel_for(n_out, [&](std::size_t i) {
        double t = static_cast<double>(i) / ts.sample_rate;
        out[i] = std::sqrt(map.dpsi(t)) * interp(ts, map.psi(t));
    });
    return TimeSeries(std::move(out), ts.sample_rate, 0.0);
}

/// Mirror of warp: u(t) = sqrt((psi^-1)'(t)) u~(psi^-1(t)) on an explicit
/// output grid (start time and count), which lets callers align the result
/// with an original record for subtraction.
inline TimeSeries unwarp(const TimeSeries& warped, const WarpMap& map, double out_start, std::size_t out_count) {
    if (!(map.t0 > 0.0)) throw ConfigError("unwarp: t0 must be > 0");
    if (out_count == 0) throw ConfigError("unwarp: empty output grid");
    if (out_start <= map.t0)
        throw ConfigError("unwarp: output support must start after t0; missing interval [" +
                          std::to_string(out_start) + ", " + std::to_string(map.t0) + "]");
    double fs = warped.sample_rate;
    double last = out_start + static_cast<double>(out_count - 1) / fs;
    if (map.psi_inv(last) > warped.end_time() + 0.5 / fs)
        throw ConfigError("unwarp: warped record does not cover the requested support; missing interval [" +
                          std::to_string(warped.end_time()) + ", " + std::to_string(map.psi_inv(last)) + "]");
    std::vector<double> out(out_count);
    detail::SincInterpolator interp;
    detail::parallel_for(out_count, [&](std::size_t i) {
        double t = out_start + static_cast<double>(i) / fs;
        out[i] = std::sqrt(map.dpsi_inv(t)) * interp(warped, map.psi_inv(t));
    });
    return TimeSeries(std::move(out), fs, out_start);
}

/// Dispersion-curve counterpart of the warp:
/// w~(t) = psi'(t) * w(psi(t)).
inline std::function<double(double)> warped_curve(std::function<double(double)> omega_of_t, const WarpMap& map) {
    return [omega_of_t = std::move(omega_of_t), map](double t) { return map.dpsi(t) * omega_of_t(map.psi(t)); };
}

}  // namespace hydromodal::tfr
