#pragma once
// Two-layer shallow-water forward model.
//
// Geometry: water column 0 < z < D (speed c_w, density rho_w) over a fluid
// half-space z > D (speed c_b, density rho_b), pressure-release surface at
// z = 0. Trapped modes exist for c_b > c_w with horizontal wavenumbers
// k_n in (w/c_b, w/c_w) solving
//
//     tan(D*gw) = -(rho_b/rho_w) * gw/gb,
//     gw = sqrt(w^2/c_w^2 - k^2),  gb = sqrt(k^2 - w^2/c_b^2).
//
// Cutoffs:  D * w_c * sqrt(1/c_w^2 - 1/c_b^2) = (2n-1)*pi/2.
// Modal travel time at range r: t_n(w) = r * dk_n/dw, computed by implicit
// differentiation of the relation above.
//
// A perfectly reflecting (rigid-bottom) variant is provided as well; its
// closed forms serve as oracles and as the source of the classic
// constant-frequency warping result.

#include <algorithm>
#include <complex>
#include <optional>
#include <vector>

#include "core.hpp"
#include "detail/fft.hpp"
#include "detail/util.hpp"

namespace hydromodal::waveguide {

struct WaveguideParams {
    double range = 0.0;          // r, meters
    double c_water = 0.0;        // m/s
    double c_bottom = 0.0;       // m/s
    double rho_water = 0.0;      // kg/m^3
    double rho_bottom = 0.0;     // kg/m^3
    double depth = 0.0;          // D, meters
    double dt = 0.0;             // emission-time offset, seconds (arrivals at t_n - dt)
    double z_source = 0.0;       // meters
    double z_receiver = 0.0;     // meters

    void validate() const {
        if (!(range > 0.0)) throw ConfigError("waveguide: range must be > 0");
        if (!(depth > 0.0)) throw ConfigError("waveguide: depth must be > 0");
        if (!(c_water > 0.0) || !(c_bottom > c_water))
            throw ConfigError("waveguide: need c_bottom > c_water > 0 (trapped modes)");
        if (!(rho_water > 0.0) || !(rho_bottom > 0.0)) throw ConfigError("waveguide: densities must be > 0");
        if (!(z_source > 0.0 && z_source < depth)) throw ConfigError("waveguide: need 0 < z_source < depth");
        if (!(z_receiver > 0.0 && z_receiver < depth)) throw ConfigError("waveguide: need 0 < z_receiver < depth");
    }

    /// sqrt(1/c_w^2 - 1/c_b^2); positive for a valid trapped-mode scene.
    double slowness_gap() const {
        return std::sqrt(1.0 / (c_water * c_water) - 1.0 / (c_bottom * c_bottom));
    }
};

/// Table I, line 1 scene (the synthetic study fixture). Source and receiver
/// sit at mid-depth; the emission offset is nonzero so that inversion has a
/// nontrivial dt to find.
inline WaveguideParams table1_fixture() {
    WaveguideParams p;
    p.range = 10'000.0;
    p.c_water = 1500.0;
    p.c_bottom = 1600.0;
    p.rho_water = 1000.0;
    p.rho_bottom = 1500.0;
    p.depth = 100.0;
    p.dt = 0.5;
    p.z_source = 50.0;
    p.z_receiver = 50.0;
    return p;
}

inline double cutoff_omega(const WaveguideParams& p, int n) {
    return (2.0 * n - 1.0) * kPi / (2.0 * p.depth * p.slowness_gap());
}

/// All modes with cutoff below 2*pi*f_max, in increasing mode order.
inline std::vector<std::pair<int, double>> cutoff_frequencies(const WaveguideParams& p, double f_max) {
    p.validate();
    if (!(f_max > 0.0)) throw ConfigError("cutoff_frequencies: f_max must be > 0");
    std::vector<std::pair<int, double>> out;
    double w_max = hz_to_rad(f_max);
    for (int n = 1;; ++n) {
        double wc = cutoff_omega(p, n);
        if (wc >= w_max) break;
        out.emplace_back(n, wc);
    }
    return out;
}

namespace detail_wg {

/// Singularity-free form of the dispersion relation in the water vertical
/// wavenumber gw:  H(gw) = gb*sin(D*gw) + g*gw*cos(D*gw),  g = rho_b/rho_w.
/// On the n-th branch gw in ((2n-1)pi/2D, min(n*pi/D, w*s)) H has exactly
/// one zero and opposite signs at the ends.
struct BranchFn {
    double D, g, ws;  // ws = w * slowness_gap
    double gb(double gw) const {
        double v = ws * ws - gw * gw;
        return v > 0.0 ? std::sqrt(v) : 0.0;
    }
    double operator()(double gw) const {
        return gb(gw) * std::sin(D * gw) + g * gw * std::cos(D * gw);
    }
    double derivative(double gw) const {
        double b = gb(gw);
        double dgb = b > 1e-300 ? -gw / b : 0.0;
        return dgb * std::sin(D * gw) + b * D * std::cos(D * gw) + g * std::cos(D * gw) -
               g * gw * D * std::sin(D * gw);
    }
};

/// Water vertical wavenumber of mode n at omega; throws below cutoff.
inline double solve_gamma_w(const WaveguideParams& p, double omega, int n) {
    double s = p.slowness_gap();
    double ws = omega * s;
    double lo = (2.0 * n - 1.0) * kPi / (2.0 * p.depth);
    if (ws <= lo) throw EvanescentModeError(n, omega, cutoff_omega(p, n));
    double hi = std::min(static_cast<double>(n) * kPi / p.depth, ws);
    BranchFn f{p.depth, p.rho_bottom / p.rho_water, ws};

    // Endpoint signs: H(lo+) = gb*(-1)^{n+1} (cos term vanishes),
    // H(hi) carries sign (-1)^n both at gw = n*pi/D and at gw = ws.
    double a = lo * (1.0 + 1e-14), b = hi * (1.0 - 1e-14);
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0.0) throw BracketError("dispersion root not bracketed", a, b);
    for (int it = 0; it < 200; ++it) {
        double m = 0.5 * (a + b);
        double fm = f(m);
        if (fm == 0.0) return m;
        if (fa * fm < 0.0) {
            b = m;
            fb = fm;
        } else {
            a = m;
            fa = fm;
        }
        if (b - a <= 1e-15 * b) break;
    }
    double root = 0.5 * (a + b);
    for (int it = 0; it < 4; ++it) {  // Newton polish inside the bracket
        double d = f.derivative(root);
        if (d == 0.0) break;
        double step = f(root) / d;
        double cand = root - step;
        if (cand <= a || cand >= b) break;
        root = cand;
    }
    return root;
}

}  // namespace detail_wg

/// Horizontal wavenumber k_n(omega) of the two-layer model.
inline double solve_wavenumber(const WaveguideParams& p, double omega, int n) {
    p.validate();
    if (!(omega > 0.0)) throw ConfigError("solve_wavenumber: omega must be > 0");
    double gw = detail_wg::solve_gamma_w(p, omega, n);
    double k2 = omega * omega / (p.c_water * p.c_water) - gw * gw;
    return std::sqrt(k2);
}

/// Relative residual of the dispersion relation at (omega, k); diagnostic.
inline double dispersion_residual(const WaveguideParams& p, double omega, double k) {
    double cw2 = omega * omega / (p.c_water * p.c_water) - k * k;
    double cb2 = k * k - omega * omega / (p.c_bottom * p.c_bottom);
    if (cw2 <= 0.0 || cb2 <= 0.0) return std::numeric_limits<double>::infinity();
    double gw = std::sqrt(cw2), gb = std::sqrt(cb2);
    double lhs = std::tan(p.depth * gw);
    double rhs = -(p.rho_bottom / p.rho_water) * gw / gb;
    return std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs)});
}

/// Modal travel time t_n(omega) = r * dk_n/domega via implicit
/// differentiation (no finite differences). tan(D*gw) is evaluated from the
/// relation itself, which keeps the expression stable near tangent branches.
inline double group_delay(const WaveguideParams& p, double omega, int n) {
    p.validate();
    double gw = detail_wg::solve_gamma_w(p, omega, n);
    double k = std::sqrt(omega * omega / (p.c_water * p.c_water) - gw * gw);
    double gb = std::sqrt(std::max(0.0, omega * omega * p.slowness_gap() * p.slowness_gap() - gw * gw));
    double g = p.rho_bottom / p.rho_water;
    if (gb < 1e-12 * gw) return p.range / p.c_bottom;  // at cutoff the mode travels at bottom speed
    double tan_dgw = -g * gw / gb;                     // exact at the root
    double sec2 = 1.0 + tan_dgw * tan_dgw;
    double P = p.depth * sec2 + g / gb;
    double gb3 = gb * gb * gb;
    double cw2 = p.c_water * p.c_water, cb2 = p.c_bottom * p.c_bottom;
    double num = P / (cw2 * gw) + g * gw / (cb2 * gb3);
    double den = P / gw + g * gw / gb3;
    return p.range * (omega / k) * (num / den);
}

/// Complex modal amplitude A_n(omega) for a flat unit source spectrum:
/// normalized mode functions at source/receiver depths with cylindrical
/// spreading, following the standard normal-mode field expansion.
inline std::complex<double> mode_amplitude(const WaveguideParams& p, double omega, int n) {
    double gw = detail_wg::solve_gamma_w(p, omega, n);
    double k = std::sqrt(omega * omega / (p.c_water * p.c_water) - gw * gw);
    double gb = std::sqrt(std::max(0.0, omega * omega * p.slowness_gap() * p.slowness_gap() - gw * gw));
    double sD = std::sin(gw * p.depth);
    // mode-function norm^2 with 1/rho weight, water layer + bottom tail
    double norm2 = (p.depth / 2.0 - std::sin(2.0 * gw * p.depth) / (4.0 * gw)) / p.rho_water;
    if (gb > 1e-300) norm2 += sD * sD / (2.0 * p.rho_bottom * gb);
    double psi_s = std::sin(gw * p.z_source) / std::sqrt(norm2);
    double psi_r = std::sin(gw * p.z_receiver) / std::sqrt(norm2);
    double mag = psi_s * psi_r / (p.rho_water * std::sqrt(8.0 * kPi * k * p.range));
    return std::polar(mag, kPi / 4.0);
}

// ---------------------------------------------------------------- mode tables

struct ModeTable {
    int mode = 0;
    double cutoff = 0.0;             // rad/s
    std::vector<double> omega;       // rad/s grid (shared across modes)
    std::vector<double> wavenumber;  // rad/m, NaN where invalid
    std::vector<double> travel_time; // seconds, NaN where invalid
    std::vector<bool> valid;

    bool valid_at(std::size_t i) const { return valid[i]; }
};

/// Batch evaluation of k_n and t_n over a frequency grid (Hz). Grid points
/// below or within 0.5% of a mode's cutoff are marked invalid rather than
/// producing the diverging near-cutoff delays.
inline std::vector<ModeTable> mode_table(const WaveguideParams& p, const std::vector<double>& f_grid_hz,
                                         double f_max) {
    p.validate();
    auto cuts = cutoff_frequencies(p, f_max);
    std::vector<ModeTable> tables(cuts.size());
    std::vector<double> wgrid(f_grid_hz.size());
    for (std::size_t i = 0; i < f_grid_hz.size(); ++i) wgrid[i] = hz_to_rad(f_grid_hz[i]);
    for (std::size_t mi = 0; mi < cuts.size(); ++mi) {
        auto& t = tables[mi];
        t.mode = cuts[mi].first;
        t.cutoff = cuts[mi].second;
        t.omega = wgrid;
        t.wavenumber.assign(wgrid.size(), std::numeric_limits<double>::quiet_NaN());
        t.travel_time.assign(wgrid.size(), std::numeric_limits<double>::quiet_NaN());
        t.valid.assign(wgrid.size(), false);
    }
    detail::parallel_for(wgrid.size(), [&](std::size_t i) {
        double w = wgrid[i];
        for (auto& t : tables) {
            if (!(w > t.cutoff * 1.005)) continue;  // near-cutoff delays diverge; keep invalid
            t.wavenumber[i] = solve_wavenumber(p, w, t.mode);
            t.travel_time[i] = group_delay(p, w, t.mode);
            t.valid[i] = true;
        }
    });
    return tables;
}

// ---------------------------------------------------------------- rigid-bottom oracle model

/// Perfectly reflecting bottom (dp/dz = 0 at z = D): closed forms.
namespace rigid {

inline double gamma_n(double depth, int n) { return (2.0 * n - 1.0) * kPi / (2.0 * depth); }

inline double cutoff_omega(const WaveguideParams& p, int n) { return gamma_n(p.depth, n) * p.c_water; }

inline double wavenumber(const WaveguideParams& p, double omega, int n) {
    double g = gamma_n(p.depth, n);
    double k2 = omega * omega / (p.c_water * p.c_water) - g * g;
    if (k2 <= 0.0) throw EvanescentModeError(n, omega, rigid::cutoff_omega(p, n));
    return std::sqrt(k2);
}

inline double group_delay(const WaveguideParams& p, double omega, int n) {
    double k = wavenumber(p, omega, n);
    return p.range * omega / (p.c_water * p.c_water * k);
}

inline std::complex<double> mode_amplitude(const WaveguideParams& p, double omega, int n) {
    double g = gamma_n(p.depth, n);
    double k = wavenumber(p, omega, n);
    double norm2 = p.depth / (2.0 * p.rho_water);
    double mag = std::sin(g * p.z_source) * std::sin(g * p.z_receiver) /
                 (norm2 * p.rho_water * std::sqrt(8.0 * kPi * k * p.range));
    return std::polar(mag, kPi / 4.0);
}

}  // namespace rigid

// ---------------------------------------------------------------- synthesis

enum class BottomModel { two_layer, rigid };

struct SynthesisOptions {
    double f_max_hz = 100.0;
    double duration = 20.0;      // seconds
    double sample_rate = 400.0;  // Hz
    BottomModel bottom = BottomModel::two_layer;
    std::optional<int> only_mode;  // synthesize a single modal component
};

/// Impulsive-source record at the receiver: the modal sum
/// u^(w) = sum_n A_n(w) exp(-i k_n(w) r) built on an FFT grid, band-limited
/// to f_max, then inverse-transformed. The emission offset dt moves arrivals
/// to t_n - dt, matching its role as the additive unknown in the misfit.
inline TimeSeries synthesize_signal(const WaveguideParams& p, const SynthesisOptions& opt) {
    p.validate();
    if (!(opt.sample_rate >= 2.0 * opt.f_max_hz))
        throw ConfigError("synthesize_signal: sample_rate must be >= 2*f_max (aliasing)");
    if (!(opt.duration > 0.0)) throw ConfigError("synthesize_signal: duration must be > 0");

    auto n_out = static_cast<std::size_t>(std::llround(opt.duration * opt.sample_rate));
    std::size_t n_fft = detail::next_pow2(std::max<std::size_t>(n_out, 2)) * 2;  // margin against circular wrap
    double df = opt.sample_rate / static_cast<double>(n_fft);

    std::vector<int> modes;
    if (opt.bottom == BottomModel::two_layer) {
        for (auto& [n, wc] : cutoff_frequencies(p, opt.f_max_hz)) {
            (void)wc;
            modes.push_back(n);
        }
    } else {
        for (int n = 1; rigid::cutoff_omega(p, n) < hz_to_rad(opt.f_max_hz); ++n) modes.push_back(n);
    }
    if (opt.only_mode) {
        std::vector<int> kept;
        for (int n : modes)
            if (n == *opt.only_mode) kept.push_back(n);
        modes = kept;
    }

    std::vector<std::complex<double>> spec(n_fft, 0.0);
    std::size_t j_hi = std::min(n_fft / 2, static_cast<std::size_t>(std::floor(opt.f_max_hz / df)));
    detail::parallel_for(j_hi, [&](std::size_t idx) {
        std::size_t j = idx + 1;  // skip DC
        double w = hz_to_rad(df * static_cast<double>(j));
        std::complex<double> u{0.0, 0.0};
        for (int n : modes) {
            try {
                double k;
                std::complex<double> a;
                if (opt.bottom == BottomModel::two_layer) {
                    k = solve_wavenumber(p, w, n);
                    a = mode_amplitude(p, w, n);
                } else {
                    k = rigid::wavenumber(p, w, n);
                    a = rigid::mode_amplitude(p, w, n);
                }
                u += a * std::polar(1.0, -k * p.range);
            } catch (const EvanescentModeError&) {
                // below cutoff at this bin
            }
        }
        // u(t + dt) <-> exp(i w dt) * u^(w): arrivals land at t_n - dt
        spec[j] = u * std::polar(1.0, w * p.dt);
    });
    for (std::size_t j = 1; j < n_fft / 2; ++j) spec[n_fft - j] = std::conj(spec[j]);
    spec[n_fft / 2] = 0.0;

    detail::fft(spec, true);
    std::vector<double> samples(n_out);
    for (std::size_t i = 0; i < n_out; ++i) samples[i] = spec[i].real() * opt.sample_rate;
    return TimeSeries(std::move(samples), opt.sample_rate, 0.0);
}

// ---------------------------------------------------------------- noise

/// Stationary Gaussian noise with Cov(W(t), W(t')) = delta^2 *
/// exp(-(t-t')^2 / (2 T_delta^2)), generated by shaping white noise with the
/// square-root of the covariance spectrum on a padded FFT grid.
struct NoiseModel {
    double delta = 0.0;    // amplitude
    double t_delta = 0.0;  // correlation time, seconds
    std::uint64_t seed = 0;
};

inline TimeSeries add_noise(const TimeSeries& ts, const NoiseModel& noise) {
    if (noise.delta < 0.0) throw ConfigError("add_noise: delta must be >= 0");
    if (!(noise.t_delta > 0.0)) throw ConfigError("add_noise: t_delta must be > 0");
    if (noise.t_delta < 2.0 / ts.sample_rate)
        throw ConfigError("add_noise: t_delta not resolvable at this sample rate (need t_delta >= 2/fs)");
    TimeSeries out = ts;
    if (noise.delta == 0.0) return out;

    std::size_t n = ts.size();
    std::size_t pad = detail::next_pow2(n + static_cast<std::size_t>(8.0 * noise.t_delta * ts.sample_rate) + 64);
    // circular covariance kernel; the Gaussian tail makes wraparound negligible
    std::vector<std::complex<double>> kernel(pad, 0.0);
    for (std::size_t m = 0; m < pad; ++m) {
        double lag = static_cast<double>(std::min(m, pad - m)) / ts.sample_rate;
        kernel[m] = noise.delta * noise.delta * std::exp(-lag * lag / (2.0 * noise.t_delta * noise.t_delta));
    }
    detail::fft(kernel, false);

    detail::NormalDraw draw(noise.seed);
    std::vector<std::complex<double>> white(pad);
    for (auto& w : white) w = draw.next();
    detail::fft(white, false);
    for (std::size_t j = 0; j < pad; ++j) {
        double s = std::max(0.0, kernel[j].real());  // PSD of a Gaussian kernel is >= 0
        white[j] *= std::sqrt(s);
    }
    detail::fft(white, true);
    for (std::size_t i = 0; i < n; ++i) out.samples[i] += white[i].real();
    return out;
}

}  // namespace hydromodal::waveguide
