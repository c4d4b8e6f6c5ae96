#pragma once
// Small shared utilities: deterministic RNG, hashing, parallel loops,
// band-limited interpolation, image filters, peak refinement.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string_view>
#include <thread>
#include <vector>

#include "../core.hpp"

namespace hydromodal::detail {

// ---------------------------------------------------------------- rng

/// splitmix64; used both as a stream generator and to derive per-stage seeds.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    /// uniform in [0,1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Derive a child seed for a named stage/index from a top-level seed.
inline std::uint64_t derive_seed(std::uint64_t top, std::string_view stage, std::uint64_t index = 0) {
    std::uint64_t h = fnv1a64(stage);
    SplitMix64 mix(top ^ (h + 0x9e3779b97f4a7c15ULL * (index + 1)));
    mix.next();
    return mix.next();
}

/// Deterministic standard-normal draws (Box-Muller on splitmix64 uniforms).
/// std::normal_distribution is implementation-defined, so it is not used here.
struct NormalDraw {
    SplitMix64 rng;
    bool have_spare = false;
    double spare = 0.0;
    explicit NormalDraw(std::uint64_t seed) : rng(seed) {}
    double next() {
        if (have_spare) {
            have_spare = false;
            return spare;
        }
        double u1 = 0.0;
        do {
            u1 = rng.uniform();
        } while (u1 <= 1e-300);
        double u2 = rng.uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare = r * std::sin(kTwoPi * u2);
        have_spare = true;
        return r * std::cos(kTwoPi * u2);
    }
};

// ---------------------------------------------------------------- threads

inline unsigned worker_count() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

/// Run fn(i) for i in [0, n) on a few threads, contiguous chunks.
/// Results must be written to per-index slots; the split is deterministic.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    unsigned workers = std::min<std::size_t>(worker_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> threads;
    std::size_t chunk = (n + workers - 1) / workers;
    std::exception_ptr error;
    std::mutex error_mu;
    for (unsigned w = 0; w < workers; ++w) {
        std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        threads.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------- interpolation

inline double bessel_i0(double x) {
    // power series; converges quickly for the beta range used here
    double sum = 1.0, term = 1.0;
    double x2 = x * x / 4.0;
    for (int k = 1; k < 64; ++k) {
        term *= x2 / (static_cast<double>(k) * k);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

/// Kaiser-windowed sinc interpolator for band-limited resampling at
/// non-uniform points. 16 taps, beta 8.
struct SincInterpolator {
    static constexpr int kHalfTaps = 8;
    double beta = 8.0;
    double inv_i0_beta = 1.0 / bessel_i0(8.0);

    double kaiser(double frac) const {  // frac in [-1, 1]
        double a = 1.0 - frac * frac;
        if (a <= 0.0) return 0.0;
        return bessel_i0(beta * std::sqrt(a)) * inv_i0_beta;
    }

    /// Sample value of ts at absolute time t (0 outside the record).
    double operator()(const TimeSeries& ts, double t) const {
        double x = (t - ts.start_time) * ts.sample_rate;
        auto n = static_cast<long long>(ts.samples.size());
        if (x < -kHalfTaps || x > static_cast<double>(n - 1) + kHalfTaps) return 0.0;
        long long m0 = static_cast<long long>(std::floor(x)) - (kHalfTaps - 1);
        double acc = 0.0;
        for (long long m = m0; m < m0 + 2 * kHalfTaps; ++m) {
            if (m < 0 || m >= n) continue;
            double d = x - static_cast<double>(m);
            double s = (d == 0.0) ? 1.0 : std::sin(kPi * d) / (kPi * d);
            acc += ts.samples[static_cast<std::size_t>(m)] * s * kaiser(d / kHalfTaps);
        }
        return acc;
    }
};

// ---------------------------------------------------------------- filters

/// 3x3 median filter (edges replicated), used to tame spectrogram speckle
/// before watershed labeling.
inline std::vector<double> median3x3(const std::vector<double>& img, std::size_t rows, std::size_t cols) {
    std::vector<double> out(img.size());
    auto at = [&](long long r, long long c) {
        r = std::clamp<long long>(r, 0, static_cast<long long>(rows) - 1);
        c = std::clamp<long long>(c, 0, static_cast<long long>(cols) - 1);
        return img[static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(c)];
    };
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            std::array<double, 9> w;
            int k = 0;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc)
                    w[k++] = at(static_cast<long long>(r) + dr, static_cast<long long>(c) + dc);
            std::nth_element(w.begin(), w.begin() + 4, w.end());
            out[r * cols + c] = w[4];
        }
    }
    return out;
}

// ---------------------------------------------------------------- peaks

/// Sub-grid peak refinement around index i of a sampled positive function.
/// Uses a log-parabola (exact for Gaussian peaks) when the three values are
/// positive, a plain parabola otherwise. Returns the offset in grid steps,
/// clamped to [-0.5, 0.5].
inline double refine_peak_offset(double ym, double y0, double yp) {
    double a = ym, b = y0, c = yp;
    if (a > 0.0 && b > 0.0 && c > 0.0) {
        a = std::log(a);
        b = std::log(b);
        c = std::log(c);
    }
    double denom = a - 2.0 * b + c;
    if (denom >= 0.0 || !std::isfinite(denom)) return 0.0;
    double off = 0.5 * (a - c) / denom;
    return std::clamp(off, -0.5, 0.5);
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    for (std::size_t i = 0; i < n; ++i)
        v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

}  // namespace hydromodal::detail
