#pragma once
// In-place iterative radix-2 complex FFT with cached twiddle tables.
// Power-of-two lengths only; callers pad.

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "../core.hpp"

namespace hydromodal::detail {

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

struct FftTables {
    std::vector<std::complex<double>> twiddle;  // e^{-2*pi*i*k/n}, k < n/2
    std::vector<std::size_t> bitrev;

    explicit FftTables(std::size_t n) : twiddle(n / 2), bitrev(n) {
        for (std::size_t k = 0; k < n / 2; ++k) {
            double a = -kTwoPi * static_cast<double>(k) / static_cast<double>(n);
            twiddle[k] = {std::cos(a), std::sin(a)};
        }
        std::size_t lg = 0;
        while ((std::size_t{1} << lg) < n) ++lg;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (std::size_t b = 0; b < lg; ++b)
                if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (lg - 1 - b);
            bitrev[i] = r;
        }
    }
};

inline const FftTables& fft_tables(std::size_t n) {
    static std::mutex mu;
    static std::map<std::size_t, std::unique_ptr<FftTables>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<FftTables>(n);
    return *slot;
}

/// In-place FFT (inverse = conjugate-twiddle variant, unnormalized).
inline void fft_inplace(std::complex<double>* x, std::size_t n, bool inverse) {
    if (n <= 1) return;
    const FftTables& t = fft_tables(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = t.bitrev[i];
        if (i < j) std::swap(x[i], x[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        std::size_t half = len >> 1;
        std::size_t step = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t j = 0; j < half; ++j) {
                std::complex<double> w = t.twiddle[j * step];
                if (inverse) w = std::conj(w);
                std::complex<double> u = x[i + j];
                std::complex<double> v = x[i + j + half] * w;
                x[i + j] = u + v;
                x[i + j + half] = u - v;
            }
        }
    }
}

inline void fft(std::vector<std::complex<double>>& x, bool inverse = false) {
    if (!is_pow2(x.size())) throw NumericalError("fft: length must be a power of two");
    fft_inplace(x.data(), x.size(), inverse);
    if (inverse) {
        double s = 1.0 / static_cast<double>(x.size());
        for (auto& v : x) v *= s;
    }
}

}  // namespace hydromodal::detail
