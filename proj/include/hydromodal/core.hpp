#pragma once
// Basic shared types and error taxonomy for the hydromodal library.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace hydromodal {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

inline double hz_to_rad(double f) { return kTwoPi * f; }
inline double rad_to_hz(double w) { return w / kTwoPi; }

/// Uniformly sampled real signal.
struct TimeSeries {
    std::vector<double> samples;
    double sample_rate = 1.0;  // Hz
    double start_time = 0.0;   // seconds, time of samples[0]

    TimeSeries() = default;
    TimeSeries(std::vector<double> s, double fs, double t0 = 0.0)
        : samples(std::move(s)), sample_rate(fs), start_time(t0) {}

    std::size_t size() const { return samples.size(); }
    double dt() const { return 1.0 / sample_rate; }
    double time_at(std::size_t i) const { return start_time + static_cast<double>(i) / sample_rate; }
    double end_time() const { return samples.empty() ? start_time : time_at(samples.size() - 1); }
    double duration() const { return samples.empty() ? 0.0 : static_cast<double>(samples.size()) / sample_rate; }

    bool all_finite() const {
        for (double v : samples)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

/// Invalid configuration or precondition violation (maps to CLI exit code 2).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure inside an algorithm (maps to CLI exit code 3).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Requested mode does not propagate at the requested frequency.
struct EvanescentModeError : NumericalError {
    int mode = 0;
    double omega = 0.0;    // rad/s
    double omega_c = 0.0;  // rad/s
    EvanescentModeError(int n, double w, double wc)
        : NumericalError("mode evanescent: n=" + std::to_string(n) + " at omega=" + std::to_string(w) +
                         " rad/s (cutoff " + std::to_string(wc) + " rad/s)"),
          mode(n), omega(w), omega_c(wc) {}
};

/// Root bracketing failed; carries the scanned bracket for diagnosis.
struct BracketError : NumericalError {
    double lo = 0.0, hi = 0.0;
    BracketError(const std::string& what, double lo_, double hi_)
        : NumericalError(what + " [scanned bracket " + std::to_string(lo_) + ", " + std::to_string(hi_) + "]"),
          lo(lo_), hi(hi_) {}
};

}  // namespace hydromodal
