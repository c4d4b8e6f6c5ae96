#pragma once
// Parameter recovery: replica dispersion curves on the measured supports,
// the misfit functional J (trapezoid over each mode's significant support),
// the penalized functional J~ with prior-anchored quadratic terms, alpha
// calibration at the starting point, and a bound-constrained derivative-free
// simplex search with jittered restarts.
//
//   J(r, c_w, c_b, rho_w, rho_b, D, dt) =
//       sum_n  integral_{Omega_n} (t_n(params, w) - dt - t_app_n(w))^2 dw
//
//   J~ = J + alpha * ( |dD/D0|^2 + |drho_b/rho_b0|^2
//                      + 10 |drho_w/rho_w0|^2 + 10 |dc_w/c_w0|^2 )
//
// r, c_b and dt carry no penalty; alpha is set to J at the start point so
// the penalty enters at the same order as the misfit.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "curves.hpp"
#include "detail/util.hpp"
#include "waveguide.hpp"

namespace hydromodal::inversion {

struct Priors {
    double c_water = 1500.0;
    double rho_water = 1000.0;
    double rho_bottom = 1500.0;
    double depth = 100.0;
};

struct Bounds {
    double range_lo = 100.0, range_hi = 100'000.0;  // meters
    double c_water_lo = 1400.0, c_water_hi = 1600.0;
    double c_bottom_hi = 2200.0;  // lower bound is c_water itself
    double rho_water_lo = 900.0, rho_water_hi = 1100.0;
    double rho_bottom_lo = 1100.0, rho_bottom_hi = 2200.0;
    double depth_lo = 5.0, depth_hi = 500.0;
};

struct InversionOptions {
    Bounds bounds;
    int max_iterations = 600;  // per restart
    int restarts = 3;
    std::uint64_t seed = 1;
    double tolerance = 1e-12;  // relative spread of simplex values
    std::optional<double> forced_alpha;  // bypass calibration (0 disables the penalty)
};

struct InversionResult {
    waveguide::WaveguideParams params;  // recovered scene, dt included
    double misfit = 0.0;                // J at the recovered point
    double penalized = 0.0;             // J~ at the recovered point
    double alpha = 0.0;
    int iterations = 0;
    bool converged = true;
    std::vector<double> trace;  // best J~ after each accepted improvement
    double dev_c_water = 0.0, dev_rho_water = 0.0, dev_rho_bottom = 0.0, dev_depth = 0.0;
};

// ---------------------------------------------------------------- replica & misfit

struct ReplicaPoint {
    double travel_time = 0.0;
    bool evanescent = false;
};

/// Model dispersion curves evaluated on exactly the measured supports.
/// Points pushed below cutoff by the trial parameters come back flagged.
inline std::vector<std::vector<ReplicaPoint>> replica_curves(const waveguide::WaveguideParams& p,
                                                             const curves::DispersionCurveSet& measured) {
    std::vector<std::vector<ReplicaPoint>> out(measured.size());
    for (std::size_t m = 0; m < measured.size(); ++m) {
        const auto& curve = measured[m];
        out[m].assign(curve.omega.size(), {});
        for (std::size_t i = 0; i < curve.omega.size(); ++i) {
            if (!curve.valid[i]) continue;
            try {
                out[m][i].travel_time = waveguide::group_delay(p, curve.omega[i], curve.mode);
            } catch (const EvanescentModeError&) {
                out[m][i].evanescent = true;
            }
        }
    }
    return out;
}

/// Largest valid measured travel time (sets the evanescent-point penalty).
inline double max_measured_travel_time(const curves::DispersionCurveSet& measured) {
    double m = 0.0;
    for (const auto& curve : measured)
        for (std::size_t i = 0; i < curve.omega.size(); ++i)
            if (curve.valid[i]) m = std::max(m, curve.t_app[i]);
    return m;
}

/// J: trapezoid of squared residuals over each contiguous valid run of each
/// mode's support. A trial parameter set that pushes a measured point below
/// cutoff pays a flat residual 2 * max(t_app) so the functional stays
/// continuous instead of rewarding parameter sets that delete data.
inline double misfit(const waveguide::WaveguideParams& p, const curves::DispersionCurveSet& measured) {
    std::size_t n_valid = 0;
    for (const auto& curve : measured) n_valid += curve.valid_count();
    if (n_valid == 0) throw ConfigError("misfit: no valid measured points");

    double penalty_residual = 2.0 * max_measured_travel_time(measured);
    auto replicas = replica_curves(p, measured);
    double total = 0.0;
    for (std::size_t m = 0; m < measured.size(); ++m) {
        const auto& curve = measured[m];
        const auto& rep = replicas[m];
        std::size_t i = 0;
        while (i < curve.omega.size()) {
            if (!curve.valid[i]) {
                ++i;
                continue;
            }
            std::size_t run_end = i;
            while (run_end + 1 < curve.omega.size() && curve.valid[run_end + 1]) ++run_end;
            auto res_at = [&](std::size_t k) {
                if (rep[k].evanescent) return penalty_residual;
                return rep[k].travel_time - p.dt - curve.t_app[k];
            };
            for (std::size_t k = i; k < run_end; ++k) {
                double r0 = res_at(k), r1 = res_at(k + 1);
                total += 0.5 * (r0 * r0 + r1 * r1) * (curve.omega[k + 1] - curve.omega[k]);
            }
            i = run_end + 1;
        }
    }
    return total;
}

/// Total measure of the valid supports under the same trapezoid rule
/// (isolated single-point runs carry zero measure).
inline double support_measure(const curves::DispersionCurveSet& measured) {
    double total = 0.0;
    for (const auto& curve : measured) {
        for (std::size_t i = 0; i + 1 < curve.omega.size(); ++i)
            if (curve.valid[i] && curve.valid[i + 1]) total += curve.omega[i + 1] - curve.omega[i];
    }
    return total;
}

inline double penalty_term(const waveguide::WaveguideParams& p, const Priors& priors) {
    auto sq = [](double v) { return v * v; };
    return sq((p.depth - priors.depth) / priors.depth) + sq((p.rho_bottom - priors.rho_bottom) / priors.rho_bottom) +
           10.0 * sq((p.rho_water - priors.rho_water) / priors.rho_water) +
           10.0 * sq((p.c_water - priors.c_water) / priors.c_water);
}

inline double penalized_misfit(const waveguide::WaveguideParams& p, const curves::DispersionCurveSet& measured,
                               const Priors& priors, double alpha) {
    if (alpha < 0.0) throw ConfigError("penalized_misfit: alpha must be >= 0");
    return misfit(p, measured) + alpha * penalty_term(p, priors);
}

/// alpha <- J at the starting point, which puts the penalty on the same
/// footing as the initial misfit.
inline double calibrate_alpha(const waveguide::WaveguideParams& start, const curves::DispersionCurveSet& measured) {
    return misfit(start, measured);
}

// ---------------------------------------------------------------- simplex search

namespace detail_inv {

inline constexpr int kDim = 7;  // r, c_w, c_b, rho_w, rho_b, D, dt

struct Vec {
    std::array<double, kDim> v{};
    double& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
};

inline Vec to_vec(const waveguide::WaveguideParams& p) {
    Vec x;
    x[0] = p.range;
    x[1] = p.c_water;
    x[2] = p.c_bottom;
    x[3] = p.rho_water;
    x[4] = p.rho_bottom;
    x[5] = p.depth;
    x[6] = p.dt;
    return x;
}

inline waveguide::WaveguideParams to_params(const Vec& x) {
    waveguide::WaveguideParams p;
    p.range = x[0];
    p.c_water = x[1];
    p.c_bottom = x[2];
    p.rho_water = x[3];
    p.rho_bottom = x[4];
    p.depth = x[5];
    p.dt = x[6];
    p.z_source = p.depth / 2.0;  // travel times do not depend on the depths
    p.z_receiver = p.depth / 2.0;
    return p;
}

inline Vec project(Vec x, const Bounds& b) {
    x[0] = std::clamp(x[0], b.range_lo, b.range_hi);
    x[1] = std::clamp(x[1], b.c_water_lo, b.c_water_hi);
    x[2] = std::clamp(x[2], x[1] + 0.5, b.c_bottom_hi);  // keep c_b strictly above c_w
    x[3] = std::clamp(x[3], b.rho_water_lo, b.rho_water_hi);
    x[4] = std::clamp(x[4], b.rho_bottom_lo, b.rho_bottom_hi);
    x[5] = std::clamp(x[5], b.depth_lo, b.depth_hi);
    return x;
}

inline const std::array<double, kDim> kScale = {10'000.0, 1000.0, 1000.0, 1000.0, 1000.0, 100.0, 1.0};

}  // namespace detail_inv

/// Recover the scene from measured curves by minimizing the penalized
/// functional with a projected Nelder-Mead simplex, restarted with
/// deterministic jitter; the best point over all restarts wins.
inline InversionResult recover_parameters(const curves::DispersionCurveSet& measured,
                                          const waveguide::WaveguideParams& start, const Priors& priors,
                                          const InversionOptions& opt = {}) {
    using detail_inv::Vec;
    double alpha = opt.forced_alpha ? *opt.forced_alpha : calibrate_alpha(start, measured);
    auto objective = [&](const Vec& x) {
        return penalized_misfit(detail_inv::to_params(x), measured, priors, alpha);
    };

    InversionResult result;
    result.alpha = alpha;

    Vec best_x = detail_inv::project(detail_inv::to_vec(start), opt.bounds);
    double best_f = objective(best_x);
    result.trace.push_back(best_f);
    int total_iters = 0;
    bool converged_any = false;
    detail::SplitMix64 rng(opt.seed);

    for (int restart = 0; restart <= opt.restarts; ++restart) {
        // simplex around the best point so far; later restarts jitter more
        std::array<Vec, detail_inv::kDim + 1> simplex;
        std::array<double, detail_inv::kDim + 1> value{};
        double jitter = restart == 0 ? 0.0 : 0.02 * restart;
        simplex[0] = best_x;
        for (int d = 0; d < detail_inv::kDim; ++d) {
            Vec x = best_x;
            double step = 0.05 * detail_inv::kScale[static_cast<std::size_t>(d)];
            x[d] += step * (1.0 + jitter * (2.0 * rng.uniform() - 1.0));
            simplex[static_cast<std::size_t>(d) + 1] = detail_inv::project(x, opt.bounds);
        }
        for (std::size_t i = 0; i < simplex.size(); ++i) value[i] = objective(simplex[i]);

        bool converged = false;
        for (int it = 0; it < opt.max_iterations; ++it) {
            ++total_iters;
            std::array<std::size_t, detail_inv::kDim + 1> idx;
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
            std::size_t lo = idx[0], hi = idx[idx.size() - 1], second_hi = idx[idx.size() - 2];

            if (value[lo] < best_f) {
                best_f = value[lo];
                best_x = simplex[lo];
                result.trace.push_back(best_f);
            }
            double spread = std::abs(value[hi] - value[lo]);
            if (spread <= opt.tolerance * (std::abs(value[lo]) + 1e-300)) {
                converged = true;
                break;
            }

            Vec centroid{};
            for (std::size_t i = 0; i < idx.size(); ++i) {
                if (idx[i] == hi) continue;
                for (int d = 0; d < detail_inv::kDim; ++d) centroid[d] += simplex[idx[i]][d];
            }
            for (int d = 0; d < detail_inv::kDim; ++d) centroid[d] /= detail_inv::kDim;

            auto blend = [&](double coef) {
                Vec x;
                for (int d = 0; d < detail_inv::kDim; ++d)
                    x[d] = centroid[d] + coef * (centroid[d] - simplex[hi][d]);
                return detail_inv::project(x, opt.bounds);
            };
            Vec reflected = blend(1.0);
            double f_reflected = objective(reflected);
            if (f_reflected < value[lo]) {
                Vec expanded = blend(2.0);
                double f_expanded = objective(expanded);
                if (f_expanded < f_reflected) {
                    simplex[hi] = expanded;
                    value[hi] = f_expanded;
                } else {
                    simplex[hi] = reflected;
                    value[hi] = f_reflected;
                }
            } else if (f_reflected < value[second_hi]) {
                simplex[hi] = reflected;
                value[hi] = f_reflected;
            } else {
                Vec contracted = blend(-0.5);
                double f_contracted = objective(contracted);
                if (f_contracted < value[hi]) {
                    simplex[hi] = contracted;
                    value[hi] = f_contracted;
                } else {
                    for (std::size_t i = 0; i < simplex.size(); ++i) {  // shrink toward the best
                        if (i == lo) continue;
                        for (int d = 0; d < detail_inv::kDim; ++d)
                            simplex[i][d] = simplex[lo][d] + 0.5 * (simplex[i][d] - simplex[lo][d]);
                        simplex[i] = detail_inv::project(simplex[i], opt.bounds);
                        value[i] = objective(simplex[i]);
                    }
                }
            }
        }
        converged_any = converged_any || converged;
        for (std::size_t i = 0; i < simplex.size(); ++i) {
            if (value[i] < best_f) {
                best_f = value[i];
                best_x = simplex[i];
                result.trace.push_back(best_f);
            }
        }
    }

    result.params = detail_inv::to_params(best_x);
    result.penalized = best_f;
    result.misfit = misfit(result.params, measured);
    result.iterations = total_iters;
    result.converged = converged_any;
    result.dev_c_water = std::abs(result.params.c_water - priors.c_water) / priors.c_water;
    result.dev_rho_water = std::abs(result.params.rho_water - priors.rho_water) / priors.rho_water;
    result.dev_rho_bottom = std::abs(result.params.rho_bottom - priors.rho_bottom) / priors.rho_bottom;
    result.dev_depth = std::abs(result.params.depth - priors.depth) / priors.depth;
    return result;
}

/// Physically scaled default start: r0 from the latest arrival at the prior
/// water speed, c_b0 a notch above c_w0, dt0 = 0.
inline waveguide::WaveguideParams default_start(const curves::DispersionCurveSet& measured, const Priors& priors) {
    waveguide::WaveguideParams p;
    p.range = std::max(100.0, max_measured_travel_time(measured) * priors.c_water);
    p.c_water = priors.c_water;
    p.c_bottom = 1.1 * priors.c_water;
    p.rho_water = priors.rho_water;
    p.rho_bottom = priors.rho_bottom;
    p.depth = priors.depth;
    p.dt = 0.0;
    p.z_source = p.depth / 2.0;
    p.z_receiver = p.depth / 2.0;
    return p;
}

}  // namespace hydromodal::inversion
