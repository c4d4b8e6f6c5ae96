#pragma once
// Automated modal separation: watershed segmentation of warped spectrograms,
// basin-to-mode numbering by the descending-frequency amplitude walk, the
// quality factor scoring a warp parameter t0, and the iterative mode-peeling
// loop (warp -> segment -> mask -> invert -> unwarp -> subtract).

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "detail/util.hpp"
#include "tfr.hpp"
#include "waveguide.hpp"

namespace hydromodal::separation {

// ---------------------------------------------------------------- watershed

struct BasinMaximum {
    std::size_t row = 0;  // frequency index
    std::size_t col = 0;  // time index
    double amplitude = 0.0;
    int basin = 0;
};

struct BasinLabeling {
    std::size_t rows = 0, cols = 0;
    std::vector<int> labels;  // 0 = below floor
    std::vector<BasinMaximum> maxima;  // maxima[b-1] belongs to basin b

    int label_at(std::size_t r, std::size_t c) const { return labels[r * cols + c]; }
};

/// Watershed of a nonnegative image, flooding from the maxima downward.
/// Pixels below floor_frac * max stay unlabeled. 8-connectivity; plateaus
/// resolve to the first-reached label, scanning row-major, which makes the
/// labeling deterministic.
inline BasinLabeling watershed(const std::vector<double>& power, std::size_t rows, std::size_t cols,
                               double floor_frac) {
    if (power.size() != rows * cols) throw ConfigError("watershed: image dimensions do not match");
    if (floor_frac < 0.0 || floor_frac >= 1.0) throw ConfigError("watershed: floor must be in [0, 1)");
    BasinLabeling out;
    out.rows = rows;
    out.cols = cols;
    out.labels.assign(rows * cols, 0);

    double vmax = 0.0;
    for (double v : power) vmax = std::max(vmax, v);
    if (vmax <= 0.0) return out;  // all-zero image: no basins
    double floor = floor_frac * vmax;

    std::vector<std::uint32_t> order;
    order.reserve(power.size() / 4);
    for (std::size_t i = 0; i < power.size(); ++i)
        if (power[i] >= floor && power[i] > 0.0) order.push_back(static_cast<std::uint32_t>(i));
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (power[a] != power[b]) return power[a] > power[b];
        return a < b;
    });

    auto neighbors = [&](std::size_t idx, auto&& fn) {
        auto r = static_cast<long long>(idx / cols), c = static_cast<long long>(idx % cols);
        for (long long dr = -1; dr <= 1; ++dr)
            for (long long dc = -1; dc <= 1; ++dc) {
                if (dr == 0 && dc == 0) continue;
                long long nr = r + dr, nc = c + dc;
                if (nr < 0 || nc < 0 || nr >= static_cast<long long>(rows) || nc >= static_cast<long long>(cols))
                    continue;
                fn(static_cast<std::size_t>(nr) * cols + static_cast<std::size_t>(nc));
            }
    };

    int next_basin = 0;
    std::deque<std::size_t> queue;
    std::size_t g0 = 0;
    while (g0 < order.size()) {
        // group of equal-valued pixels (a plateau when larger than one)
        std::size_t g1 = g0 + 1;
        while (g1 < order.size() && power[order[g1]] == power[order[g0]]) ++g1;

        // pixels adjacent to already-labeled ground first, in row-major order
        for (std::size_t g = g0; g < g1; ++g) {
            std::size_t idx = order[g];
            int best = 0;
            double best_pow = -1.0;
            std::size_t best_idx = 0;
            neighbors(idx, [&](std::size_t nb) {
                int lb = out.labels[nb];
                if (lb == 0) return;
                if (power[nb] > best_pow || (power[nb] == best_pow && nb < best_idx)) {
                    best_pow = power[nb];
                    best_idx = nb;
                    best = lb;
                }
            });
            if (best != 0) {
                out.labels[idx] = best;
                queue.push_back(idx);
            }
        }
        // flood the plateau from its labeled border
        while (!queue.empty()) {
            std::size_t idx = queue.front();
            queue.pop_front();
            neighbors(idx, [&](std::size_t nb) {
                if (out.labels[nb] != 0 || power[nb] != power[idx]) return;
                if (power[nb] < floor || power[nb] <= 0.0) return;
                out.labels[nb] = out.labels[idx];
                queue.push_back(nb);
            });
        }
        // remaining pixels of the group seed new basins (one per component)
        for (std::size_t g = g0; g < g1; ++g) {
            std::size_t idx = order[g];
            if (out.labels[idx] != 0) continue;
            ++next_basin;
            out.labels[idx] = next_basin;
            out.maxima.push_back({idx / cols, idx % cols, power[idx], next_basin});
            queue.push_back(idx);
            while (!queue.empty()) {
                std::size_t cur = queue.front();
                queue.pop_front();
                neighbors(cur, [&](std::size_t nb) {
                    if (out.labels[nb] != 0 || power[nb] != power[idx]) return;
                    if (power[nb] < floor || power[nb] <= 0.0) return;
                    out.labels[nb] = next_basin;
                    queue.push_back(nb);
                });
            }
        }
        g0 = g1;
    }
    return out;
}

// ---------------------------------------------------------------- mode numbering

struct ModeAssignment {
    /// basin ids sorted by descending frequency of their maxima
    std::vector<int> order;
    /// mode number per entry of `order`
    std::vector<int> mode_of;

    std::vector<int> basins_of_mode(int mode) const {
        std::vector<int> ids;
        for (std::size_t i = 0; i < order.size(); ++i)
            if (mode_of[i] == mode) ids.push_back(order[i]);
        return ids;
    }
};

/// Descending-frequency amplitude walk: the highest-frequency basin gets the
/// current top mode number; an amplitude that fails to decrease starts the
/// next (lower) mode.
inline ModeAssignment assign_modes(const BasinLabeling& labeling, int n_top) {
    ModeAssignment asn;
    if (labeling.maxima.empty()) return asn;
    std::vector<std::size_t> idx(labeling.maxima.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const auto& ma = labeling.maxima[a];
        const auto& mb = labeling.maxima[b];
        if (ma.row != mb.row) return ma.row > mb.row;  // descending frequency
        if (ma.col != mb.col) return ma.col < mb.col;
        return ma.basin < mb.basin;
    });
    asn.order.reserve(idx.size());
    asn.mode_of.reserve(idx.size());
    int mode = n_top;
    double prev_amp = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto& m = labeling.maxima[idx[i]];
        if (i > 0 && !(m.amplitude < prev_amp)) --mode;  // ties start a new mode
        asn.order.push_back(m.basin);
        asn.mode_of.push_back(mode);
        prev_amp = m.amplitude;
    }
    return asn;
}

/// Amplitude-gap quality factor for mode n at the current warp: zero for a
/// single-basin mode (unless fallback), otherwise the gap between the first
/// basin of the next mode and the last basin of mode n.
inline double quality_factor(const BasinLabeling& labeling, const ModeAssignment& asn, int n,
                             bool fallback = false) {
    std::size_t first = asn.order.size(), last = asn.order.size();
    for (std::size_t i = 0; i < asn.order.size(); ++i) {
        if (asn.mode_of[i] == n) {
            if (first == asn.order.size()) first = i;
            last = i;
        }
    }
    if (first == asn.order.size()) throw NumericalError("quality factor undefined: mode " + std::to_string(n) +
                                                        " owns no basins");
    if (!fallback && first == last) return 0.0;
    if (last + 1 >= asn.order.size()) return 0.0;  // no next basin to measure a gap against
    auto amp = [&](std::size_t i) { return labeling.maxima[static_cast<std::size_t>(asn.order[i]) - 1].amplitude; };
    return amp(last + 1) - amp(last);
}

// ---------------------------------------------------------------- separability (energy rectangles)

struct CurvePortion {
    int mode = 0;
    double omega_lo = 0.0, omega_hi = 0.0;  // rad/s
};

struct EnergyRectangle {
    int mode = 0;
    double t_lo = 0.0, t_hi = 0.0;
    double omega_lo = 0.0, omega_hi = 0.0;

    bool intersects(const EnergyRectangle& other) const {
        return t_lo < other.t_hi && other.t_lo < t_hi && omega_lo < other.omega_hi && other.omega_lo < omega_hi;
    }
};

inline double interp_travel_time(const waveguide::ModeTable& table, double omega) {
    for (std::size_t i = 0; i + 1 < table.omega.size(); ++i) {
        if (table.omega[i] <= omega && omega <= table.omega[i + 1] && table.valid[i] && table.valid[i + 1]) {
            double a = (omega - table.omega[i]) / (table.omega[i + 1] - table.omega[i]);
            return table.travel_time[i] * (1.0 - a) + table.travel_time[i + 1] * a;
        }
    }
    throw ConfigError("curve portion endpoint outside the mode's propagative band");
}

inline EnergyRectangle energy_rectangle(const waveguide::ModeTable& table, const CurvePortion& portion,
                                        double sigma) {
    double t1 = interp_travel_time(table, portion.omega_lo);
    double t3 = interp_travel_time(table, portion.omega_hi);
    double t2 = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < table.omega.size(); ++i) {
        if (!table.valid[i]) continue;
        if (table.omega[i] < portion.omega_lo || table.omega[i] > portion.omega_hi) continue;
        t2 = std::max(t2, table.travel_time[i]);
    }
    t2 = std::max({t2, t1, t3});
    EnergyRectangle rect;
    rect.mode = portion.mode;
    rect.t_lo = std::min(t1, t3) - 1.0 / sigma;
    rect.t_hi = t2 + 1.0 / sigma;
    rect.omega_lo = portion.omega_lo - sigma;
    rect.omega_hi = portion.omega_hi + sigma;
    return rect;
}

/// Pairwise separation matrix for the given portions at a fixed sigma:
/// entry (i, j) is true when the energy rectangles do not intersect.
inline std::vector<std::vector<bool>> separability_check(const std::vector<waveguide::ModeTable>& tables,
                                                         const std::vector<CurvePortion>& portions,
                                                         double sigma) {
    std::vector<EnergyRectangle> rects;
    rects.reserve(portions.size());
    for (const auto& portion : portions) {
        const waveguide::ModeTable* table = nullptr;
        for (const auto& t : tables)
            if (t.mode == portion.mode) table = &t;
        if (!table) throw ConfigError("separability_check: no mode table for mode " + std::to_string(portion.mode));
        rects.push_back(energy_rectangle(*table, portion, sigma));
    }
    std::vector<std::vector<bool>> separated(rects.size(), std::vector<bool>(rects.size(), false));
    for (std::size_t i = 0; i < rects.size(); ++i)
        for (std::size_t j = 0; j < rects.size(); ++j)
            separated[i][j] = (i == j) ? false : !rects[i].intersects(rects[j]);
    return separated;
}

// ---------------------------------------------------------------- algorithm: mode peeling

struct SeparationConfig {
    double f_max_hz = 100.0;  // analysis band
    std::size_t t0_count = 200;
    double t0_min = std::numeric_limits<double>::quiet_NaN();  // default: energy onset
    double t0_max = std::numeric_limits<double>::quiet_NaN();  // default: near record end
    double sigma_search_hz = std::numeric_limits<double>::quiet_NaN();  // default: smallest usable
    std::size_t search_cols = 768;  // target spectrogram columns during the t0 search
    double floor_frac = 0.01;
    bool median_prefilter = true;
    int fft_factor = 4;
};

struct ModePeelLog {
    int mode = 0;
    double t0 = 0.0;
    double quality = 0.0;
    std::size_t basin_count = 0;
    bool fallback = false;
};

/// Warped-domain mask of one peeled mode (freqs in rad/s, times in the
/// warped axis), exportable as a binary raster.
struct ModeMask {
    int mode = 0;
    std::vector<double> freqs;
    std::vector<double> times;
    std::vector<std::uint8_t> mask;  // row-major freqs x times
};

struct SeparationResult {
    std::vector<TimeSeries> components;  // components[n-1] is mode n
    std::vector<ModePeelLog> log;        // one entry per peeled mode (N..2)
    std::vector<ModeMask> masks;         // aligned with log
};

/// First time the smoothed signal envelope exceeds 10% of its peak; a
/// serviceable stand-in for the earliest arrival when no range guess exists.
inline double onset_time(const TimeSeries& ts) {
    auto win = std::max<std::size_t>(1, static_cast<std::size_t>(0.05 * ts.sample_rate));
    std::vector<double> rms(ts.size(), 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        acc += ts.samples[i] * ts.samples[i];
        if (i >= win) acc -= ts.samples[i - win] * ts.samples[i - win];
        rms[i] = acc;
    }
    double peak = 0.0;
    for (double v : rms) peak = std::max(peak, v);
    if (peak <= 0.0) return ts.start_time;
    for (std::size_t i = 0; i < rms.size(); ++i)
        if (rms[i] >= 0.01 * peak) return ts.time_at(i >= win ? i - win : 0);
    return ts.start_time;
}

namespace detail_sep {

struct WarpEval {
    double quality = -std::numeric_limits<double>::infinity();
    double quality_fallback = -std::numeric_limits<double>::infinity();
    double top_amplitude = -std::numeric_limits<double>::infinity();
    std::size_t basin_count = 0;
    bool usable = false;
};

struct SearchSpectrogram {
    tfr::Spectrogram sp;
    std::vector<double> image;  // median-filtered power when enabled
    BasinLabeling labeling;
};

inline SearchSpectrogram analyze_warp(const TimeSeries& residual, double t0, double sigma_rad,
                                      const SeparationConfig& cfg, double min_energy = 0.0) {
    SearchSpectrogram out;
    tfr::WarpMap map{t0};
    TimeSeries warped = tfr::warp(residual, map);
    if (warped.duration() < 6.0 / sigma_rad) return out;  // window no longer fits
    if (min_energy > 0.0) {
        // a warp that discards nearly all signal energy cannot carry a mode;
        // without this guard the watershed would label numerical dust
        double e = 0.0;
        for (double v : warped.samples) e += v * v;
        if (e < min_energy) return out;
    }
    std::size_t hop = std::max<std::size_t>(1, warped.size() / cfg.search_cols);
    auto plan = tfr::make_stft_plan(warped, sigma_rad, cfg.f_max_hz, hop, cfg.fft_factor);
    out.sp = tfr::spectrogram(warped, sigma_rad, plan);
    out.image = cfg.median_prefilter ? detail::median3x3(out.sp.power, out.sp.rows(), out.sp.cols())
                                     : out.sp.power;
    out.labeling = watershed(out.image, out.sp.rows(), out.sp.cols(), cfg.floor_frac);
    return out;
}

}  // namespace detail_sep

/// Iterative filtering of modal components. Peels modes N down to 2, each
/// time choosing the warp parameter t0 that maximizes the quality factor,
/// masking the basins of the current top mode, and subtracting the inverted
/// component; the final residual is mode 1. The component sum reconstructs
/// the input by construction.
inline SeparationResult separate_modes(const TimeSeries& input, int n_modes, const SeparationConfig& cfg) {
    if (n_modes < 1) throw ConfigError("separate_modes: need at least one mode");
    if (input.samples.empty()) throw ConfigError("separate_modes: empty signal");
    if (!input.all_finite()) throw ConfigError("separate_modes: signal contains non-finite samples");

    SeparationResult result;
    result.components.assign(static_cast<std::size_t>(n_modes), TimeSeries{});
    if (n_modes == 1) {
        result.components[0] = input;
        return result;
    }

    double t0_lo = std::isnan(cfg.t0_min) ? std::max(onset_time(input), input.start_time + 1.0 / input.sample_rate)
                                          : cfg.t0_min;
    double t0_hi = std::isnan(cfg.t0_max) ? input.start_time + 0.98 * input.duration() : cfg.t0_max;
    if (!(t0_lo > 0.0) || !(t0_hi > t0_lo)) throw ConfigError("separate_modes: degenerate t0 grid");
    auto t0_grid = detail::linspace(t0_lo, t0_hi, cfg.t0_count);

    // constant search sigma across the grid keeps quality factors comparable:
    // the smallest window that still fits the shortest warped record
    double sigma_rad;
    if (std::isnan(cfg.sigma_search_hz)) {
        double shortest = std::sqrt(std::max(1e-12, input.end_time() * input.end_time() - t0_hi * t0_hi));
        sigma_rad = 8.0 * kPi / shortest;
    } else {
        sigma_rad = hz_to_rad(cfg.sigma_search_hz);
    }

    TimeSeries residual = input;
    for (int n = n_modes; n >= 2; --n) {
        double residual_energy = 0.0;
        for (double v : residual.samples) residual_energy += v * v;
        double min_energy = 1e-4 * residual_energy;

        std::vector<detail_sep::WarpEval> evals(t0_grid.size());
        detail::parallel_for(t0_grid.size(), [&](std::size_t i) {
            auto analyzed = detail_sep::analyze_warp(residual, t0_grid[i], sigma_rad, cfg, min_energy);
            if (analyzed.labeling.maxima.empty()) return;
            auto asn = assign_modes(analyzed.labeling, n);
            detail_sep::WarpEval ev;
            ev.usable = true;
            ev.basin_count = analyzed.labeling.maxima.size();
            ev.quality = quality_factor(analyzed.labeling, asn, n, false);
            ev.quality_fallback = quality_factor(analyzed.labeling, asn, n, true);
            ev.top_amplitude = analyzed.labeling.maxima.front().amplitude;
            evals[i] = ev;
        });

        auto pick_by = [&](auto&& key) {
            std::size_t best = t0_grid.size();
            double best_v = 0.0;
            for (std::size_t i = 0; i < evals.size(); ++i) {
                if (!evals[i].usable) continue;
                double v = key(evals[i]);
                if (!(v > 0.0)) continue;
                if (best == t0_grid.size() || v > best_v) {
                    best = i;
                    best_v = v;
                }
            }
            return best;
        };
        bool used_fallback = false;
        std::size_t pick = pick_by([](const detail_sep::WarpEval& e) { return e.quality; });
        if (pick == t0_grid.size()) {
            used_fallback = true;
            pick = pick_by([](const detail_sep::WarpEval& e) { return e.quality_fallback; });
        }
        if (pick == t0_grid.size())  // no amplitude gaps anywhere: score energy concentration
            pick = pick_by([](const detail_sep::WarpEval& e) { return e.top_amplitude; });
        if (pick == t0_grid.size())
            throw NumericalError("separate_modes: no drainage basins at any t0 while peeling mode " +
                                 std::to_string(n));

        double t0 = t0_grid[pick];
        tfr::WarpMap map{t0};
        auto analyzed = detail_sep::analyze_warp(residual, t0, sigma_rad, cfg);
        auto asn = assign_modes(analyzed.labeling, n);
        auto basins = asn.basins_of_mode(n);

        std::vector<std::uint8_t> mask(analyzed.sp.stft.size(), 0);
        for (std::size_t px = 0; px < analyzed.labeling.labels.size(); ++px) {
            int lb = analyzed.labeling.labels[px];
            if (lb == 0) continue;
            if (std::find(basins.begin(), basins.end(), lb) != basins.end()) mask[px] = 1;
        }
        TimeSeries warped_component = tfr::invert_masked_stft(analyzed.sp, mask);

        // back to the physical time axis, aligned with the residual's grid
        auto i0 = static_cast<std::size_t>(std::floor((t0 - residual.start_time) * residual.sample_rate)) + 1;
        double out_start = residual.time_at(i0);
        double span = map.psi(warped_component.end_time()) - out_start;
        if (span <= 0.0 || i0 >= residual.size())
            throw NumericalError("separate_modes: warped component does not cover the record past t0=" +
                                 std::to_string(t0));
        auto count = std::min(residual.size() - i0,
                              static_cast<std::size_t>(std::floor(span * residual.sample_rate)) + 1);
        TimeSeries unwarped = tfr::unwarp(warped_component, map, out_start, count);

        TimeSeries component(std::vector<double>(residual.size(), 0.0), residual.sample_rate, residual.start_time);
        for (std::size_t i = 0; i < unwarped.size(); ++i) component.samples[i0 + i] = unwarped.samples[i];
        for (std::size_t i = 0; i < residual.size(); ++i) residual.samples[i] -= component.samples[i];

        result.components[static_cast<std::size_t>(n) - 1] = std::move(component);
        result.log.push_back({n, t0,
                              used_fallback ? evals[pick].quality_fallback : evals[pick].quality,
                              basins.size(), used_fallback});
        result.masks.push_back({n, analyzed.sp.freqs, analyzed.sp.times, std::move(mask)});
    }
    result.components[0] = std::move(residual);
    return result;
}

}  // namespace hydromodal::separation
