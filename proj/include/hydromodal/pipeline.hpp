#pragma once
// Batch orchestration: configuration, ingestion, the synth -> separate ->
// curves -> invert stage chain, the run manifest, and the benchmark engine
// (threshold sweep and noise sweep) shared by the CLI and the acceptance
// suite.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "curves.hpp"
#include "detail/util.hpp"
#include "inversion.hpp"
#include "io.hpp"
#include "separation.hpp"
#include "tfr.hpp"
#include "waveguide.hpp"

namespace hydromodal::pipeline {

inline constexpr const char* kVersion = "hydromodal 0.1.0";

// ---------------------------------------------------------------- configuration

/// Flat key=value configuration with [section] prefixes; command-line flags
/// overwrite file values. The canonical dump (sorted keys) feeds the config
/// hash recorded in the run manifest.
struct ConfigMap {
    std::map<std::string, std::string> values;

    static ConfigMap from_file(const std::string& path) {
        ConfigMap cfg;
        std::istringstream in(io::detail_io::read_file(path));
        std::string line, section;
        while (std::getline(in, line)) {
            auto hash_pos = line.find('#');
            if (hash_pos != std::string::npos) line.erase(hash_pos);
            auto trim = [](std::string s) {
                auto b = s.find_first_not_of(" \t\r");
                auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
            };
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[' && line.back() == ']') {
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            auto eq = line.find('=');
            if (eq == std::string::npos) throw ConfigError("config: malformed line: " + line);
            std::string key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            cfg.values[section.empty() ? key : section + "." + key] = value;
        }
        return cfg;
    }

    void set(const std::string& key, const std::string& value) { values[key] = value; }
    bool has(const std::string& key) const { return values.count(key) > 0; }

    std::string get_str(const std::string& key, const std::string& fallback = "") const {
        auto it = values.find(key);
        return it == values.end() ? fallback : it->second;
    }
    double get_num(const std::string& key, double fallback) const {
        auto it = values.find(key);
        if (it == values.end()) return fallback;
        try {
            return std::stod(it->second);
        } catch (...) {
            throw ConfigError("config: expected a number for " + key + ", got '" + it->second + "'");
        }
    }
    std::string canonical() const {
        std::string out;
        for (const auto& [k, v] : values) out += k + "=" + v + "\n";
        return out;
    }
    std::uint64_t hash() const { return detail::fnv1a64(canonical()); }
};

struct SceneConfig {
    waveguide::WaveguideParams params = waveguide::table1_fixture();
    double f_max_hz = 100.0;
    double duration = 20.0;
    double sample_rate = 400.0;  // 4 * f_max
    double noise_delta = 0.0;
    double noise_t_delta = 0.01;
};

struct PipelineConfig {
    SceneConfig scene;
    std::string input_wav;  // ingest this record instead of synthesizing
    int n_modes = 4;
    double threshold_p = 0.4;
    double sigma_extract_hz = std::numeric_limits<double>::quiet_NaN();  // default 5*f_max/100
    curves::ExtractionMethod method = curves::ExtractionMethod::maximum;
    separation::SeparationConfig separation;
    inversion::Priors priors;
    double start_range = std::numeric_limits<double>::quiet_NaN();
    double start_c_bottom = std::numeric_limits<double>::quiet_NaN();
    double start_dt = 0.0;
    inversion::InversionOptions inversion_opts;
    double band_lo_hz = 0.0;  // inversion support clip (used by the CSS preset)
    double band_hi_hz = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t seed = 20260810;
    std::string out_dir = "out";

    double sigma_extract_rad() const {
        double hz = std::isnan(sigma_extract_hz) ? 5.0 * scene.f_max_hz / 100.0 : sigma_extract_hz;
        return hz_to_rad(hz);
    }
};

/// Scene presets: the synthetic study fixture plus the two experimental
/// environments (prior estimates only; their recordings ship separately).
inline void apply_preset(PipelineConfig& cfg, const std::string& name) {
    if (name == "pekeris") {
        cfg.scene.params = waveguide::table1_fixture();
        cfg.scene.f_max_hz = 100.0;
        cfg.scene.sample_rate = 400.0;
        cfg.scene.duration = 20.0;
        cfg.n_modes = 4;
        cfg.priors = {1500.0, 1000.0, 1500.0, 100.0};
    } else if (name == "whale") {
        cfg.scene.f_max_hz = 204.0;
        cfg.scene.sample_rate = 816.0;
        cfg.n_modes = 4;
        cfg.priors = {1450.0, 1000.0, 1600.0, 51.0};
    } else if (name == "css") {
        cfg.scene.f_max_hz = 488.0;
        cfg.scene.sample_rate = 1952.0;
        cfg.n_modes = 11;
        cfg.priors = {1464.5, 1000.0, 1600.0, 69.5};
        cfg.band_lo_hz = 100.0;  // comparable to a two-layer model only in [100, 300] Hz
        cfg.band_hi_hz = 300.0;
    } else {
        throw ConfigError("unknown preset: " + name);
    }
}

inline PipelineConfig config_from_map(const ConfigMap& map) {
    PipelineConfig cfg;
    if (map.has("preset")) apply_preset(cfg, map.get_str("preset"));
    auto& p = cfg.scene.params;
    p.range = map.get_num("scene.range_km", p.range / 1000.0) * 1000.0;
    p.c_water = map.get_num("scene.c_water", p.c_water);
    p.c_bottom = map.get_num("scene.c_bottom", p.c_bottom);
    p.rho_water = map.get_num("scene.rho_water", p.rho_water);
    p.rho_bottom = map.get_num("scene.rho_bottom", p.rho_bottom);
    p.depth = map.get_num("scene.depth", p.depth);
    p.dt = map.get_num("scene.dt", p.dt);
    p.z_source = map.get_num("scene.z_source", p.depth / 2.0);
    p.z_receiver = map.get_num("scene.z_receiver", p.depth / 2.0);
    cfg.scene.f_max_hz = map.get_num("scene.f_max", cfg.scene.f_max_hz);
    cfg.scene.sample_rate = map.get_num("scene.sample_rate", 4.0 * cfg.scene.f_max_hz);
    cfg.scene.duration = map.get_num("scene.duration", cfg.scene.duration);
    cfg.scene.noise_delta = map.get_num("noise.delta", cfg.scene.noise_delta);
    cfg.scene.noise_t_delta = map.get_num("noise.t_delta", cfg.scene.noise_t_delta);

    cfg.input_wav = map.get_str("input.wav", cfg.input_wav);
    cfg.n_modes = static_cast<int>(map.get_num("modes", cfg.n_modes));
    cfg.threshold_p = map.get_num("threshold_p", cfg.threshold_p);
    cfg.sigma_extract_hz = map.get_num("sigma_hz", cfg.sigma_extract_hz);
    if (map.get_str("method", "maximum") == "mean") cfg.method = curves::ExtractionMethod::mean;

    cfg.separation.t0_count = static_cast<std::size_t>(map.get_num("separation.t0_count", 200.0));
    cfg.separation.t0_min = map.get_num("separation.t0_min", cfg.separation.t0_min);
    cfg.separation.t0_max = map.get_num("separation.t0_max", cfg.separation.t0_max);
    cfg.separation.sigma_search_hz = map.get_num("separation.sigma_hz", cfg.separation.sigma_search_hz);
    cfg.separation.floor_frac = map.get_num("separation.floor", cfg.separation.floor_frac);
    cfg.separation.search_cols = static_cast<std::size_t>(map.get_num("separation.search_cols", 768.0));

    cfg.priors.c_water = map.get_num("priors.c_water", cfg.priors.c_water);
    cfg.priors.rho_water = map.get_num("priors.rho_water", cfg.priors.rho_water);
    cfg.priors.rho_bottom = map.get_num("priors.rho_bottom", cfg.priors.rho_bottom);
    cfg.priors.depth = map.get_num("priors.depth", cfg.priors.depth);
    cfg.start_range = map.get_num("start.range_km", cfg.start_range / 1000.0) * 1000.0;
    cfg.start_c_bottom = map.get_num("start.c_bottom", cfg.start_c_bottom);
    cfg.start_dt = map.get_num("start.dt", cfg.start_dt);
    cfg.band_lo_hz = map.get_num("band.lo_hz", cfg.band_lo_hz);
    cfg.band_hi_hz = map.get_num("band.hi_hz", cfg.band_hi_hz);
    cfg.seed = static_cast<std::uint64_t>(map.get_num("seed", static_cast<double>(cfg.seed)));
    cfg.out_dir = map.get_str("out_dir", cfg.out_dir);
    return cfg;
}

// ---------------------------------------------------------------- stages

inline TimeSeries stage_synth(const PipelineConfig& cfg) {
    waveguide::SynthesisOptions opt;
    opt.f_max_hz = cfg.scene.f_max_hz;
    opt.duration = cfg.scene.duration;
    opt.sample_rate = cfg.scene.sample_rate;
    auto ts = waveguide::synthesize_signal(cfg.scene.params, opt);
    if (cfg.scene.noise_delta > 0.0) {
        waveguide::NoiseModel nm{cfg.scene.noise_delta, cfg.scene.noise_t_delta,
                                 detail::derive_seed(cfg.seed, "synth-noise")};
        ts = waveguide::add_noise(ts, nm);
    }
    return ts;
}

/// Band-limited resampling onto a uniform grid at the new rate.
inline TimeSeries resample(const TimeSeries& ts, double new_rate) {
    if (std::abs(new_rate - ts.sample_rate) < 1e-9 * ts.sample_rate) return ts;
    auto n_out = static_cast<std::size_t>(std::floor(ts.duration() * new_rate));
    std::vector<double> out(n_out);
    detail::SincInterpolator interp;
    detail::parallel_for(n_out, [&](std::size_t i) {
        out[i] = interp(ts, ts.start_time + static_cast<double>(i) / new_rate);
    });
    return TimeSeries(std::move(out), new_rate, ts.start_time);
}

/// WAV ingestion: heterogeneous rates come back resampled to 4 * f_max.
inline TimeSeries ingest_wav(const std::string& path, double f_max_hz) {
    auto ts = io::read_wav(path);
    if (ts.sample_rate < 2.0 * f_max_hz)
        throw ConfigError(path + ": sample rate below 2*f_max, the record cannot hold the requested band");
    return resample(ts, 4.0 * f_max_hz);
}

inline separation::SeparationResult stage_separate(const PipelineConfig& cfg, const TimeSeries& ts) {
    auto sep_cfg = cfg.separation;
    sep_cfg.f_max_hz = cfg.scene.f_max_hz;
    return separation::separate_modes(ts, cfg.n_modes, sep_cfg);
}

struct CurvesOutput {
    curves::DispersionCurveSet set;
    double global_max = 0.0;  // max of the full-signal spectrogram at sigma_extract
};

/// Alg. 2 over every component, thresholded at p * max(S) with S the
/// spectrogram of the original record (the global reading of max(S)).
inline CurvesOutput stage_curves(const PipelineConfig& cfg, const TimeSeries& original,
                                 const std::vector<TimeSeries>& components) {
    double sigma = cfg.sigma_extract_rad();
    CurvesOutput out;
    auto full = tfr::spectrogram(original, sigma, cfg.scene.f_max_hz, 1);
    out.global_max = full.max_power();
    double threshold = cfg.threshold_p * out.global_max;
    for (std::size_t m = 0; m < components.size(); ++m) {
        if (components[m].samples.empty()) continue;
        auto sp = tfr::spectrogram(components[m], sigma, cfg.scene.f_max_hz, 1);
        int mode = static_cast<int>(m) + 1;
        auto curve = cfg.method == curves::ExtractionMethod::maximum
                         ? curves::extract_max(sp, mode, threshold)
                         : curves::extract_mean(sp, mode, components[m].duration() / 2.0, threshold);
        // inversion band clip (preset-driven); masked points stay in the CSV
        for (std::size_t i = 0; i < curve.omega.size(); ++i) {
            double f = rad_to_hz(curve.omega[i]);
            if (f < cfg.band_lo_hz || (!std::isnan(cfg.band_hi_hz) && f > cfg.band_hi_hz)) {
                curve.valid[i] = false;
                curve.t_app[i] = std::numeric_limits<double>::quiet_NaN();
            }
        }
        out.set.push_back(std::move(curve));
    }
    return out;
}

inline waveguide::WaveguideParams inversion_start(const PipelineConfig& cfg,
                                                  const curves::DispersionCurveSet& measured) {
    auto start = inversion::default_start(measured, cfg.priors);
    if (!std::isnan(cfg.start_range)) start.range = cfg.start_range;
    if (!std::isnan(cfg.start_c_bottom)) start.c_bottom = cfg.start_c_bottom;
    start.dt = cfg.start_dt;
    return start;
}

inline inversion::InversionResult stage_invert(const PipelineConfig& cfg,
                                               const curves::DispersionCurveSet& measured) {
    auto opts = cfg.inversion_opts;
    opts.seed = detail::derive_seed(cfg.seed, "inversion");
    return inversion::recover_parameters(measured, inversion_start(cfg, measured), cfg.priors, opts);
}

struct PipelineOutput {
    separation::SeparationResult sep;
    CurvesOutput curves_out;
    inversion::InversionResult inv;
};

/// The full in-memory chain on an already-loaded record.
inline PipelineOutput run_full_pipeline(const PipelineConfig& cfg, const TimeSeries& ts) {
    PipelineOutput out;
    out.sep = stage_separate(cfg, ts);
    out.curves_out = stage_curves(cfg, ts, out.sep.components);
    out.inv = stage_invert(cfg, out.curves_out.set);
    return out;
}

// ---------------------------------------------------------------- manifest

struct RunManifest {
    std::uint64_t config_hash = 0;
    std::string config_text;
    std::vector<std::pair<std::string, double>> stage_seconds;
    std::vector<std::string> artifacts;

    io::json to_json() const {
        io::json j;
        char hex[20];
        std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(config_hash));
        j["config_hash"] = hex;
        j["config"] = config_text;
        j["version"] = kVersion;
        io::json stages = io::json::array();
        for (const auto& [name, sec] : stage_seconds) stages.push_back({{"stage", name}, {"seconds", sec}});
        j["stages"] = stages;
        j["artifacts"] = artifacts;
        return j;
    }
};

class StageClock {
  public:
    explicit StageClock(RunManifest& manifest) : manifest_(manifest) {}
    template <typename Fn>
    auto time(const std::string& name, Fn&& fn) {
        auto start = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            manifest_.stage_seconds.emplace_back(name, elapsed(start));
        } else {
            auto result = fn();
            manifest_.stage_seconds.emplace_back(name, elapsed(start));
            return result;
        }
    }

  private:
    static double elapsed(std::chrono::steady_clock::time_point start) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    RunManifest& manifest_;
};

/// Ground-truth dispersion curves for a synthetic scene (model side).
inline curves::DispersionCurveSet ground_truth_curves(const SceneConfig& scene, std::size_t points = 400) {
    curves::DispersionCurveSet set;
    auto tables = waveguide::mode_table(scene.params,
                                        detail::linspace(0.1, scene.f_max_hz, points), scene.f_max_hz);
    for (const auto& table : tables) {
        curves::DispersionCurve curve;
        curve.mode = table.mode;
        curve.omega = table.omega;
        curve.t_app.resize(table.omega.size());
        curve.ridge_power.assign(table.omega.size(), 1.0);
        curve.valid = table.valid;
        for (std::size_t i = 0; i < table.omega.size(); ++i)
            curve.t_app[i] = table.valid[i] ? table.travel_time[i] - scene.params.dt
                                            : std::numeric_limits<double>::quiet_NaN();
        set.push_back(std::move(curve));
    }
    return set;
}

// ---------------------------------------------------------------- benchmark engine

struct PSweepRow {
    double p = 0.0;
    // relative errors vs the scene truth; dt error is absolute seconds too
    double range = 0.0, c_water = 0.0, c_bottom = 0.0, rho_water = 0.0, rho_bottom = 0.0, depth = 0.0, dt = 0.0;
    double dt_abs = 0.0;
};

inline PSweepRow error_row(double p, const inversion::InversionResult& inv, const waveguide::WaveguideParams& truth) {
    auto rel = [](double got, double want) { return std::abs(got - want) / std::abs(want); };
    PSweepRow row;
    row.p = p;
    row.range = rel(inv.params.range, truth.range);
    row.c_water = rel(inv.params.c_water, truth.c_water);
    row.c_bottom = rel(inv.params.c_bottom, truth.c_bottom);
    row.rho_water = rel(inv.params.rho_water, truth.rho_water);
    row.rho_bottom = rel(inv.params.rho_bottom, truth.rho_bottom);
    row.depth = rel(inv.params.depth, truth.depth);
    row.dt = truth.dt != 0.0 ? std::abs(inv.params.dt - truth.dt) / std::abs(truth.dt) : std::abs(inv.params.dt);
    row.dt_abs = std::abs(inv.params.dt - truth.dt);
    return row;
}

/// Threshold sweep on the synthetic fixture: one separation, one
/// extraction+inversion per p.
inline std::vector<PSweepRow> bench_p_sweep(const PipelineConfig& base, const std::vector<double>& p_values,
                                            const TimeSeries& ts, const separation::SeparationResult& sep) {
    std::vector<PSweepRow> rows;
    for (double p : p_values) {
        auto cfg = base;
        cfg.threshold_p = p;
        auto curves_out = stage_curves(cfg, ts, sep.components);
        auto inv = stage_invert(cfg, curves_out.set);
        rows.push_back(error_row(p, inv, base.scene.params));
    }
    return rows;
}

// ---- noise sweep (single-mode stability study) ----

struct NoiseSweepConfig {
    std::vector<double> levels = {0.01, 0.1, 0.5};  // delta sqrt(T_delta) / |A_n(w)|
    int trials = 50;
    std::vector<double> probes_hz = {14.5, 16.5, 18.5, 20.5, 22.0};
    int mode = 1;
    double t_delta = 0.01;
    std::size_t sigma_grid = 16;
    double sigma_lo_rad = std::numeric_limits<double>::quiet_NaN();  // default: record floor
    double sigma_hi_rad = 40.0;
    std::uint64_t seed = 99;
};

struct ProbeResult {
    double f_hz = 0.0;
    double noise_level = 0.0;
    double err_max = 0.0;        // maximum method at its empirical optimum
    double err_mean = 0.0;       // mean method at its empirical optimum
    double sigma_opt_max = 0.0;  // empirical argmin (log-parabола refined)
    double sigma_opt_mean = 0.0;
};

struct NoiseSweepResult {
    std::vector<ProbeResult> probes;  // levels x probes

    const ProbeResult& at(std::size_t level_idx, std::size_t probe_idx, std::size_t n_probes) const {
        return probes[level_idx * n_probes + probe_idx];
    }
};

namespace detail_bench {

/// time estimates from a single-frequency STFT row
struct RowEstimates {
    double t_max = 0.0;
    double t_mean = 0.0;
};

inline RowEstimates estimate_from_row(const std::vector<std::complex<double>>& row, const TimeSeries& ts,
                                      double t_w) {
    RowEstimates est;
    std::size_t n = row.size();
    std::size_t best = 0;
    double bv = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        double v = std::norm(row[i]);
        if (v > bv) {
            bv = v;
            best = i;
        }
    }
    double offset = 0.0;
    if (best > 0 && best + 1 < n)
        offset = detail::refine_peak_offset(std::norm(row[best - 1]), bv, std::norm(row[best + 1]));
    est.t_max = ts.time_at(best) + offset / ts.sample_rate;

    // energy-centroid-centered gaussian weight
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double v = std::norm(row[i]);
        num += ts.time_at(i) * v;
        den += v;
    }
    double center = den > 0.0 ? num / den : 0.0;
    num = den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double t = ts.time_at(i);
        double w = std::exp(-(t - center) * (t - center) / (2.0 * t_w * t_w)) * std::norm(row[i]);
        num += t * w;
        den += w;
    }
    est.t_mean = den > 0.0 ? num / den : est.t_max;
    return est;
}

/// argmin of err(sigma) on the log grid with parabolic refinement
inline double refine_argmin_log(const std::vector<double>& sigmas, const std::vector<double>& errs) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < errs.size(); ++i)
        if (errs[i] < errs[best]) best = i;
    if (best == 0 || best + 1 >= sigmas.size()) return sigmas[best];
    double la = std::log(errs[best - 1]), lb = std::log(errs[best]), lc = std::log(errs[best + 1]);
    double denom = la - 2.0 * lb + lc;
    if (denom <= 0.0) return sigmas[best];
    double off = std::clamp(0.5 * (la - lc) / denom, -0.5, 0.5);
    double step = std::log(sigmas[best] / sigmas[best - 1]);
    return sigmas[best] * std::exp(off * step);
}

}  // namespace detail_bench

/// Reconstruction-error study on a noisy single-mode record: for each noise
/// level and probe frequency, sweep sigma, average per-trial errors, and
/// report both methods at their empirical optima.
inline NoiseSweepResult bench_noise_sweep(const SceneConfig& scene, const NoiseSweepConfig& cfg) {
    auto params = scene.params;
    params.dt = 0.0;
    waveguide::SynthesisOptions opt;
    opt.f_max_hz = scene.f_max_hz;
    opt.duration = scene.duration;
    opt.sample_rate = scene.sample_rate;
    opt.only_mode = cfg.mode;
    TimeSeries clean = waveguide::synthesize_signal(params, opt);
    double t_w = clean.duration() / 2.0;

    double sigma_lo = std::isnan(cfg.sigma_lo_rad) ? 2.0 * tfr::sigma_floor(clean.duration()) : cfg.sigma_lo_rad;
    std::vector<double> sigmas(cfg.sigma_grid);
    for (std::size_t i = 0; i < cfg.sigma_grid; ++i)
        sigmas[i] = sigma_lo * std::pow(cfg.sigma_hi_rad / sigma_lo,
                                        static_cast<double>(i) / static_cast<double>(cfg.sigma_grid - 1));

    NoiseSweepResult result;
    for (std::size_t li = 0; li < cfg.levels.size(); ++li) {
        for (std::size_t pi = 0; pi < cfg.probes_hz.size(); ++pi) {
            double f = cfg.probes_hz[pi];
            double w = hz_to_rad(f);
            double truth = waveguide::group_delay(params, w, cfg.mode);
            double amp = std::abs(waveguide::mode_amplitude(params, w, cfg.mode));
            double delta = cfg.levels[li] * amp / std::sqrt(cfg.t_delta);

            std::vector<double> err_max(sigmas.size(), 0.0), err_mean(sigmas.size(), 0.0);
            std::vector<std::vector<double>> trial_err_max(cfg.trials), trial_err_mean(cfg.trials);
            detail::parallel_for(static_cast<std::size_t>(cfg.trials), [&](std::size_t trial) {
                waveguide::NoiseModel nm{delta, cfg.t_delta,
                                         detail::derive_seed(cfg.seed, "noise-sweep",
                                                             li * 1000 + pi * 100 + trial)};
                auto noisy = waveguide::add_noise(clean, nm);
                trial_err_max[trial].resize(sigmas.size());
                trial_err_mean[trial].resize(sigmas.size());
                for (std::size_t si = 0; si < sigmas.size(); ++si) {
                    auto row = tfr::stft_row(noisy, sigmas[si], w);
                    auto est = detail_bench::estimate_from_row(row, noisy, t_w);
                    trial_err_max[trial][si] = std::abs(est.t_max - truth);
                    trial_err_mean[trial][si] = std::abs(est.t_mean - truth);
                }
            });
            for (int trial = 0; trial < cfg.trials; ++trial)
                for (std::size_t si = 0; si < sigmas.size(); ++si) {
                    err_max[si] += trial_err_max[static_cast<std::size_t>(trial)][si] / cfg.trials;
                    err_mean[si] += trial_err_mean[static_cast<std::size_t>(trial)][si] / cfg.trials;
                }

            ProbeResult probe;
            probe.f_hz = f;
            probe.noise_level = cfg.levels[li];
            probe.err_max = *std::min_element(err_max.begin(), err_max.end());
            probe.err_mean = *std::min_element(err_mean.begin(), err_mean.end());
            probe.sigma_opt_max = detail_bench::refine_argmin_log(sigmas, err_max);
            probe.sigma_opt_mean = detail_bench::refine_argmin_log(sigmas, err_mean);
            result.probes.push_back(probe);
        }
    }
    return result;
}

}  // namespace hydromodal::pipeline
