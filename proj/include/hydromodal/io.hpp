#pragma once
// File formats: WAV records (16/24-bit PCM and 32-bit float, mono), the
// curves CSV (mode,freq_hz,t_app_s,ridge_power,valid), spectrogram exports
// (CSV and a little-endian binary raster), inversion result JSON and the run
// manifest. Doubles print with %.17g so a write/read cycle is bit-exact.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "curves.hpp"
#include "inversion.hpp"
#include "separation.hpp"
#include "tfr.hpp"

namespace hydromodal::io {

// ---------------------------------------------------------------- small helpers

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace detail_io {

template <typename T>
void put_le(std::string& out, T v) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(const std::string& data, std::size_t& pos) {
    if (pos + sizeof(T) > data.size()) throw ConfigError("file truncated");
    T v;
    std::memcpy(&v, data.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write file: " + path);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw ConfigError("write failed: " + path);
}

}  // namespace detail_io

// ---------------------------------------------------------------- WAV

enum class WavEncoding { pcm16, float32, float64 };

inline void write_wav(const std::string& path, const TimeSeries& ts, WavEncoding enc = WavEncoding::float32) {
    std::string body;
    auto rate = static_cast<std::uint32_t>(std::llround(ts.sample_rate));
    std::uint16_t format = enc == WavEncoding::pcm16 ? 1 : 3;
    std::uint16_t bits = enc == WavEncoding::pcm16 ? 16 : (enc == WavEncoding::float32 ? 32 : 64);
    std::uint16_t block = static_cast<std::uint16_t>(bits / 8);

    std::string data;
    data.reserve(ts.size() * block);
    if (enc == WavEncoding::float64) {
        for (double v : ts.samples) detail_io::put_le(data, v);
    } else if (enc == WavEncoding::float32) {
        for (double v : ts.samples) detail_io::put_le(data, static_cast<float>(v));
    } else {
        for (double v : ts.samples) {
            double clamped = std::clamp(v, -1.0, 1.0);
            detail_io::put_le(data, static_cast<std::int16_t>(std::lround(clamped * 32767.0)));
        }
    }

    detail_io::put_le(body, std::uint32_t{0x46464952});  // "RIFF"
    detail_io::put_le(body, static_cast<std::uint32_t>(4 + 8 + 16 + 8 + data.size()));
    detail_io::put_le(body, std::uint32_t{0x45564157});  // "WAVE"
    detail_io::put_le(body, std::uint32_t{0x20746d66});  // "fmt "
    detail_io::put_le(body, std::uint32_t{16});
    detail_io::put_le(body, format);
    detail_io::put_le(body, std::uint16_t{1});  // mono
    detail_io::put_le(body, rate);
    detail_io::put_le(body, static_cast<std::uint32_t>(rate * block));
    detail_io::put_le(body, block);
    detail_io::put_le(body, bits);
    detail_io::put_le(body, std::uint32_t{0x61746164});  // "data"
    detail_io::put_le(body, static_cast<std::uint32_t>(data.size()));
    body += data;
    detail_io::write_file(path, body);
}

inline TimeSeries read_wav(const std::string& path) {
    std::string data = detail_io::read_file(path);
    std::size_t pos = 0;
    if (detail_io::get_le<std::uint32_t>(data, pos) != 0x46464952u) throw ConfigError(path + ": not a RIFF file");
    detail_io::get_le<std::uint32_t>(data, pos);  // riff size
    if (detail_io::get_le<std::uint32_t>(data, pos) != 0x45564157u) throw ConfigError(path + ": not a WAVE file");

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    std::vector<double> samples;
    bool have_fmt = false, have_data = false;
    while (pos + 8 <= data.size()) {
        auto id = detail_io::get_le<std::uint32_t>(data, pos);
        auto size = detail_io::get_le<std::uint32_t>(data, pos);
        std::size_t chunk_start = pos;
        if (id == 0x20746d66u) {  // "fmt "
            format = detail_io::get_le<std::uint16_t>(data, pos);
            channels = detail_io::get_le<std::uint16_t>(data, pos);
            rate = detail_io::get_le<std::uint32_t>(data, pos);
            detail_io::get_le<std::uint32_t>(data, pos);  // byte rate
            detail_io::get_le<std::uint16_t>(data, pos);  // block align
            bits = detail_io::get_le<std::uint16_t>(data, pos);
            have_fmt = true;
        } else if (id == 0x61746164u) {  // "data"
            if (!have_fmt) throw ConfigError(path + ": data chunk before fmt chunk");
            if (channels != 1) throw ConfigError(path + ": expected a mono record, got " +
                                                 std::to_string(channels) + " channels");
            std::size_t bytes = std::min<std::size_t>(size, data.size() - pos);
            if (format == 3 && bits == 32) {
                for (std::size_t i = 0; i + 4 <= bytes; i += 4)
                    samples.push_back(static_cast<double>(detail_io::get_le<float>(data, pos)));
            } else if (format == 3 && bits == 64) {
                for (std::size_t i = 0; i + 8 <= bytes; i += 8)
                    samples.push_back(detail_io::get_le<double>(data, pos));
            } else if (format == 1 && bits == 16) {
                for (std::size_t i = 0; i + 2 <= bytes; i += 2)
                    samples.push_back(detail_io::get_le<std::int16_t>(data, pos) / 32768.0);
            } else if (format == 1 && bits == 24) {
                for (std::size_t i = 0; i + 3 <= bytes; i += 3) {
                    std::int32_t v = static_cast<unsigned char>(data[pos]) |
                                     (static_cast<unsigned char>(data[pos + 1]) << 8) |
                                     (static_cast<std::int32_t>(static_cast<signed char>(data[pos + 2])) << 16);
                    pos += 3;
                    samples.push_back(v / 8388608.0);
                }
            } else {
                throw ConfigError(path + ": unsupported WAV encoding (format " + std::to_string(format) + ", " +
                                  std::to_string(bits) + " bits)");
            }
            have_data = true;
        }
        pos = chunk_start + size + (size & 1);  // chunks are word-aligned
    }
    if (!have_data) throw ConfigError(path + ": no data chunk");
    return TimeSeries(std::move(samples), static_cast<double>(rate), 0.0);
}

// ---------------------------------------------------------------- curves CSV

inline constexpr const char* kCurveCsvHeader = "mode,freq_hz,t_app_s,ridge_power,valid";

inline void write_curves_csv(const std::string& path, const curves::DispersionCurveSet& set) {
    std::string out = std::string(kCurveCsvHeader) + "\n";
    for (const auto& curve : set) {
        for (std::size_t i = 0; i < curve.omega.size(); ++i) {
            out += std::to_string(curve.mode);
            out += ',';
            out += format_double(rad_to_hz(curve.omega[i]));
            out += ',';
            out += curve.valid[i] ? format_double(curve.t_app[i]) : "nan";
            out += ',';
            out += format_double(curve.ridge_power[i]);
            out += ',';
            out += curve.valid[i] ? '1' : '0';
            out += '\n';
        }
    }
    detail_io::write_file(path, out);
}

inline curves::DispersionCurveSet read_curves_csv(const std::string& path) {
    std::string data = detail_io::read_file(path);
    std::istringstream in(data);
    std::string line;
    if (!std::getline(in, line) || line.rfind("mode,freq_hz,t_app_s", 0) != 0)
        throw ConfigError(path + ": missing curves CSV header");
    std::map<int, curves::DispersionCurve> by_mode;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(row, field, ',')) fields.push_back(field);
        if (fields.size() != 5) throw ConfigError(path + ": malformed curves CSV row: " + line);
        int mode = std::stoi(fields[0]);
        auto& curve = by_mode[mode];
        curve.mode = mode;
        curve.omega.push_back(hz_to_rad(std::stod(fields[1])));
        bool valid = fields[4] == "1";
        curve.t_app.push_back(valid ? std::stod(fields[2]) : std::numeric_limits<double>::quiet_NaN());
        curve.ridge_power.push_back(std::stod(fields[3]));
        curve.valid.push_back(valid);
    }
    curves::DispersionCurveSet set;
    for (auto& [mode, curve] : by_mode) set.push_back(std::move(curve));
    return set;
}

// ---------------------------------------------------------------- spectrogram exports

inline void write_spectrogram_csv(const std::string& path, const tfr::Spectrogram& sp) {
    std::string out = "time_s,freq_hz,power\n";
    for (std::size_t r = 0; r < sp.rows(); ++r)
        for (std::size_t c = 0; c < sp.cols(); ++c) {
            out += format_double(sp.times[c]);
            out += ',';
            out += format_double(rad_to_hz(sp.freqs[r]));
            out += ',';
            out += format_double(sp.power_at(r, c));
            out += '\n';
        }
    detail_io::write_file(path, out);
}

// Binary raster container (little-endian):
//   magic "HMRB" | u32 version=1 | u8 dtype (0 = f64 power, 1 = u8 mask)
//   | u8[3] pad | u64 rows | u64 cols | f64 freq_rad[rows] | f64 time_s[cols]
//   | row-major body (f64 or u8)
struct Raster {
    std::uint8_t dtype = 0;
    std::vector<double> freqs;  // rad/s
    std::vector<double> times;  // seconds
    std::vector<double> values;      // dtype 0
    std::vector<std::uint8_t> mask;  // dtype 1
};

inline void write_raster(const std::string& path, const Raster& raster) {
    std::string out;
    out += "HMRB";
    detail_io::put_le(out, std::uint32_t{1});
    detail_io::put_le(out, raster.dtype);
    out.append(3, '\0');
    detail_io::put_le(out, static_cast<std::uint64_t>(raster.freqs.size()));
    detail_io::put_le(out, static_cast<std::uint64_t>(raster.times.size()));
    for (double f : raster.freqs) detail_io::put_le(out, f);
    for (double t : raster.times) detail_io::put_le(out, t);
    if (raster.dtype == 0)
        for (double v : raster.values) detail_io::put_le(out, v);
    else
        out.append(reinterpret_cast<const char*>(raster.mask.data()), raster.mask.size());
    detail_io::write_file(path, out);
}

inline Raster read_raster(const std::string& path) {
    std::string data = detail_io::read_file(path);
    if (data.size() < 28 || data.compare(0, 4, "HMRB") != 0) throw ConfigError(path + ": not a raster file");
    std::size_t pos = 4;
    auto version = detail_io::get_le<std::uint32_t>(data, pos);
    if (version != 1) throw ConfigError(path + ": unsupported raster version");
    Raster raster;
    raster.dtype = detail_io::get_le<std::uint8_t>(data, pos);
    pos += 3;
    auto rows = detail_io::get_le<std::uint64_t>(data, pos);
    auto cols = detail_io::get_le<std::uint64_t>(data, pos);
    raster.freqs.resize(rows);
    raster.times.resize(cols);
    for (auto& f : raster.freqs) f = detail_io::get_le<double>(data, pos);
    for (auto& t : raster.times) t = detail_io::get_le<double>(data, pos);
    std::size_t n = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    if (raster.dtype == 0) {
        raster.values.resize(n);
        for (auto& v : raster.values) v = detail_io::get_le<double>(data, pos);
    } else if (raster.dtype == 1) {
        if (pos + n > data.size()) throw ConfigError(path + ": raster body truncated");
        raster.mask.assign(data.begin() + static_cast<std::ptrdiff_t>(pos),
                           data.begin() + static_cast<std::ptrdiff_t>(pos + n));
    } else {
        throw ConfigError(path + ": unknown raster dtype");
    }
    return raster;
}

inline Raster raster_from_spectrogram(const tfr::Spectrogram& sp) {
    Raster raster;
    raster.dtype = 0;
    raster.freqs = sp.freqs;
    raster.times = sp.times;
    raster.values = sp.power;
    return raster;
}

// ---------------------------------------------------------------- JSON artifacts

using json = nlohmann::json;

inline json params_to_json(const waveguide::WaveguideParams& p) {
    return json{{"range_m", p.range},       {"c_water_ms", p.c_water},     {"c_bottom_ms", p.c_bottom},
                {"rho_water_kgm3", p.rho_water}, {"rho_bottom_kgm3", p.rho_bottom}, {"depth_m", p.depth},
                {"dt_s", p.dt},             {"z_source_m", p.z_source},    {"z_receiver_m", p.z_receiver}};
}

inline json result_to_json(const inversion::InversionResult& res,
                           const waveguide::WaveguideParams* truth = nullptr) {
    json j;
    j["recovered"] = params_to_json(res.params);
    j["alpha"] = res.alpha;
    j["misfit"] = res.misfit;
    j["penalized"] = res.penalized;
    j["iterations"] = res.iterations;
    j["converged"] = res.converged;
    j["trace"] = res.trace;
    j["prior_deviation"] = {{"c_water", res.dev_c_water},
                            {"rho_water", res.dev_rho_water},
                            {"rho_bottom", res.dev_rho_bottom},
                            {"depth", res.dev_depth}};
    if (truth) {
        auto rel = [](double got, double want) { return std::abs(got - want) / std::abs(want); };
        j["errors_vs_truth"] = {{"range", rel(res.params.range, truth->range)},
                                {"c_water", rel(res.params.c_water, truth->c_water)},
                                {"c_bottom", rel(res.params.c_bottom, truth->c_bottom)},
                                {"rho_water", rel(res.params.rho_water, truth->rho_water)},
                                {"rho_bottom", rel(res.params.rho_bottom, truth->rho_bottom)},
                                {"depth", rel(res.params.depth, truth->depth)},
                                {"dt_abs_s", std::abs(res.params.dt - truth->dt)}};
    }
    return j;
}

inline void write_json(const std::string& path, const json& j) { detail_io::write_file(path, j.dump(2) + "\n"); }

inline json read_json(const std::string& path) { return json::parse(detail_io::read_file(path)); }

inline void write_separation_log(const std::string& path, const std::vector<separation::ModePeelLog>& log) {
    std::string out;
    for (const auto& entry : log) {
        json j{{"mode", entry.mode},
               {"t0_s", entry.t0},
               {"quality", entry.quality},
               {"basin_count", entry.basin_count},
               {"fallback", entry.fallback}};
        out += j.dump() + "\n";
    }
    detail_io::write_file(path, out);
}

}  // namespace hydromodal::io
