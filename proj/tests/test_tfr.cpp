#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include <hydromodal/tfr.hpp>
#include <hydromodal/waveguide.hpp>

#include "oracles.hpp"

using namespace hydromodal;
using namespace hydromodal::tfr;
using hydromodal::waveguide::WaveguideParams;

namespace {

/// Band-limited multi-tone test signal with a smooth envelope.
TimeSeries test_signal(double fs, double duration, std::uint64_t seed = 1, double f_hi = 0.0) {
    detail::SplitMix64 rng(seed);
    if (f_hi <= 0.0) f_hi = 0.35 * fs;
    std::size_t n = static_cast<std::size_t>(duration * fs);
    std::vector<double> s(n, 0.0);
    double mid = duration / 2.0, width = duration / 5.0;
    for (int tone = 0; tone < 5; ++tone) {
        double f = 0.1 * f_hi + rng.uniform() * 0.9 * f_hi;
        double a = 0.5 + rng.uniform();
        double ph = rng.uniform() * kTwoPi;
        for (std::size_t i = 0; i < n; ++i) {
            double t = static_cast<double>(i) / fs;
            double env = std::exp(-std::pow((t - mid) / width, 2.0));
            s[i] += a * env * std::cos(kTwoPi * f * t + ph);
        }
    }
    return TimeSeries(std::move(s), fs, 0.0);
}

double energy(const TimeSeries& ts, double t_lo, double t_hi) {
    double e = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        double t = ts.time_at(i);
        if (t >= t_lo && t <= t_hi) e += ts.samples[i] * ts.samples[i];
    }
    return e / ts.sample_rate;
}

}  // namespace

TEST_CASE("gaussian window: analytic energy and transform pair") {
    GaussianWindow win{hz_to_rad(4.0)};
    // integral of h^2 equals sigma / (2 sqrt(pi)); discrete sum at sigma*dt << 1
    double dt = 1e-3;
    REQUIRE(win.sigma * dt < 0.1);
    double sum = 0.0;
    for (double t = -2.0; t <= 2.0; t += dt) sum += win.h(t) * win.h(t) * dt;
    CHECK(sum == Catch::Approx(win.energy()).epsilon(1e-6));

    // numeric Fourier transform of h matches h_hat
    for (double w : {0.0, 5.0, 12.0, 25.0}) {
        std::complex<double> acc{0.0, 0.0};
        for (double t = -2.0; t <= 2.0; t += dt) acc += win.h(t) * std::polar(1.0, -w * t) * dt;
        CHECK(std::abs(acc.real() - win.h_hat(w)) < 1e-9);
        CHECK(std::abs(acc.imag()) < 1e-12);
    }
}

TEST_CASE("spectrogram: pure tone has a gaussian frequency profile") {
    double fs = 200.0, f0 = 31.0;
    std::size_t n = 4096;
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = std::cos(kTwoPi * f0 * static_cast<double>(i) / fs);
    TimeSeries ts(std::move(s), fs, 0.0);
    double sigma = hz_to_rad(3.0);
    auto sp = spectrogram(ts, sigma, 100.0, 8);

    std::size_t c = sp.cols() / 2;  // interior column
    std::size_t peak = 0;
    double pv = -1.0;
    for (std::size_t r = 0; r < sp.rows(); ++r) {
        if (sp.power_at(r, c) > pv) {
            pv = sp.power_at(r, c);
            peak = r;
        }
    }
    CHECK(std::abs(sp.freqs[peak] - hz_to_rad(f0)) < sp.freqs[1] - sp.freqs[0]);
    // profile ratio against h_hat^2 = exp(-(w-w0)^2/sigma^2) around the peak
    for (long long d : {-6LL, -3LL, 3LL, 6LL}) {
        auto r = static_cast<std::size_t>(static_cast<long long>(peak) + d);
        double expected = std::exp(-std::pow(sp.freqs[r] - hz_to_rad(f0), 2.0) / (sigma * sigma));
        CHECK(sp.power_at(r, c) / pv == Catch::Approx(expected).epsilon(0.05));
    }
}

TEST_CASE("spectrogram: zero signal, zero power") {
    TimeSeries ts(std::vector<double>(2048, 0.0), 100.0, 0.0);
    auto sp = spectrogram(ts, hz_to_rad(2.0), 50.0, 4);
    for (double v : sp.power) CHECK(v == 0.0);
}

TEST_CASE("spectrogram: window must fit the record") {
    TimeSeries ts(std::vector<double>(256, 0.0), 100.0, 0.0);               // 2.56 s record
    CHECK_THROWS_AS(spectrogram(ts, hz_to_rad(0.1), 50.0, 1), ConfigError);  // 6/sigma ~ 9.5 s
}

TEST_CASE("spectrogram: windowed-FFT path agrees with direct evaluation") {
    auto ts = test_signal(120.0, 6.0, 3);
    double sigma = hz_to_rad(2.5);
    auto plan = make_stft_plan(ts, sigma, 60.0, 16);
    auto sp = spectrogram(ts, sigma, plan);

    std::vector<double> times = {sp.times[10], sp.times[25]};
    std::vector<double> freqs = {sp.freqs[3], sp.freqs[17], sp.freqs[sp.rows() - 1]};
    auto direct = spectrogram_at(ts, sigma, times, freqs);
    std::pair<std::size_t, std::size_t> cols[] = {{10, 0}, {25, 1}};
    std::size_t rows[] = {3, 17, sp.rows() - 1};
    for (auto [cf, cd] : cols) {
        for (std::size_t ri = 0; ri < 3; ++ri) {
            auto a = sp.stft[sp.idx(rows[ri], cf)];
            auto b = direct.stft[direct.idx(ri, cd)];
            CHECK(std::abs(a - b) < 1e-9 * (1.0 + std::abs(b)));
        }
    }
}

TEST_CASE("spectrogram: stft_row matches the planned grid row") {
    auto ts = test_signal(100.0, 5.0, 9);
    double sigma = hz_to_rad(3.0);
    auto sp = spectrogram(ts, sigma, 50.0, 1);
    std::size_t r = sp.rows() / 2;
    auto row = stft_row(ts, sigma, sp.freqs[r]);
    REQUIRE(row.size() == ts.size());
    for (std::size_t c : {std::size_t{40}, std::size_t{200}, sp.cols() - 40}) {
        CHECK(std::abs(row[c] - sp.stft[sp.idx(r, c)]) < 1e-9);
    }
}

TEST_CASE("spectrogram: grid-aligned shifts move ridges exactly") {
    double fs = 100.0;
    auto base = test_signal(fs, 5.0, 11);
    std::size_t shift = 37;
    std::vector<double> shifted(base.size(), 0.0);
    for (std::size_t i = shift; i < base.size(); ++i) shifted[i] = base.samples[i - shift];
    TimeSeries ts2(std::move(shifted), fs, 0.0);

    double sigma = hz_to_rad(3.0);
    auto sp1 = spectrogram(base, sigma, 45.0, 1);
    auto sp2 = spectrogram(ts2, sigma, 45.0, 1);
    std::size_t guard = sp1.plan.half_window + shift;
    for (std::size_t r = 2; r < sp1.rows(); r += 7) {
        std::size_t b1 = 0, b2 = 0;
        double v1 = -1.0, v2 = -1.0;
        for (std::size_t c = guard; c + guard < sp1.cols(); ++c) {
            if (sp1.power_at(r, c) > v1) {
                v1 = sp1.power_at(r, c);
                b1 = c;
            }
        }
        for (std::size_t c = guard; c + guard < sp2.cols(); ++c) {
            if (sp2.power_at(r, c) > v2) {
                v2 = sp2.power_at(r, c);
                b2 = c;
            }
        }
        if (v1 <= 1e-12) continue;
        CHECK(b2 == b1 + shift);
        CHECK(sp2.power_at(r, b2) == Catch::Approx(sp1.power_at(r, b1)).epsilon(1e-9));
    }
}

TEST_CASE("masked inversion: all-ones round trip") {
    auto ts = test_signal(100.0, 6.0, 21);
    double sigma = hz_to_rad(2.0);
    auto sp = spectrogram(ts, sigma, 50.0, 1);  // full one-sided band
    std::vector<std::uint8_t> mask(sp.stft.size(), 1);
    auto rec = invert_masked_stft(sp, mask);
    REQUIRE(rec.size() == ts.size());
    CHECK(oracles::rel_l2_error(rec.samples, ts.samples) < 1e-3);
}

TEST_CASE("masked inversion: zero mask, zero output; mask selects a tone") {
    double fs = 200.0;
    std::size_t n = 4096;
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        double t = static_cast<double>(i) / fs;
        a[i] = std::cos(kTwoPi * 30.0 * t);
        b[i] = 0.8 * std::cos(kTwoPi * 70.0 * t + 0.3);
    }
    std::vector<double> mix(n);
    for (std::size_t i = 0; i < n; ++i) mix[i] = a[i] + b[i];
    TimeSeries ts(std::move(mix), fs, 0.0);
    double sigma = hz_to_rad(4.0);
    auto sp = spectrogram(ts, sigma, 100.0, 1);

    std::vector<std::uint8_t> zero(sp.stft.size(), 0);
    auto silent = invert_masked_stft(sp, zero);
    for (double v : silent.samples) CHECK(v == 0.0);

    std::vector<std::uint8_t> mask(sp.stft.size(), 0);
    for (std::size_t r = 0; r < sp.rows(); ++r) {
        if (std::abs(sp.freqs[r] - hz_to_rad(30.0)) < hz_to_rad(15.0))
            for (std::size_t c = 0; c < sp.cols(); ++c) mask[sp.idx(r, c)] = 1;
    }
    auto rec = invert_masked_stft(sp, mask);
    // interior comparison: selected tone kept, the other suppressed >= 30 dB
    std::size_t guard = sp.plan.half_window;
    double err = 0.0, eb = 0.0;
    for (std::size_t i = guard; i + guard < n; ++i) {
        double d = rec.samples[i] - a[i];
        err += d * d;
        eb += b[i] * b[i];
    }
    CHECK(err / eb < 1e-3);
}

TEST_CASE("masked inversion: linear in the mask") {
    auto ts = test_signal(100.0, 5.0, 31);
    auto sp = spectrogram(ts, hz_to_rad(3.0), 50.0, 2);
    std::vector<std::uint8_t> m1(sp.stft.size(), 0), m2(sp.stft.size(), 0), m12(sp.stft.size(), 1);
    for (std::size_t r = 0; r < sp.rows(); ++r)
        for (std::size_t c = 0; c < sp.cols(); ++c) (r < sp.rows() / 2 ? m1 : m2)[sp.idx(r, c)] = 1;
    auto r1 = invert_masked_stft(sp, m1);
    auto r2 = invert_masked_stft(sp, m2);
    auto r12 = invert_masked_stft(sp, m12);
    double scale = 0.0;
    for (double v : r12.samples) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < r12.size(); ++i)
        REQUIRE(std::abs(r1.samples[i] + r2.samples[i] - r12.samples[i]) < 1e-6 * std::max(1.0, scale));
}

TEST_CASE("warp: unitary round trip and energy preservation") {
    double fs = 200.0;
    auto ts = test_signal(fs, 16.0, 41);
    WarpMap map{5.0};
    auto warped = warp(ts, map);

    double e_orig = energy(ts, map.t0, ts.end_time());
    double e_warp = energy(warped, 0.0, warped.end_time());
    CHECK(std::abs(e_warp - e_orig) / e_orig < 0.01);

    double out_start0 = map.t0 + 1.0 / fs;
    auto i0 = static_cast<std::size_t>(std::ceil((out_start0 - ts.start_time) * fs));
    double out_start = ts.time_at(i0);
    auto coverable = static_cast<std::size_t>(std::floor((map.psi(warped.end_time()) - out_start) * fs)) + 1;
    std::size_t count = std::min(ts.size() - i0, coverable);
    auto back = unwarp(warped, map, out_start, count);
    std::vector<double> got, want;
    for (std::size_t i = 0; i < back.size(); ++i) {
        double t = back.time_at(i);
        if (t < map.t0 + 0.5 || t > ts.end_time() - 0.5) continue;
        got.push_back(back.samples[i]);
        want.push_back(ts.samples[i0 + i]);
    }
    CHECK(oracles::rel_l2_error(got, want) < 0.01);
}

TEST_CASE("warp: zero in, zero out; coverage errors are explicit") {
    TimeSeries zero(std::vector<double>(1024, 0.0), 100.0, 0.0);
    WarpMap map{2.0};
    auto w = warp(zero, map);
    for (double v : w.samples) CHECK(v == 0.0);

    TimeSeries late(std::vector<double>(1024, 0.0), 100.0, 5.0);  // starts after t0
    CHECK_THROWS_AS(warp(late, map), ConfigError);
    CHECK_THROWS_AS(unwarp(w, map, 1.0, 10), ConfigError);          // before t0
    CHECK_THROWS_AS(unwarp(w, map, 3.0, 10'000'000), ConfigError);  // beyond coverage
}

TEST_CASE("warp then unwarp composes to identity on the warped domain") {
    double fs = 200.0;
    // low-frequency content: the physical-domain image of the warped signal
    // must stay below Nyquist once (psi^-1)' stretches its frequencies
    auto warped_src = test_signal(fs, 12.0, 55, 10.0);
    WarpMap map{4.0};
    double out_start = map.t0 + 1.0 / fs;
    double t_end = map.psi(warped_src.end_time());
    auto count = static_cast<std::size_t>((t_end - out_start) * fs);
    auto physical = unwarp(warped_src, map, out_start, count);
    // prepend zeros so the record covers [0, t0] (content there was never
    // representable; the comparison below skips the corresponding margin)
    auto pad = static_cast<std::size_t>(std::ceil(out_start * fs));
    std::vector<double> padded(pad + physical.size(), 0.0);
    for (std::size_t i = 0; i < physical.size(); ++i) padded[pad + i] = physical.samples[i];
    TimeSeries full(std::move(padded), fs, out_start - static_cast<double>(pad) / fs);
    auto round = warp(full, map);

    std::vector<double> got, want;
    for (std::size_t i = 0; i < std::min(round.size(), warped_src.size()); ++i) {
        double t = round.time_at(i);
        if (t < 1.0 || t > warped_src.end_time() - 1.0) continue;
        got.push_back(round.samples[i]);
        want.push_back(warped_src.samples[i]);
    }
    CHECK(oracles::rel_l2_error(got, want) < 0.01);
}

TEST_CASE("warped curves: algebraic properties") {
    WaveguideParams p = waveguide::table1_fixture();
    double t0 = p.range / p.c_water;
    WarpMap map{t0};

    SECTION("rigid curve flattens to the cutoff constant") {
        for (int n : {1, 2, 3}) {
            double flat = p.c_water * kPi * (2.0 * n - 1.0) / (2.0 * p.depth);
            auto curve = [&](double t) {
                // rigid-bottom dispersion curve, high-frequency branch
                return t * flat / std::sqrt(t * t - t0 * t0);
            };
            auto wc = warped_curve(curve, map);
            for (double t : {0.5, 1.0, 3.0, 7.0}) CHECK(wc(t) == Catch::Approx(flat).epsilon(1e-12));
        }
    }
    SECTION("identity in the large-time limit") {
        auto curve = [](double t) { return 100.0 + 3.0 * t; };
        auto wc = warped_curve(curve, map);
        double t = 900.0 * t0;
        CHECK(wc(t) == Catch::Approx(curve(t)).epsilon(1e-3));
    }
}

TEST_CASE("warped curves: fixture modes flatten near the tuned t0", "[slow]") {
    // the high-frequency branch of t_n, numerically inverted, then warped
    WaveguideParams p = waveguide::table1_fixture();
    p.dt = 0.0;
    WarpMap map{6.7};
    for (int n : {1, 2}) {
        auto grid = detail::linspace(rad_to_hz(waveguide::cutoff_omega(p, n)) * 1.35, 100.0, 400);
        std::vector<double> omegas, delays;
        for (double f : grid) {
            omegas.push_back(hz_to_rad(f));
            delays.push_back(waveguide::group_delay(p, omegas.back(), n));
        }
        std::size_t airy =
            static_cast<std::size_t>(std::max_element(delays.begin(), delays.end()) - delays.begin());
        auto omega_of_t = [&](double t) {
            for (std::size_t i = airy; i + 1 < delays.size(); ++i) {
                if (delays[i] >= t && delays[i + 1] <= t) {
                    double a = (delays[i] - t) / (delays[i] - delays[i + 1]);
                    return omegas[i] * (1.0 - a) + omegas[i + 1] * a;
                }
            }
            return omegas.back();
        };
        auto wc = warped_curve(omega_of_t, map);

        // away from the t -> 0 collapse zone the warped layout is much
        // flatter than the raw curve (measured ratios: 0.30 / 0.16)
        double hi = map.psi_inv(delays[airy] * 0.9995);
        std::vector<double> flat_vals, raw_vals;
        for (double t : detail::linspace(0.5 * hi, 0.95 * hi, 50)) {
            flat_vals.push_back(wc(t));
            raw_vals.push_back(omega_of_t(map.psi(t)));
        }
        auto spread = [](const std::vector<double>& v) {
            auto [mn, mx] = std::minmax_element(v.begin(), v.end());
            return (*mx - *mn) / std::max(1e-12, 0.5 * (*mx + *mn));
        };
        CHECK(spread(flat_vals) < 0.40 * spread(raw_vals));
    }
}
