#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gwx/conditioning.hpp"
#include "gwx/error.hpp"
#include "gwx/simulation.hpp"
#include "gwx/templates.hpp"
#include "oracles.hpp"

#include <cmath>
#include <numbers>

using namespace gwx;

namespace {

constexpr double fs = 4096.0;

TimeSeries tone(double f, double seconds, double amp = 1.0) {
    std::vector<double> x(static_cast<std::size_t>(seconds * fs));
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = amp * std::sin(2.0 * std::numbers::pi * f * i / fs);
    return TimeSeries(fs, 0.0, std::move(x));
}

// rms over the middle half of the series, away from filter transients
double interior_rms(const TimeSeries& ts) {
    const std::size_t a = ts.size() / 4, b = 3 * ts.size() / 4;
    double s = 0.0;
    for (std::size_t i = a; i < b; ++i) s += ts[i] * ts[i];
    return std::sqrt(s / static_cast<double>(b - a));
}

double band_energy(const TimeSeries& ts, double lo, double hi) {
    const auto sp = forward_spectrum(ts);
    double e = 0.0;
    for (std::size_t k = 0; k < sp.bins.size(); ++k) {
        const double f = sp.df * static_cast<double>(k);
        if (f >= lo && f <= hi) e += std::norm(sp.bins[k]);
    }
    return e;
}

double correlation(std::span<const double> a, std::span<const double> b) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    return ab / std::sqrt(aa * bb);
}

}    // namespace

TEST_CASE("band-pass keeps a passband tone and rejects a stopband tone") {
    const auto pass = butterworth_bandpass(tone(150.0, 4.0), 43.0, 300.0, 4);
    CHECK(pass.size() == 4 * 4096);
    const double ratio = interior_rms(pass) / (1.0 / std::sqrt(2.0));
    CHECK(ratio >= 0.95);
    CHECK(ratio <= 1.05);

    const auto stop = butterworth_bandpass(tone(1200.0, 4.0), 43.0, 300.0, 4);
    CHECK(interior_rms(stop) / (1.0 / std::sqrt(2.0)) <= 0.01);

    const auto zero = butterworth_bandpass(TimeSeries(fs, 0.0, std::vector<double>(4096, 0.0)), 43.0, 300.0, 4);
    for (std::size_t i = 0; i < zero.size(); ++i) REQUIRE(zero[i] == 0.0);
}

TEST_CASE("band-pass design: unit gain at centre, 40 dB an octave out after two passes") {
    const auto sos = design_butterworth_bandpass(43.0, 300.0, 4, fs);
    CHECK(sos.size() == 4);
    CHECK(std::abs(sos_response(sos, std::sqrt(43.0 * 300.0), fs)) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(sos_response(sos, 43.0, fs)) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
    CHECK(std::abs(sos_response(sos, 300.0, fs)) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
    // zero-phase filtering applies |H|^2
    CHECK(std::norm(sos_response(sos, 600.0, fs)) < 0.01);
    CHECK(std::norm(sos_response(sos, 21.5, fs)) < 0.01);
    for (double f : {21.5, 600.0}) {
        const auto out = butterworth_bandpass(tone(f, 8.0), 43.0, 300.0, 4);
        CHECK(interior_rms(out) / (1.0 / std::sqrt(2.0)) < 0.01);
    }
}

TEST_CASE("band-pass parameter validation") {
    const auto x = tone(100.0, 1.0);
    CHECK_THROWS_AS(butterworth_bandpass(x, 0.0, 300.0, 4), ParameterError);
    CHECK_THROWS_AS(butterworth_bandpass(x, 300.0, 43.0, 4), ParameterError);
    CHECK_THROWS_AS(butterworth_bandpass(x, 43.0, 2048.0, 4), ParameterError);
    CHECK_THROWS_AS(butterworth_bandpass(x, 43.0, 300.0, 0), ParameterError);
}

TEST_CASE("band-pass is linear and shift-invariant in the interior") {
    const auto a = oracle::gaussian(1, 16384);
    const auto b = oracle::gaussian(2, 16384);
    std::vector<double> mix(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) mix[i] = 2.0 * a[i] - 0.5 * b[i];
    const auto fa = butterworth_bandpass(TimeSeries(fs, 0.0, a), 43.0, 300.0, 4);
    const auto fb = butterworth_bandpass(TimeSeries(fs, 0.0, b), 43.0, 300.0, 4);
    const auto fm = butterworth_bandpass(TimeSeries(fs, 0.0, mix), 43.0, 300.0, 4);
    for (std::size_t i = 0; i < mix.size(); ++i) REQUIRE(std::abs(fm[i] - (2.0 * fa[i] - 0.5 * fb[i])) < 1e-9);

    const std::size_t k = 137;
    std::vector<double> shifted(a.size() + k, 0.0);
    std::copy(a.begin(), a.end(), shifted.begin() + k);
    std::vector<double> base(a.size() + k, 0.0);
    std::copy(a.begin(), a.end(), base.begin());
    const auto f0 = butterworth_bandpass(TimeSeries(fs, 0.0, base), 43.0, 300.0, 4);
    const auto f1 = butterworth_bandpass(TimeSeries(fs, 0.0, shifted), 43.0, 300.0, 4);
    const auto guard = static_cast<std::size_t>(4.0 * settle_time(43.0, 300.0, 4) * fs);
    double peak = 0.0;
    for (std::size_t i = guard; i + guard < a.size(); ++i) peak = std::max(peak, std::abs(f0[i]));
    for (std::size_t i = guard; i + guard < a.size(); ++i) REQUIRE(std::abs(f1[i + k] - f0[i]) < 1e-6 * peak);
}

TEST_CASE("causal band-pass also passes the centre tone") {
    const auto out = butterworth_bandpass(tone(113.0, 4.0), 43.0, 300.0, 4, FilterPhase::causal);
    CHECK(interior_rms(out) / (1.0 / std::sqrt(2.0)) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("whiten_full: white input, flat PSD") {
    const TimeSeries x(fs, 0.0, oracle::gaussian(3, 8192));
    const auto w = whiten_full(x, PowerSpectrum(1.0, std::vector<double>(2049, 2.0 / fs)));
    CHECK(correlation(w.samples(), x.samples()) > 0.999);
    double ex = 0.0, ew = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        ex += x[i] * x[i];
        ew += w[i] * w[i];
    }
    CHECK(ew / ex == doctest::Approx(1.0).epsilon(1e-9));

    const auto z = whiten_full(TimeSeries(fs, 0.0, std::vector<double>(8192, 0.0)),
                               PowerSpectrum(1.0, std::vector<double>(2049, 1.0)));
    for (std::size_t i = 0; i < z.size(); ++i) REQUIRE(z[i] == 0.0);
}

TEST_CASE("whiten_full flattens LIGO-like noise in 43-300 Hz") {
    const auto model = PsdModel::ligo_like();
    const auto noise = colored_noise(model, 128.0, fs, 17);
    const auto w = whiten_full(noise, welch_psd(noise));
    const auto p = welch_psd(w);
    double lo = 1e300, hi = 0.0;
    // 8 Hz band averages
    for (double f = 43.0; f + 8.0 <= 300.0; f += 8.0) {
        double s = 0.0;
        int c = 0;
        for (std::size_t k = 0; k < p.size(); ++k)
            if (p.frequency(k) >= f && p.frequency(k) < f + 8.0) {
                s += p[k];
                ++c;
            }
        lo = std::min(lo, s / c);
        hi = std::max(hi, s / c);
    }
    CHECK(hi / lo <= 2.0);
    // unit variance for noise drawn from its own PSD
    CHECK(std_dev(w.samples()) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("whiten_full is linear") {
    const auto psd = PsdModel::ligo_like().tabulate(0.25, 8193);
    const auto a = oracle::gaussian(4, 8192, 1e-21);
    const auto b = oracle::gaussian(5, 8192, 1e-21);
    std::vector<double> mix(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) mix[i] = 3.0 * a[i] + 0.25 * b[i];
    const auto wa = whiten_full(TimeSeries(fs, 0.0, a), psd);
    const auto wb = whiten_full(TimeSeries(fs, 0.0, b), psd);
    const auto wm = whiten_full(TimeSeries(fs, 0.0, mix), psd);
    double scale = 0.0;
    for (std::size_t i = 0; i < mix.size(); ++i) scale = std::max(scale, std::abs(wm[i]));
    for (std::size_t i = 0; i < mix.size(); ++i) REQUIRE(std::abs(wm[i] - (3.0 * wa[i] + 0.25 * wb[i])) < 1e-10 * scale);
}

TEST_CASE("PSD floor and degenerate PSD") {
    std::vector<double> v(2049, 1.0);
    v[100] = 0.0;
    const auto grid = psd_on_grid(PowerSpectrum(1.0, v), 4096, fs);
    CHECK(grid[100] == doctest::Approx(psd_floor_fraction));
    const TimeSeries x(fs, 0.0, oracle::gaussian(6, 4096));
    CHECK_THROWS_AS(whiten_full(x, PowerSpectrum(1.0, std::vector<double>(2049, 0.0))), DegenerateError);
}

TEST_CASE("detect_lines: flat, single spike, model lines, scale invariance") {
    CHECK(detect_lines(PowerSpectrum(0.25, std::vector<double>(8193, 3.0))).empty());

    std::vector<double> v(8193, 3.0);
    v[240] = 300.0;    // 60 Hz at 0.25 Hz spacing
    const auto one = detect_lines(PowerSpectrum(0.25, v));
    REQUIRE(one.size() == 1);
    CHECK(one[0].lo() <= 60.0);
    CHECK(one[0].hi() >= 60.0);
    CHECK(one[0].peak_ratio > 1.0);

    const auto model = PsdModel::ligo_like().tabulate(0.25, 8193);
    const auto lines = detect_lines(model);
    CHECK(lines.size() >= 3);
    for (double f : {60.0, 120.0, 180.0}) {
        const bool found = std::any_of(lines.begin(), lines.end(),
                                       [&](const LineBand& b) { return std::abs(b.f_center - f) <= 1.0; });
        CHECK_MESSAGE(found, "no band near " << f << " Hz");
    }
    for (std::size_t i = 1; i < lines.size(); ++i) CHECK(lines[i].f_center > lines[i - 1].f_center);

    const auto scaled = detect_lines(model.scaled(1e7));
    REQUIRE(scaled.size() == lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        CHECK(scaled[i].f_center == lines[i].f_center);
        CHECK(scaled[i].half_width == lines[i].half_width);
    }
    CHECK_THROWS_AS(detect_lines(model, 1.0), ParameterError);
}

TEST_CASE("whiten_localized: empty band list is the identity") {
    const TimeSeries x(fs, 0.0, oracle::gaussian(7, 8192));
    const auto psd = PsdModel::ligo_like().tabulate(0.25, 8193);
    const auto y = whiten_localized(x, psd, {});
    for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(std::abs(y[i] - x[i]) < 1e-10);
}

TEST_CASE("whiten_localized: one band over the whole grid matches full whitening up to scale") {
    const TimeSeries x(fs, 0.0, oracle::gaussian(8, 8192));
    const auto psd = PsdModel::ligo_like().tabulate(0.25, 8193);
    const std::vector<LineBand> all{{1024.0, 1024.0 + 1.0, 1.0}};
    const auto loc = whiten_localized(x, psd, all);
    const auto full = whiten_full(x, psd);
    CHECK(correlation(loc.samples(), full.samples()) > 1.0 - 1e-10);
}

TEST_CASE("whiten_localized suppresses a strong line inside its band") {
    const double duration = 32.0;
    auto line = line_interference(1.0, 60.0, half_bin_32s, duration, fs);
    const auto floor_noise = oracle::gaussian(9, line.size(), 1e-3);
    std::vector<double> x(line.samples().begin(), line.samples().end());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += floor_noise[i];
    const TimeSeries ts(fs, 0.0, x);
    const auto psd = welch_psd(ts);
    const auto bands = detect_lines(psd);
    REQUIRE(!bands.empty());
    const auto out = whiten_localized(line, psd, bands);
    const double before = band_energy(line, 59.0, 61.0);
    const double after = band_energy(out, 59.0, 61.0);
    CHECK(10.0 * std::log10(before / after) >= 20.0);
}

TEST_CASE("localized whitening distorts a template less than full whitening") {
    const auto h = make_chirp(gw150914_like(), fs);
    const double duration = 32.0;
    const auto line = line_interference(1.0, 60.0, half_bin_32s, duration, fs);
    const auto noise = oracle::gaussian(10, line.size(), 1e-3);
    std::vector<double> base(line.samples().begin(), line.samples().end());
    for (std::size_t i = 0; i < base.size(); ++i) base[i] += noise[i];
    const TimeSeries background(fs, 0.0, base);
    const auto psd = welch_psd(background);
    const auto bands = detect_lines(psd);

    const double at = 16.0;
    const auto x = inject(background, h, at);
    const auto i0 = static_cast<std::size_t>(at * fs);
    const auto window = [&](const TimeSeries& ts) {
        std::vector<double> w(ts.samples().begin() + i0, ts.samples().begin() + i0 + h.size());
        return normalize_unit_energy(TimeSeries(fs, 0.0, std::move(w)));
    };
    const auto clean = normalize_unit_energy(h.with_t0(0.0));
    const auto err_full = template_error(clean, window(whiten_full(x, psd))).rel_l2;
    const auto err_loc = template_error(clean, window(whiten_localized(x, psd, bands))).rel_l2;
    MESSAGE("full " << err_full << " localized " << err_loc);
    CHECK(err_loc < err_full);
}
