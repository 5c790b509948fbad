#include "gwx/conditioning.hpp"

#include "gwx/error.hpp"
#include "gwx/fft.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gwx {
namespace {

void check_band(double f_lo, double f_hi, int order, double fs) {
    if (!(f_lo > 0.0 && f_lo < f_hi && f_hi < fs / 2.0))
        throw ParameterError("band edges must satisfy 0 < f_lo < f_hi < fs/2");
    if (order < 1) throw ParameterError("filter order must be at least 1");
}

std::vector<cplx> analog_bandpass_poles(double w_lo, double w_hi, int order) {
    const double w0 = std::sqrt(w_lo * w_hi);
    const double bw = w_hi - w_lo;
    std::vector<cplx> poles;
    for (int k = 1; k <= order; ++k) {
        const double theta = std::numbers::pi * (2.0 * k + order - 1) / (2.0 * order);
        const cplx p = std::polar(1.0, theta);
        const cplx pb = p * bw;
        const cplx disc = std::sqrt(pb * pb - 4.0 * w0 * w0);
        poles.push_back((pb + disc) / 2.0);
        poles.push_back((pb - disc) / 2.0);
    }
    return poles;
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

void run_sos(std::span<const Biquad> sos, std::vector<double>& x) {
    if (x.empty()) return;
    // steady-state initial conditions for a constant input equal to x[0]
    double level = x.front();
    for (const auto& s : sos) {
        const double gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
        double z2 = s.b2 * level - s.a2 * gain * level;
        double z1 = s.b1 * level - s.a1 * gain * level + z2;
        for (auto& v : x) {
            const double in = v;
            const double out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
        level *= gain;
    }
}

}    // namespace

std::vector<double> psd_on_grid(const PowerSpectrum& psd, std::size_t n, double fs) {
    const double df = fs / static_cast<double>(n);
    auto s = psd.sample_on(df, n / 2 + 1);
    const double floor = psd_floor_fraction * median_of(s);
    for (auto& v : s) v = std::max(v, floor);
    if (std::any_of(s.begin(), s.end(), [](double v) { return !(v > 0.0); }))
        throw DegenerateError("PSD has zero bins on the analysis grid after flooring");
    return s;
}

std::vector<Biquad> design_butterworth_bandpass(double f_lo, double f_hi, int order, double fs) {
    check_band(f_lo, f_hi, order, fs);
    const double k = 2.0 * fs;
    const double w_lo = k * std::tan(std::numbers::pi * f_lo / fs);
    const double w_hi = k * std::tan(std::numbers::pi * f_hi / fs);
    std::vector<cplx> zpoles;
    for (const auto& p : analog_bandpass_poles(w_lo, w_hi, order)) zpoles.push_back((k + p) / (k - p));

    std::vector<cplx> upper;
    std::vector<double> real;
    for (const auto& z : zpoles) {
        if (std::abs(z.imag()) <= 1e-12 * std::abs(z))
            real.push_back(z.real());
        else if (z.imag() > 0.0)
            upper.push_back(z);
    }
    std::sort(real.begin(), real.end());

    std::vector<Biquad> sos;
    for (const auto& z : upper) sos.push_back({1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)});
    for (std::size_t i = 0; i + 1 < real.size(); i += 2)
        sos.push_back({1.0, 0.0, -1.0, -(real[i] + real[i + 1]), real[i] * real[i + 1]});
    if (sos.size() != static_cast<std::size_t>(order))
        throw DegenerateError("Butterworth design produced an unexpected pole layout");

    const double w0 = std::sqrt(w_lo * w_hi);
    const double f_center = fs / std::numbers::pi * std::atan(w0 / k);
    const double g = std::abs(sos_response(sos, f_center, fs));
    sos.front().b0 /= g;
    sos.front().b1 /= g;
    sos.front().b2 /= g;
    return sos;
}

cplx sos_response(std::span<const Biquad> sos, double f, double fs) {
    const cplx zinv = std::polar(1.0, -2.0 * std::numbers::pi * f / fs);
    cplx h = 1.0;
    for (const auto& s : sos) h *= (s.b0 + zinv * (s.b1 + zinv * s.b2)) / (1.0 + zinv * (s.a1 + zinv * s.a2));
    return h;
}

double settle_time(double f_lo, double f_hi, int order) {
    const auto poles = analog_bandpass_poles(2.0 * std::numbers::pi * f_lo, 2.0 * std::numbers::pi * f_hi, order);
    double slowest = std::numeric_limits<double>::infinity();
    for (const auto& p : poles) slowest = std::min(slowest, std::abs(p.real()));
    return std::log(100.0) / slowest;
}

TimeSeries butterworth_bandpass(const TimeSeries& ts, double f_lo, double f_hi, int order, FilterPhase phase) {
    const auto sos = design_butterworth_bandpass(f_lo, f_hi, order, ts.fs());
    std::vector<double> x(ts.samples().begin(), ts.samples().end());
    if (phase == FilterPhase::causal) {
        run_sos(sos, x);
        return ts.with_samples(std::move(x));
    }
    // odd extension at both ends, as in the usual filtfilt
    const std::size_t n = x.size();
    const std::size_t pad = std::min<std::size_t>(n - 1, 3 * (2 * static_cast<std::size_t>(order) + 1));
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x.front() - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x.back() - x[n - 1 - i]);
    run_sos(sos, ext);
    std::reverse(ext.begin(), ext.end());
    run_sos(sos, ext);
    std::reverse(ext.begin(), ext.end());
    std::copy(ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n), x.begin());
    return ts.with_samples(std::move(x));
}

TimeSeries whiten_full(const TimeSeries& ts, const PowerSpectrum& psd) {
    const auto n = ts.size();
    const auto s = psd_on_grid(psd, n, ts.fs());
    auto spec = fft::rfft(ts.samples());
    const double half_fs = ts.fs() / 2.0;
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] /= std::sqrt(s[k] * half_fs);
    return ts.with_samples(fft::irfft(spec, n));
}

TimeSeries whiten_localized(const TimeSeries& ts, const PowerSpectrum& psd, std::span<const LineBand> lines) {
    const auto n = ts.size();
    const auto s = psd_on_grid(psd, n, ts.fs());
    const double df = ts.fs() / static_cast<double>(n);
    std::vector<double> gain(s.size(), 1.0);
    for (const auto& band : lines) {
        if (!(band.half_width > 0.0)) throw ParameterError("line band half-width must be positive");
        const double ramp = band.half_width / 4.0;
        const double reach = std::max(4.0, 2.0 * band.half_width);
        std::vector<double> neighbours;
        std::vector<double> all;
        for (std::size_t k = 0; k < s.size(); ++k) {
            const double f = df * static_cast<double>(k);
            if (f < band.lo() - reach || f > band.hi() + reach) continue;
            all.push_back(s[k]);
            if (f < band.lo() - ramp || f > band.hi() + ramp) neighbours.push_back(s[k]);
        }
        const double ref = median_of(neighbours.empty() ? all : neighbours);
        if (!(ref > 0.0)) continue;
        for (std::size_t k = 0; k < s.size(); ++k) {
            const double f = df * static_cast<double>(k);
            double w = 0.0;
            if (f >= band.lo() && f <= band.hi())
                w = 1.0;
            else if (f < band.lo() && f > band.lo() - ramp)
                w = 0.5 * (1.0 + std::cos(std::numbers::pi * (band.lo() - f) / ramp));
            else if (f > band.hi() && f < band.hi() + ramp)
                w = 0.5 * (1.0 + std::cos(std::numbers::pi * (f - band.hi()) / ramp));
            if (w > 0.0) gain[k] *= 1.0 - w * (1.0 - std::sqrt(ref / s[k]));
        }
    }
    auto spec = fft::rfft(ts.samples());
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= gain[k];
    return ts.with_samples(fft::irfft(spec, n));
}

TimeSeries whiten(const TimeSeries& ts, const PowerSpectrum& psd, const WhitenMode& mode) {
    return mode.variant == WhitenVariant::full_band ? whiten_full(ts, psd) : whiten_localized(ts, psd, mode.line_bands);
}

std::vector<LineBand> detect_lines(const PowerSpectrum& psd, double threshold_ratio, double median_window_hz) {
    if (!(threshold_ratio > 1.0)) throw ParameterError("line threshold ratio must exceed 1");
    if (!(median_window_hz > 0.0)) throw ParameterError("median window must be positive");
    const auto v = psd.values();
    const std::size_t n = v.size();
    auto half = static_cast<std::size_t>(std::llround(median_window_hz / psd.df() / 2.0));
    half = std::max<std::size_t>(half, 1);

    std::vector<double> ratio(n, 0.0);
    std::vector<double> window;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const std::size_t lo = k > half ? k - half : 0;
        const std::size_t hi = std::min(n - 1, k + half);
        window.assign(v.begin() + static_cast<std::ptrdiff_t>(lo), v.begin() + static_cast<std::ptrdiff_t>(hi + 1));
        const double med = median_of(window);
        if (med > 0.0) ratio[k] = v[k] / med;
    }

    struct Run {
        std::size_t first, last;
        double peak;
    };
    std::vector<Run> runs;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (!(ratio[k] > threshold_ratio)) continue;
        if (!runs.empty() && k <= runs.back().last + 2) {
            runs.back().last = k;
            runs.back().peak = std::max(runs.back().peak, ratio[k]);
        } else {
            runs.push_back({k, k, ratio[k]});
        }
    }
    std::vector<LineBand> bands;
    for (const auto& r : runs) {
        const double lo = psd.frequency(r.first) - psd.df() / 2.0;
        const double hi = psd.frequency(r.last) + psd.df() / 2.0;
        bands.push_back({0.5 * (lo + hi), 0.5 * (hi - lo), r.peak});
    }
    return bands;
}

}    // namespace gwx
