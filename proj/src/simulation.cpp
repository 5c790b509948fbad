#include "gwx/simulation.hpp"

#include "gwx/error.hpp"
#include "gwx/fft.hpp"
#include "gwx/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace gwx {

using nlohmann::json;

double PsdModel::psd_at(double f) const {
    if (segments.empty()) return 0.0;
    const double fa = std::abs(f);
    // last segment starting at or below fa; clamp below the first break
    std::size_t idx = 0;
    for (std::size_t i = 0; i < segments.size(); ++i)
        if (segments[i].f_hz <= fa) idx = i;
    const auto& seg = segments[idx];
    double value = seg.level;
    if (fa > seg.f_hz && seg.f_hz > 0.0) value = seg.level * std::pow(fa / seg.f_hz, seg.slope);
    double mult = 1.0;
    for (const auto& line : lines) {
        const double z = (fa - line.f_hz) / line.width_hz;
        mult += (line.ratio - 1.0) * std::exp(-0.5 * z * z);
    }
    return value * mult;
}

void PsdModel::validate(double fs) const {
    if (segments.empty()) throw ParameterError("PSD model needs at least one segment");
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (!(segments[i].level > 0.0)) throw ParameterError("PSD model levels must be positive");
        if (segments[i].f_hz < 0.0) throw ParameterError("PSD model break frequencies must be nonnegative");
        if (i > 0 && !(segments[i].f_hz > segments[i - 1].f_hz))
            throw ParameterError("PSD model segments must be sorted by frequency");
    }
    for (const auto& line : lines) {
        if (!(line.f_hz > 0.0 && line.f_hz < fs / 2.0))
            throw ParameterError("spectral line at " + std::to_string(line.f_hz) + " Hz is above Nyquist");
        if (!(line.ratio > 0.0) || !(line.width_hz > 0.0)) throw ParameterError("spectral line ratio and width must be positive");
    }
    for (const auto& step : std_modulation)
        if (!(step.factor >= 0.0)) throw ParameterError("std modulation factors must be nonnegative");
}

PsdModel PsdModel::ligo_like() {
    PsdModel m;
    // log-log slopes chosen so the segments join continuously
    const double s0 = std::log10(1e-43 / 1e-36) / std::log10(20.0);
    const double s1 = std::log10(6.4e-47 / 1e-43) / std::log10(100.0 / 20.0);
    m.segments = {{1.0, 1e-36, s0}, {20.0, 1e-43, s1}, {100.0, 6.4e-47, 0.0}, {200.0, 6.4e-47, 2.0}};
    m.lines = {{60.0, 100.0, 0.5},  {120.0, 100.0, 0.5}, {180.0, 100.0, 0.5}, {500.0, 30.0, 0.3},
               {502.5, 30.0, 0.3}, {505.0, 30.0, 0.3},  {507.5, 30.0, 0.3}};
    return m;
}

PsdModel PsdModel::flat(double level) {
    PsdModel m;
    m.segments = {{0.0, level, 0.0}};
    return m;
}

PsdModel PsdModel::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("PSD model JSON: ") + e.what());
    }
    PsdModel m;
    try {
        for (const auto& s : j.at("segments"))
            m.segments.push_back({s.at("f_hz").get<double>(), s.at("level").get<double>(), s.value("slope", 0.0)});
        if (j.contains("lines"))
            for (const auto& l : j.at("lines"))
                m.lines.push_back({l.at("f_hz").get<double>(), l.at("ratio").get<double>(), l.value("width_hz", 0.5)});
        if (j.contains("std_modulation"))
            for (const auto& s : j.at("std_modulation"))
                m.std_modulation.push_back({s.at("t_s").get<double>(), s.at("factor").get<double>()});
    } catch (const json::exception& e) {
        throw ValidationError(std::string("PSD model JSON: ") + e.what());
    }
    return m;
}

PsdModel PsdModel::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open PSD model " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

std::string PsdModel::to_json() const {
    json j;
    j["version"] = 1;
    j["segments"] = json::array();
    for (const auto& s : segments) j["segments"].push_back({{"f_hz", s.f_hz}, {"level", s.level}, {"slope", s.slope}});
    j["lines"] = json::array();
    for (const auto& l : lines) j["lines"].push_back({{"f_hz", l.f_hz}, {"ratio", l.ratio}, {"width_hz", l.width_hz}});
    if (!std_modulation.empty()) {
        j["std_modulation"] = json::array();
        for (const auto& s : std_modulation) j["std_modulation"].push_back({{"t_s", s.t_s}, {"factor", s.factor}});
    }
    return j.dump(2);
}

PowerSpectrum PsdModel::tabulate(double df, std::size_t count) const {
    std::vector<double> v(count);
    for (std::size_t k = 0; k < count; ++k) v[k] = psd_at(df * static_cast<double>(k));
    return PowerSpectrum(df, std::move(v));
}

BurstSpec BurstSpec::sine(double f0, double duration, double sigma_ratio, double decay_tau) {
    BurstSpec s;
    s.kind = BurstKind::sine_decay;
    s.f0 = f0;
    s.duration = duration;
    s.sigma_ratio = sigma_ratio;
    s.decay_tau = decay_tau;
    return s;
}

BurstSpec BurstSpec::awgn(double duration, double sigma_ratio, std::uint64_t seed) {
    BurstSpec s;
    s.kind = BurstKind::awgn;
    s.duration = duration;
    s.sigma_ratio = sigma_ratio;
    s.seed = seed;
    return s;
}

TimeSeries colored_noise(const PsdModel& model, double duration, double fs, std::uint64_t seed) {
    if (!(fs > 0.0)) throw ParameterError("sample rate must be positive");
    const auto n = static_cast<std::size_t>(std::llround(duration * fs));
    if (n < 2) throw ParameterError("colored noise needs duration * fs >= 2");
    model.validate(fs);

    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double df = fs / static_cast<double>(n);
    const double nd = static_cast<double>(n);
    std::vector<cplx> spec(n / 2 + 1);
    spec[0] = std::sqrt(model.psd_at(0.0) * fs * nd / 2.0) * gauss(rng);
    for (std::size_t k = 1; k < spec.size(); ++k) {
        const bool nyquist = (n % 2 == 0) && k == n / 2;
        const double s = model.psd_at(df * static_cast<double>(k));
        if (nyquist) {
            spec[k] = std::sqrt(s * fs * nd / 2.0) * gauss(rng);
        } else {
            const double re = gauss(rng);
            const double im = gauss(rng);
            spec[k] = std::sqrt(s * fs * nd / 4.0) * cplx(re, im);
        }
    }
    auto x = fft::irfft(spec, n);

    if (!model.std_modulation.empty()) {
        auto steps = model.std_modulation;
        std::sort(steps.begin(), steps.end(), [](const StdStep& a, const StdStep& b) { return a.t_s < b.t_s; });
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / fs;
            double factor = 1.0;
            for (const auto& s : steps)
                if (t >= s.t_s) factor = s.factor;
            x[i] *= factor;
        }
    }
    return TimeSeries(fs, 0.0, std::move(x));
}

namespace {

std::size_t burst_len(const BurstSpec& spec, double fs) {
    if (!(spec.duration > 0.0)) throw ParameterError("burst duration must be positive");
    if (!(spec.sigma_ratio > 0.0)) throw ParameterError("burst sigma_ratio must be positive");
    const auto n = static_cast<std::size_t>(std::llround(spec.duration * fs));
    if (n < 2) throw ParameterError("burst shorter than two samples");
    return n;
}

TimeSeries scale_to(std::vector<double> x, const TimeSeries& ref, double sigma_ratio) {
    const double ref_std = std_dev(ref.samples());
    if (!(ref_std > 0.0)) throw DegenerateError("reference series has zero standard deviation");
    const double s = std_dev(x);
    if (!(s > 0.0)) throw DegenerateError("burst has zero standard deviation");
    const double k = sigma_ratio * ref_std / s;
    for (auto& v : x) v *= k;
    return TimeSeries(ref.fs(), ref.t0(), std::move(x));
}

}    // namespace

TimeSeries sine_burst(const BurstSpec& spec, const TimeSeries& ref) {
    if (spec.kind != BurstKind::sine_decay) throw ParameterError("sine_burst needs a sine_decay spec");
    const auto n = burst_len(spec, ref.fs());
    if (!(spec.f0 > 0.0 && spec.f0 < ref.fs() / 2.0)) throw ParameterError("burst frequency must be in (0, fs/2)");
    if (!(spec.decay_tau > 0.0)) throw ParameterError("decay_tau must be positive (infinity for no decay)");
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / ref.fs();
        const double env = std::isinf(spec.decay_tau) ? 1.0 : std::exp(-t / spec.decay_tau);
        x[i] = env * std::sin(2.0 * std::numbers::pi * spec.f0 * t);
    }
    return scale_to(std::move(x), ref, spec.sigma_ratio);
}

TimeSeries awgn_burst(const BurstSpec& spec, const TimeSeries& ref) {
    if (spec.kind != BurstKind::awgn) throw ParameterError("awgn_burst needs an awgn spec");
    const auto n = burst_len(spec, ref.fs());
    return scale_to(gaussian_draws(spec.seed, n), ref, spec.sigma_ratio);
}

TimeSeries line_interference(double amplitude, double f0, double delta, double duration, double fs) {
    if (!(fs > 0.0)) throw ParameterError("sample rate must be positive");
    if (!(f0 + delta < fs / 2.0)) throw ParameterError("line frequency must be below Nyquist");
    const auto n = static_cast<std::size_t>(std::llround(duration * fs));
    if (n < 1) throw ParameterError("line duration shorter than one sample");
    std::vector<double> x(n);
    const double f = f0 + delta;
    for (std::size_t i = 0; i < n; ++i)
        x[i] = amplitude * std::cos(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs);
    return TimeSeries(fs, 0.0, std::move(x));
}

TimeSeries inject(const TimeSeries& host, const TimeSeries& signal, double t_at) {
    if (std::abs(host.fs() - signal.fs()) > 1e-9 * host.fs()) throw ShapeError("inject: sample rates differ");
    const auto first = std::llround((t_at - host.t0()) * host.fs());
    if (first < 0 || first + static_cast<long long>(signal.size()) > static_cast<long long>(host.size()))
        throw RangeError("inject: signal does not fit inside host at t=" + std::to_string(t_at));
    std::vector<double> out(host.samples().begin(), host.samples().end());
    for (std::size_t i = 0; i < signal.size(); ++i) out[static_cast<std::size_t>(first) + i] += signal[i];
    return host.with_samples(std::move(out));
}

}    // namespace gwx
