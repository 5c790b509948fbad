#include "gwx/templates.hpp"

#include "gwx/error.hpp"
#include "gwx/fft.hpp"
#include "gwx/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gwx {
namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// time to coalescence that makes a Newtonian sweep hit f_end at `duration`
double coalescence_time(const ChirpParams& p) {
    return p.duration / (1.0 - std::pow(p.f_end / p.f_start, -8.0 / 3.0));
}

void check_params(const ChirpParams& p, double fs) {
    if (!(p.duration > 0.0)) throw ParameterError("chirp duration must be positive");
    if (!(p.f_start > 0.0 && p.f_end > 0.0)) throw ParameterError("chirp frequencies must be positive");
    if (p.law == SweepLaw::newtonian && !(p.f_end > p.f_start))
        throw ParameterError("Newtonian sweep needs f_end > f_start");
    if (!(std::max(p.f_start, p.f_end) < fs / 2.0)) throw ParameterError("chirp sweeps above Nyquist");
    if (!(p.taper_fraction >= 0.0 && p.taper_fraction < 0.5)) throw ParameterError("taper fraction must be in [0, 0.5)");
}

std::vector<double> smoothed_unit_noise(std::uint64_t seed, std::size_t n, double bw, double fs) {
    auto w = gaussian_draws(seed, n);
    if (bw > 0.0 && bw < fs / 2.0) {
        auto spec = fft::rfft(w);
        const double df = fs / static_cast<double>(n);
        for (std::size_t k = 0; k < spec.size(); ++k)
            if (df * static_cast<double>(k) > bw) spec[k] = 0.0;
        w = fft::irfft(spec, n);
    }
    const double s = std_dev(w);
    if (s > 0.0)
        for (auto& v : w) v /= s;
    return w;
}

}    // namespace

double ChirpParams::frequency_at(double t) const {
    if (law == SweepLaw::linear) return f_start + (f_end - f_start) * t / duration;
    const double tc = coalescence_time(*this);
    return f_start * std::pow(1.0 - t / tc, -3.0 / 8.0);
}

double ChirpParams::phase_at(double t) const {
    if (law == SweepLaw::linear) return two_pi * (f_start * t + 0.5 * (f_end - f_start) / duration * t * t);
    const double tc = coalescence_time(*this);
    return two_pi * f_start * tc * (8.0 / 5.0) * (1.0 - std::pow(1.0 - t / tc, 5.0 / 8.0));
}

std::string ChirpParams::to_json(std::uint64_t seed) const {
    nlohmann::json j = {{"name", name},
                        {"f0", carrier_f0},
                        {"duration", duration},
                        {"sweep_law", {{"kind", law == SweepLaw::linear ? "linear" : "newtonian"},
                                       {"f_start", f_start},
                                       {"f_end", f_end},
                                       {"amp_exponent", amp_exponent}}},
                        {"taper_fraction", taper_fraction},
                        {"seed", seed}};
    return j.dump(2);
}

ChirpParams ChirpParams::from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        ChirpParams p;
        p.name = j.value("name", std::string("chirp"));
        p.carrier_f0 = j.value("f0", 0.0);
        p.duration = j.at("duration").get<double>();
        const auto& s = j.at("sweep_law");
        const auto kind = s.value("kind", std::string("newtonian"));
        if (kind != "linear" && kind != "newtonian") throw ParameterError("unknown sweep law '" + kind + "'");
        p.law = kind == "linear" ? SweepLaw::linear : SweepLaw::newtonian;
        p.f_start = s.at("f_start").get<double>();
        p.f_end = s.at("f_end").get<double>();
        p.amp_exponent = s.value("amp_exponent", 2.0 / 3.0);
        p.taper_fraction = j.value("taper_fraction", 0.05);
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("template metadata JSON: ") + e.what());
    }
}

// The stand-ins sweep past the physical merger frequency and grow faster
// than the Newtonian f^(2/3) envelope. Both mimic the spectral tilt of a
// whitened detector template, whose autocorrelation decays within a few ms.
ChirpParams gw150914_like() {
    ChirpParams p;
    p.name = "gw150914";
    p.duration = 0.2;
    p.f_start = 50.0;
    p.f_end = 600.0;
    p.amp_exponent = 1.5;
    return p;
}

ChirpParams gw151226_like() {
    ChirpParams p;
    p.name = "gw151226";
    p.duration = 1.0;
    p.f_start = 35.0;
    p.f_end = 450.0;
    p.amp_exponent = 11.0 / 6.0;
    p.carrier_f0 = 56.0;
    return p;
}

ChirpParams gw170104_like() {
    ChirpParams p;
    p.name = "gw170104";
    p.duration = 0.12;
    p.f_start = 60.0;
    p.f_end = 350.0;
    p.amp_exponent = 11.0 / 6.0;
    return p;
}

std::vector<ChirpParams> stock_templates() { return {gw150914_like(), gw151226_like(), gw170104_like()}; }

ChirpParams stock_template(const std::string& name) {
    for (auto& p : stock_templates())
        if (p.name == name) return p;
    throw ParameterError("unknown stock template '" + name + "' (expected gw150914, gw151226 or gw170104)");
}

TimeSeries make_chirp(const ChirpParams& params, double fs) {
    check_params(params, fs);
    const auto n = static_cast<std::size_t>(std::llround(params.duration * fs));
    if (n < 4) throw ParameterError("chirp shorter than four samples");
    // the sweep is fastest at the end, so the closing taper spans one cycle
    // of f_end instead of the full fraction
    const auto taper = static_cast<std::size_t>(std::llround(params.taper_fraction * static_cast<double>(n)));
    const auto end_taper = std::min(taper, static_cast<std::size_t>(std::llround(fs / params.f_end)));
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        const double amp = std::pow(params.frequency_at(t) / params.f_start, params.amp_exponent);
        x[i] = amp * std::cos(params.phase_at(t));
    }
    auto ramp = [](std::size_t i, std::size_t len) {
        return 0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(len)));
    };
    for (std::size_t i = 0; i < taper; ++i) x[i] *= ramp(i, taper);
    for (std::size_t i = 0; i < end_taper; ++i) x[n - 1 - i] *= ramp(i, end_taper);
    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::abs(v));
    for (auto& v : x) v /= peak;
    return TimeSeries(fs, 0.0, std::move(x));
}

Template extract_phase_amplitude(const TimeSeries& h, double carrier_f0) {
    if (!(carrier_f0 >= 0.0)) throw ParameterError("carrier frequency must be nonnegative");
    const auto n = h.size();
    const auto z = analytic_signal(h.samples());
    std::vector<double> env(n);
    std::vector<double> phase(n);
    double env_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        env[i] = std::abs(z[i]);
        env_max = std::max(env_max, env[i]);
    }
    const double small = 1e-3 * env_max;
    const auto near_zero = std::count_if(env.begin(), env.end(), [&](double a) { return !(a > small); });
    if (env_max == 0.0 || static_cast<double>(near_zero) > 0.1 * static_cast<double>(n))
        throw DegenerateError("phase extraction unreliable: envelope near zero over more than 10% of samples");

    double prev = std::arg(z[0]);
    phase[0] = prev;
    for (std::size_t i = 1; i < n; ++i) {
        const double a = std::arg(z[i]);
        double d = a - prev;
        d -= two_pi * std::round(d / two_pi);
        phase[i] = phase[i - 1] + d;
        prev = a;
    }
    for (std::size_t i = 0; i < n; ++i) phase[i] -= two_pi * carrier_f0 * static_cast<double>(i) / h.fs();
    return Template{h, std::move(phase), std::move(env), carrier_f0};
}

TimeSeries synthesize_fm(const Template& tpl) {
    const auto n = tpl.phase.size();
    if (tpl.envelope.size() != n) throw ShapeError("template phase and envelope lengths differ");
    if (n != tpl.base.size()) throw ShapeError("template phase length differs from its base series");
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = tpl.envelope[i] *
               std::cos(two_pi * tpl.carrier_f0 * static_cast<double>(i) / tpl.base.fs() + tpl.phase[i]);
    return tpl.base.with_samples(std::move(x));
}

TimeSeries make_bogus(const Template& tpl, const BogusSpec& spec) {
    if (!(spec.sigma_phase >= 0.0) || !(spec.sigma_amp >= 0.0)) throw ParameterError("bogus noise levels must be >= 0");
    const auto n = tpl.phase.size();
    if (tpl.envelope.size() != n || n != tpl.base.size()) throw ShapeError("template phase and envelope lengths differ");
    const double fs = tpl.base.fs();

    std::vector<double> phase = tpl.phase;
    if (spec.sigma_phase > 0.0) {
        const auto w = smoothed_unit_noise(derive_seed(spec.seed, 1), n, spec.smoothing_bw, fs);
        for (std::size_t i = 0; i < n; ++i) phase[i] += spec.sigma_phase * w[i];
    }
    std::vector<double> env = tpl.envelope;
    if (spec.sigma_amp > 0.0) {
        const double rms = std::sqrt(energy(tpl.envelope) / static_cast<double>(n));
        const auto w = smoothed_unit_noise(derive_seed(spec.seed, 2), n, spec.smoothing_bw, fs);
        for (std::size_t i = 0; i < n; ++i) env[i] = std::max(0.0, env[i] + spec.sigma_amp * rms * w[i]);
    }
    return synthesize_fm(Template{tpl.base, std::move(phase), std::move(env), tpl.carrier_f0});
}

TemplateError template_error(const TimeSeries& ideal, const TimeSeries& candidate) {
    if (ideal.size() != candidate.size()) throw ShapeError("template_error: lengths differ");
    if (std::abs(ideal.fs() - candidate.fs()) > 1e-9 * ideal.fs()) throw ShapeError("template_error: sample rates differ");
    std::vector<double> e(ideal.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = ideal[i] - candidate[i];
    const double ref = std::sqrt(energy(ideal.samples()));
    if (!(ref > 0.0)) throw DegenerateError("template_error: ideal template has zero energy");
    const double rel = std::sqrt(energy(e)) / ref;
    return {ideal.with_samples(std::move(e)), rel};
}

double energy_fraction(const TimeSeries& ts, const EnergySelector& selector) {
    const double total = energy(ts.samples());
    if (!(total > 0.0)) throw DegenerateError("energy_fraction: zero-energy input");
    if (const auto* band = std::get_if<BandSelector>(&selector)) {
        const double nyq = ts.fs() / 2.0;
        if (!(band->f_lo >= 0.0 && band->f_lo < band->f_hi && band->f_hi <= nyq * (1.0 + 1e-12)))
            throw RangeError("band selector must satisfy 0 <= f_lo < f_hi <= fs/2");
        const auto spec = fft::rfft(ts.samples());
        const auto n = ts.size();
        const double df = ts.fs() / static_cast<double>(n);
        double all = 0.0;
        double sel = 0.0;
        for (std::size_t k = 0; k < spec.size(); ++k) {
            const bool edge = k == 0 || (n % 2 == 0 && k == spec.size() - 1);
            const double e = std::norm(spec[k]) * (edge ? 1.0 : 2.0);
            all += e;
            const double f = df * static_cast<double>(k);
            if (f >= band->f_lo && f <= band->f_hi) sel += e;
        }
        return sel / all;
    }
    const auto& win = std::get<TimeSelector>(selector);
    const double half = 0.5 / ts.fs();
    if (!(win.t_a < win.t_b) || win.t_a < ts.t0() - half || win.t_b > ts.t0() + ts.duration() + half)
        throw RangeError("time selector outside the series");
    double sel = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double t = ts.time_at(i);
        if (t >= win.t_a - 1e-12 && t < win.t_b - 1e-12) sel += ts[i] * ts[i];
    }
    return sel / total;
}

}    // namespace gwx
