#include "gwx/harness.hpp"

#include "gwx/conditioning.hpp"
#include "gwx/error.hpp"
#include "gwx/parallel.hpp"
#include "gwx/rng.hpp"
#include "gwx/templates.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>

namespace gwx {

using nlohmann::json;

namespace {

struct ScenarioInfo {
    const char* name;
    const char* description;
};

const ScenarioInfo scenario_table[] = {
    {"mf-sine-misfire", "matched filter on LIGO-like noise plus a 64 Hz decaying sine burst"},
    {"mf-awgn-misfire", "matched filter on LIGO-like noise plus a white Gaussian burst"},
    {"mf-bogus", "matched filter with the ideal template on noise plus a phase-noise bogus chirp"},
    {"ccf-bogus", "short-window CCF of the ideal template against noise plus a bogus chirp"},
    {"h1l1-ccf", "short-window CCF between two independent detector-noise streams"},
    {"ref-systems", "reference systems A, 1 and 2: template self-CCF and template-plus-noise pairs"},
    {"window-compare", "r3 of an event-duration window against a 20 s window around the same injection"},
    {"whiten-distortion", "template error after full-band versus localized whitening with a 60 Hz line"},
    {"running-baseline", "running-window CCF of the template over long noise, edges excluded"},
    {"circular-artifact", "template straddling the block edge: circular versus cyclic-prefix matched filter"},
};

// Everything a trial needs that does not depend on the seed.
struct Shared {
    const ScenarioConfig& cfg;
    TimeSeries tmpl;
    ChirpParams chirp;
};

struct TrialOutput {
    TrialReport report;
    std::vector<FigureTable> figures;
};

using TrialFn = std::function<TrialOutput(const Shared&, std::uint64_t, bool)>;

TimeSeries load_input(const std::filesystem::path& p, double fs) {
    auto ts = load_strain(p, StrainFormat::gwx_text);
    if (std::abs(ts.fs() - fs) > 1e-9 * fs)
        throw ShapeError(p.string() + ": sampling rate " + format_double(ts.fs()) + " Hz differs from --fs " +
                         format_double(fs));
    return ts;
}

TimeSeries noise_block(const Shared& sh, std::uint64_t seed, double duration) {
    return colored_noise(sh.cfg.psd_model, duration, sh.cfg.fs, seed);
}

// Noise from a supplied detector file (first `duration` seconds) or
// synthetic noise when no file is given.
TimeSeries detector_noise(const Shared& sh, const std::optional<std::filesystem::path>& file, std::uint64_t seed,
                          double duration) {
    if (!file) return noise_block(sh, seed, duration);
    const auto ts = load_input(*file, sh.cfg.fs);
    if (ts.duration() < duration) return ts.with_t0(0.0);
    return slice_window(ts, ts.t0(), duration).with_t0(0.0);
}

TimeSeries scaled(const TimeSeries& ts, double a) {
    std::vector<double> v(ts.samples().begin(), ts.samples().end());
    for (auto& x : v) x *= a;
    return ts.with_samples(std::move(v));
}

TimeSeries zeros_like(const TimeSeries& ts) { return ts.with_samples(std::vector<double>(ts.size(), 0.0)); }

// Amplitude at which `h` has optimal SNR `snr` against the model PSD on an
// n-sample analysis grid.
double amplitude_for_snr(const Shared& sh, const TimeSeries& h, std::size_t n) {
    const double fs = sh.cfg.fs;
    const auto psd = sh.cfg.psd_model.tabulate(fs / static_cast<double>(n), n / 2 + 1);
    return sh.cfg.params.injection_snr / std::sqrt(sigma_norm(h, psd, n));
}

// The CCF scenarios work on whitened strain. Stock templates stand in for
// whitened detector templates, so signals are added after whitening and
// both strain and template then go through the same band-pass.
TimeSeries whitened(const TimeSeries& noise) { return whiten_full(noise, welch_psd(noise)); }

TimeSeries bandpassed(const TimeSeries& x, const ScenarioParams& p) {
    return butterworth_bandpass(x, p.band_lo, p.band_hi, p.band_order);
}

// Amplitude giving `injection_snr` against unit-variance white noise.
double whitened_amplitude(const Shared& sh, const TimeSeries& h) {
    return sh.cfg.params.injection_snr / std::sqrt(energy(h.samples()));
}

// Band-passed template placed at `t_at` on the grid of `like`.
TimeSeries template_on_grid(const Shared& sh, const TimeSeries& like, double t_at) {
    return bandpassed(inject(zeros_like(like), sh.tmpl, t_at), sh.cfg.params);
}

// Event windows of whitened noise plus `signal` (may be empty) and of the
// band-passed template.
std::pair<TimeSeries, TimeSeries> whitened_event(const Shared& sh, const TimeSeries& noise, double t_at,
                                                 const std::optional<TimeSeries>& signal) {
    auto w = whitened(noise);
    if (signal) w = inject(w, *signal, t_at);
    const double d = sh.tmpl.duration();
    return {slice_window(bandpassed(w, sh.cfg.params), t_at, d), slice_window(template_on_grid(sh, w, t_at), t_at, d)};
}

FigureTable snr_table(const SnrSeries& r, std::string suffix = "") {
    FigureTable t{std::move(suffix), {"t_s", "rho", "rho_reweighted"}, {{}, r.rho, r.rho_reweighted}};
    t.columns[0].resize(r.rho.size());
    for (std::size_t i = 0; i < r.rho.size(); ++i) t.columns[0][i] = r.time_at(i);
    return t;
}

FigureTable ccf_table(const CcfResult& c, std::string suffix = "") {
    return {std::move(suffix), {"lag_s", "ccf"}, {c.lags, c.values}};
}

TrialReport mf_report(const Shared& sh, const SnrSeries& r) {
    TrialReport rep;
    rep.peak_rho_hat = r.peak.value;
    rep.fired = r.peak.value > sh.cfg.snr_threshold;
    const auto it = std::max_element(r.rho.begin(), r.rho.end());
    rep.extras = {{"peak_time_s", r.peak.time}, {"peak_rho", *it}};
    return rep;
}

void set_ccf(TrialReport& rep, const Shared& sh, const CcfResult& c) {
    rep.peak_abs_ccf = c.max_abs();
    rep.r3 = c.r3;
    rep.peaky = c.r3 < sh.cfg.r3_threshold;
}

SnrSeries mf_with_welch(const Shared& sh, const TimeSeries& strain, const TimeSeries& h) {
    return matched_filter(strain, h, welch_psd(strain), sh.cfg.mf);
}

TrialOutput trial_mf_burst(const Shared& sh, std::uint64_t seed, bool detail, BurstKind kind) {
    const auto& p = sh.cfg.params;
    const auto noise = noise_block(sh, seed, p.block_duration);
    const auto burst = kind == BurstKind::sine_decay
                           ? sine_burst(BurstSpec::sine(p.sine_f0, p.burst_duration, p.sine_ratio, p.decay_tau), noise)
                           : awgn_burst(BurstSpec::awgn(p.burst_duration, p.awgn_ratio, derive_seed(seed, 1)), noise);
    const auto strain = inject(noise, burst, noise.t0() + p.inject_time);
    const auto r = mf_with_welch(sh, strain, sh.tmpl);
    TrialOutput out{mf_report(sh, r), {}};
    if (detail) out.figures.push_back(snr_table(r));
    return out;
}

TimeSeries bogus_for(const Shared& sh, std::uint64_t seed) {
    const auto& p = sh.cfg.params;
    const auto tpl = extract_phase_amplitude(sh.tmpl, sh.chirp.carrier_f0);
    return make_bogus(tpl, {p.sigma_phase, p.sigma_amp, p.smoothing_bw, derive_seed(seed, 1)});
}

TrialOutput trial_mf_bogus(const Shared& sh, std::uint64_t seed, bool detail) {
    const auto& p = sh.cfg.params;
    const auto noise = noise_block(sh, seed, p.block_duration);
    const auto bogus = bogus_for(sh, seed);
    const double a = amplitude_for_snr(sh, sh.tmpl, noise.size());
    const auto strain = inject(noise, scaled(bogus, a), noise.t0() + p.inject_time);
    const auto r = mf_with_welch(sh, strain, sh.tmpl);
    TrialOutput out{mf_report(sh, r), {}};
    const auto err = template_error(sh.tmpl, bogus);
    out.report.extras.emplace_back("bogus_rel_l2", err.rel_l2);
    if (detail) {
        out.figures.push_back(snr_table(r));
        FigureTable t{"-templates", {"t_s", "ideal", "bogus", "error"}, {{}, {}, {}, {}}};
        for (std::size_t i = 0; i < sh.tmpl.size(); ++i) {
            t.columns[0].push_back(sh.tmpl.time_at(i));
            t.columns[1].push_back(sh.tmpl[i]);
            t.columns[2].push_back(bogus[i]);
            t.columns[3].push_back(err.error[i]);
        }
        out.figures.push_back(std::move(t));
    }
    return out;
}

TrialOutput trial_ccf_bogus(const Shared& sh, std::uint64_t seed, bool detail) {
    const auto& p = sh.cfg.params;
    const auto noise = noise_block(sh, seed, p.block_duration);
    const auto bogus = bogus_for(sh, seed);
    const double t_at = noise.t0() + p.inject_time;
    const auto [win, tw] = whitened_event(sh, noise, t_at, scaled(bogus, whitened_amplitude(sh, sh.tmpl)));
    const double d = sh.tmpl.duration();
    const auto c = normalized_ccf(win, tw, d / 2.0, decorrelation_time(tw));
    TrialOutput out;
    set_ccf(out.report, sh, c);
    out.report.extras = {{"peak_lag_s", c.peak_lag}, {"tau0_s", c.tau0}};
    if (detail) out.figures.push_back(ccf_table(c));
    return out;
}

TrialOutput trial_h1l1(const Shared& sh, std::uint64_t seed, bool detail) {
    const auto& p = sh.cfg.params;
    const auto h1 = detector_noise(sh, sh.cfg.inputs.h1_file, derive_seed(seed, 1), p.block_duration);
    const auto l1 = detector_noise(sh, sh.cfg.inputs.l1_file, derive_seed(seed, 2), p.block_duration);
    const double t_at = h1.t0() + p.inject_time;
    const double d = sh.tmpl.duration();
    const auto [wh, tw] = whitened_event(sh, h1, t_at, std::nullopt);
    const auto wl = slice_window(bandpassed(whitened(l1), p), t_at, d);
    const auto c = normalized_ccf(wh, wl.with_t0(wh.t0()), d / 2.0, decorrelation_time(tw));

    // the L1 event window used as a matched-filter template against H1
    const auto l1_tmpl = slice_window(l1, t_at, d);
    const auto r = matched_filter(h1, l1_tmpl, welch_psd(h1), sh.cfg.mf);

    TrialOutput out;
    out.report.peak_rho_hat = r.peak.value;
    out.report.fired = r.peak.value > sh.cfg.snr_threshold;
    set_ccf(out.report, sh, c);
    out.report.extras = {{"peak_lag_s", c.peak_lag}};
    if (detail) {
        out.figures.push_back(ccf_table(c));
        out.figures.push_back(snr_table(r, "-mf"));
    }
    return out;
}

TrialOutput trial_ref_systems(const Shared& sh, std::uint64_t seed, bool detail) {
    const auto& p = sh.cfg.params;
    const auto& h = sh.tmpl;
    const double d = h.duration();
    const std::size_t n = h.size();

    const auto ca = normalized_ccf(h, h, d / 2.0);

    const double sd = p.ref_noise_ratio * std_dev(h.samples());
    auto noisy = [&](std::uint64_t s) {
        auto g = gaussian_draws(s, n);
        for (std::size_t i = 0; i < n; ++i) g[i] = h[i] + sd * g[i];
        return h.with_samples(std::move(g));
    };
    const auto c1 = normalized_ccf(noisy(derive_seed(seed, 1)), noisy(derive_seed(seed, 2)), d / 2.0);

    const auto h1 = detector_noise(sh, sh.cfg.inputs.h1_file, derive_seed(seed, 3), p.block_duration);
    const auto l1 = detector_noise(sh, sh.cfg.inputs.l1_file, derive_seed(seed, 4), p.block_duration);
    const double t_at = h1.t0() + p.inject_time;
    const auto hs = scaled(h, whitened_amplitude(sh, h));
    const auto w1 = whitened_event(sh, h1, t_at, hs).first;
    const auto w2 = whitened_event(sh, l1, t_at, hs).first;
    const auto c2 = normalized_ccf(w1, w2.with_t0(w1.t0()), d / 2.0);

    TrialOutput out;
    set_ccf(out.report, sh, c1);
    out.report.extras = {{"tau_a_s", ca.tau0},       {"r3_a", ca.r3},       {"tau_1_s", c1.tau0},
                         {"tau_2_s", c2.tau0},       {"r3_2", c2.r3},       {"peaky_2", c2.r3 < sh.cfg.r3_threshold ? 1.0 : 0.0},
                         {"peak_abs_ccf_2", c2.max_abs()}};
    if (detail) {
        out.figures.push_back(ccf_table(ca, "-a"));
        out.figures.push_back(ccf_table(c1, "-1"));
        out.figures.push_back(ccf_table(c2, "-2"));
    }
    return out;
}

TrialOutput trial_window_compare(const Shared& sh, std::uint64_t seed, bool detail) {
    const auto& p = sh.cfg.params;
    const auto noise = noise_block(sh, seed, p.long_window);
    const double d = sh.tmpl.duration();
    const double t_at = noise.t0() + 0.5 * (p.long_window - d);
    const auto cs = bandpassed(inject(whitened(noise), scaled(sh.tmpl, whitened_amplitude(sh, sh.tmpl)), t_at), p);
    const auto ch = template_on_grid(sh, noise, t_at);
    const auto tw = slice_window(ch, t_at, d);
    const double tau0 = decorrelation_time(tw);

    const auto ws = slice_window(cs, t_at, d);
    const auto c_short = normalized_ccf(ws, tw.with_t0(ws.t0()), d / 2.0, tau0);
    const auto c_long = normalized_ccf(cs, ch, 0.5 * p.long_window, tau0);

    TrialOutput out;
    set_ccf(out.report, sh, c_short);
    out.report.extras = {{"r3_long", c_long.r3},
                         {"peak_abs_ccf_long", c_long.max_abs()},
                         {"short_below_long", c_short.r3 < c_long.r3 ? 1.0 : 0.0}};
    if (detail) {
        out.figures.push_back(ccf_table(c_short, "-short"));
        out.figures.push_back(ccf_table(c_long, "-long"));
    }
    return out;
}

// Shape error of `x` against `ref`: both scaled to unit energy.
double shape_error(std::span<const double> x, std::span<const double> ref) {
    const double ex = std::sqrt(energy(x));
    const double er = std::sqrt(energy(ref));
    if (!(ex > 0.0) || !(er > 0.0)) throw DegenerateError("shape error of an all-zero series");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] / ex - ref[i] / er;
        acc += d * d;
    }
    return std::sqrt(acc);
}

TrialOutput trial_whiten_distortion(const Shared& sh, std::uint64_t seed, bool detail) {
    const auto& p = sh.cfg.params;
    const double fs = sh.cfg.fs;
    const auto noise = noise_block(sh, seed, p.block_duration);
    const double a = amplitude_for_snr(sh, sh.tmpl, noise.size());
    const auto line = line_interference(a, 60.0, half_bin_32s, p.block_duration, fs);
    const double t_at = noise.t0() + p.inject_time;

    // the PSD a pipeline would estimate: detector noise with the line on top
    std::vector<double> nl(noise.size());
    for (std::size_t i = 0; i < nl.size(); ++i) nl[i] = noise[i] + line[i];
    const auto psd = welch_psd(noise.with_samples(std::move(nl)));
    const auto bands = detect_lines(psd);

    const auto x = inject(line.with_t0(noise.t0()), scaled(sh.tmpl, a), t_at);
    const double d = sh.tmpl.duration();
    const auto full = slice_window(whiten_full(x, psd), t_at, d);
    const auto local = slice_window(whiten_localized(x, psd, bands), t_at, d);
    const double e_full = shape_error(full.samples(), sh.tmpl.samples());
    const double e_local = shape_error(local.samples(), sh.tmpl.samples());

    TrialOutput out;
    out.report.extras = {{"err_full", e_full},
                         {"err_localized", e_local},
                         {"ratio", e_full / e_local},
                         {"line_bands", static_cast<double>(bands.size())}};
    if (detail) {
        FigureTable t{"", {"t_s", "ideal", "full_band", "localized"}, {{}, {}, {}, {}}};
        const double si = std::sqrt(energy(sh.tmpl.samples()));
        const double sf = std::sqrt(energy(full.samples()));
        const double sl = std::sqrt(energy(local.samples()));
        for (std::size_t i = 0; i < sh.tmpl.size(); ++i) {
            t.columns[0].push_back(sh.tmpl.time_at(i));
            t.columns[1].push_back(sh.tmpl[i] / si);
            t.columns[2].push_back(full[i] / sf);
            t.columns[3].push_back(local[i] / sl);
        }
        out.figures.push_back(std::move(t));
    }
    return out;
}

TrialOutput trial_running(const Shared& sh, std::uint64_t seed, bool detail) {
    const auto& p = sh.cfg.params;
    const auto noise = noise_block(sh, seed, p.running_duration);
    const auto cs = bandpassed(whitened(noise), p);
    const double d = sh.tmpl.duration();
    const double mid = noise.t0() + 0.5 * (p.running_duration - d);
    const auto tw = slice_window(template_on_grid(sh, noise, mid), mid, d);
    const double end = noise.t0() + noise.duration();
    const std::vector<TimeRange> excl = {{noise.t0(), noise.t0() + p.edge_exclusion}, {end - p.edge_exclusion, end}};
    const auto rows = running_window_ccf(cs, tw, p.hop, excl, d / 2.0);

    std::size_t best = 0;
    std::vector<double> peaks;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        peaks.push_back(rows[i].peak_abs_ccf);
        if (rows[i].peak_abs_ccf > rows[best].peak_abs_ccf) best = i;
    }
    TrialOutput out;
    out.report.peak_abs_ccf = rows[best].peak_abs_ccf;
    out.report.r3 = rows[best].r3;
    out.report.peaky = rows[best].r3 < sh.cfg.r3_threshold;
    out.report.extras = {{"median_peak_abs_ccf", quantile(peaks, 0.5)},
                         {"windows", static_cast<double>(rows.size())},
                         {"best_t_start_s", rows[best].t_start}};
    if (detail) {
        FigureTable t{"", {"t_start_s", "peak_abs_ccf", "r3"}, {{}, {}, {}}};
        for (const auto& r : rows) {
            t.columns[0].push_back(r.t_start);
            t.columns[1].push_back(r.peak_abs_ccf);
            t.columns[2].push_back(r.r3);
        }
        out.figures.push_back(std::move(t));
    }
    return out;
}

TrialOutput trial_circular(const Shared& sh, std::uint64_t seed, bool detail) {
    const auto& p = sh.cfg.params;
    const double fs = sh.cfg.fs;
    const auto len = static_cast<std::size_t>(std::llround(p.artifact_block * fs));
    const std::size_t n = sh.tmpl.size();
    if (len < 2 * n) throw ParameterError("artifact_block must hold at least twice the template");

    double peak = 0.0;
    for (double v : sh.tmpl.samples()) peak = std::max(peak, std::abs(v));
    auto x = gaussian_draws(seed, 2 * len);
    for (auto& v : x) v *= p.artifact_noise * peak;
    // two blocks; the template starts half its length before the boundary
    const std::size_t start = len - n / 2;
    for (std::size_t j = 0; j < n; ++j) x[start + j] += sh.tmpl[j];
    const TimeSeries strain(fs, 0.0, std::move(x));
    const double t_true = static_cast<double>(start) / fs;
    const PowerSpectrum flat(fs / static_cast<double>(len), std::vector<double>(len / 2 + 1, 1.0));

    MfConfig mc = sh.cfg.mf;
    mc.block_len = p.artifact_block;
    mc.mode = MfMode::circular;
    const auto rc = matched_filter(strain, sh.tmpl, flat, mc);
    mc.mode = MfMode::cyclic_prefix;
    const auto rp = matched_filter(strain, sh.tmpl, flat, mc);

    TrialOutput out;
    out.report.peak_rho_hat = rc.peak.value;
    out.report.fired = rc.peak.value > sh.cfg.snr_threshold;
    const double sep = std::abs(rc.peak.time - rp.peak.time);
    out.report.extras = {{"true_t_s", t_true},
                         {"circular_peak_t_s", rc.peak.time},
                         {"prefix_peak_t_s", rp.peak.time},
                         {"prefix_peak_rho_hat", rp.peak.value},
                         {"separation_s", sep},
                         {"witness", sep > 0.5 * sh.tmpl.duration() ? 1.0 : 0.0}};
    if (detail) {
        out.figures.push_back(snr_table(rc, "-circular"));
        out.figures.push_back(snr_table(rp, "-prefix"));
    }
    return out;
}

TrialFn trial_fn(const std::string& name) {
    if (name == "mf-sine-misfire")
        return [](const Shared& s, std::uint64_t seed, bool d) { return trial_mf_burst(s, seed, d, BurstKind::sine_decay); };
    if (name == "mf-awgn-misfire")
        return [](const Shared& s, std::uint64_t seed, bool d) { return trial_mf_burst(s, seed, d, BurstKind::awgn); };
    if (name == "mf-bogus") return trial_mf_bogus;
    if (name == "ccf-bogus") return trial_ccf_bogus;
    if (name == "h1l1-ccf") return trial_h1l1;
    if (name == "ref-systems") return trial_ref_systems;
    if (name == "window-compare") return trial_window_compare;
    if (name == "whiten-distortion") return trial_whiten_distortion;
    if (name == "running-baseline") return trial_running;
    if (name == "circular-artifact") return trial_circular;
    throw ParameterError("unknown scenario '" + name + "'");
}

Shared make_shared_inputs(const ScenarioConfig& cfg) {
    ChirpParams chirp = stock_template(cfg.params.template_name);
    if (cfg.inputs.template_file) {
        auto t = load_input(*cfg.inputs.template_file, cfg.fs);
        chirp.name = cfg.inputs.template_file->stem().string();
        chirp.carrier_f0 = 0.0;
        return {cfg, t.with_t0(0.0), chirp};
    }
    return {cfg, make_chirp(chirp, cfg.fs), chirp};
}

std::vector<TrialOutput> run_trials(const ScenarioConfig& cfg) {
    cfg.validate();
    const auto fn = trial_fn(cfg.name);
    const Shared sh = make_shared_inputs(cfg);
    std::vector<TrialOutput> out(static_cast<std::size_t>(cfg.trials));
    for_each_index(out.size(), true, [&](std::size_t i) {
        const auto seed = derive_seed(cfg.seed_base, i);
        const std::string where = "trial " + std::to_string(i) + ": ";
        try {
            out[i] = fn(sh, seed, i == 0);
        } catch (const DegenerateError& e) {
            throw DegenerateError(where + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(where + e.what());
        }
        out[i].report.trial_index = static_cast<int>(i);
        out[i].report.seed = seed;
    });
    return out;
}

json quantiles_json(const std::optional<Quantiles>& q) {
    if (!q) return nullptr;
    return {{"p05", q->p05}, {"p50", q->p50}, {"p95", q->p95}};
}

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

void write_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot write " + path.string());
    f << body;
    if (!f) throw ValidationError("failed writing " + path.string());
}

double get_number(const json& j, const std::string& key) {
    if (!j.is_number()) throw ParameterError("config key '" + key + "' must be a number");
    return j.get<double>();
}

}    // namespace

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& s : scenario_table) v.emplace_back(s.name);
        return v;
    }();
    return names;
}

std::string scenario_description(const std::string& name) {
    for (const auto& s : scenario_table)
        if (name == s.name) return s.description;
    throw ParameterError("unknown scenario '" + name + "'");
}

void ScenarioConfig::validate() const {
    if (std::find(scenario_names().begin(), scenario_names().end(), name) == scenario_names().end())
        throw ParameterError("unknown scenario '" + name + "'");
    if (trials < 1) throw ParameterError("trials must be at least 1");
    if (!(snr_threshold > 0.0) || !(r3_threshold > 0.0)) throw ParameterError("thresholds must be positive");
    if (!(fs > 0.0)) throw ParameterError("fs must be positive");
    psd_model.validate(fs);
    for (const auto* f : {&inputs.template_file, &inputs.h1_file, &inputs.l1_file})
        if (*f && !std::filesystem::exists(**f)) throw ValidationError("missing input file " + (*f)->string());
}

ScenarioConfig default_scenario(const std::string& name) {
    ScenarioConfig cfg;
    cfg.name = name;
    scenario_description(name);
    if (name == "circular-artifact") cfg.trials = 1;
    return cfg;
}

void apply_config_json(ScenarioConfig& cfg, const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParameterError("config must be a JSON object");
    auto& p = cfg.params;
    const std::map<std::string, double*> numbers = {
        {"block_duration", &p.block_duration}, {"inject_time", &p.inject_time},
        {"burst_duration", &p.burst_duration}, {"sine_f0", &p.sine_f0},
        {"sine_ratio", &p.sine_ratio},         {"decay_tau", &p.decay_tau},
        {"awgn_ratio", &p.awgn_ratio},         {"sigma_phase", &p.sigma_phase},
        {"sigma_amp", &p.sigma_amp},           {"smoothing_bw", &p.smoothing_bw},
        {"injection_snr", &p.injection_snr},   {"band_lo", &p.band_lo},
        {"band_hi", &p.band_hi},               {"long_window", &p.long_window},
        {"ref_noise_ratio", &p.ref_noise_ratio}, {"running_duration", &p.running_duration},
        {"hop", &p.hop},                       {"edge_exclusion", &p.edge_exclusion},
        {"artifact_block", &p.artifact_block}, {"artifact_noise", &p.artifact_noise}};
    for (const auto& [key, val] : j.items()) {
        if (key == "trials") {
            cfg.trials = static_cast<int>(get_number(val, key));
        } else if (key == "seed_base") {
            if (!val.is_number_unsigned() && !val.is_number_integer()) throw ParameterError("seed_base must be an integer");
            cfg.seed_base = val.get<std::uint64_t>();
        } else if (key == "fs") {
            cfg.fs = get_number(val, key);
        } else if (key == "snr_threshold") {
            cfg.snr_threshold = get_number(val, key);
        } else if (key == "r3_threshold") {
            cfg.r3_threshold = get_number(val, key);
        } else if (key == "psd_model") {
            cfg.psd_model = PsdModel::from_json(val.dump());
        } else if (key == "mf") {
            for (const auto& [mk, mv] : val.items()) {
                if (mk == "block_len") cfg.mf.block_len = get_number(mv, mk);
                else if (mk == "reweight_bins") cfg.mf.reweight_bins = static_cast<int>(get_number(mv, mk));
                else if (mk == "mode") {
                    const auto m = mv.get<std::string>();
                    if (m == "circular") cfg.mf.mode = MfMode::circular;
                    else if (m == "cyclic_prefix") cfg.mf.mode = MfMode::cyclic_prefix;
                    else throw ParameterError("mf.mode must be circular or cyclic_prefix");
                } else if (mk == "band") {
                    if (mv.is_null()) cfg.mf.band.reset();
                    else if (mv.is_array() && mv.size() == 2) cfg.mf.band = std::make_pair(mv[0].get<double>(), mv[1].get<double>());
                    else throw ParameterError("mf.band must be [f_lo, f_hi] or null");
                } else {
                    throw ParameterError("unknown config key 'mf." + mk + "'");
                }
            }
        } else if (key == "params") {
            for (const auto& [pk, pv] : val.items()) {
                if (pk == "template_name") {
                    p.template_name = pv.get<std::string>();
                } else if (pk == "band_order") {
                    p.band_order = static_cast<int>(get_number(pv, pk));
                } else if (auto it = numbers.find(pk); it != numbers.end()) {
                    *it->second = get_number(pv, pk);
                } else {
                    throw ParameterError("unknown config key 'params." + pk + "'");
                }
            }
        } else if (key == "inputs") {
            for (const auto& [ik, iv] : val.items()) {
                const std::filesystem::path path = iv.get<std::string>();
                if (ik == "template_file") cfg.inputs.template_file = path;
                else if (ik == "h1_file") cfg.inputs.h1_file = path;
                else if (ik == "l1_file") cfg.inputs.l1_file = path;
                else throw ParameterError("unknown config key 'inputs." + ik + "'");
            }
        } else if (key == "name") {
            cfg.name = val.get<std::string>();
        } else {
            throw ParameterError("unknown config key '" + key + "'");
        }
    }
}

double false_alarm_rate(const FalseAlarmParams& p) {
    if (!(p.n_b >= 0.0)) throw ParameterError("n_b must be nonnegative");
    if (!(p.T > 0.0) || !(p.T_b > 0.0)) throw ParameterError("T and T_b must be positive");
    return -std::expm1(-p.T / p.T_b * (1.0 + p.n_b));
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw ShapeError("quantile of an empty set");
    if (!(q >= 0.0 && q <= 1.0)) throw ParameterError("quantile level must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

McStats aggregate(const std::vector<TrialReport>& trials) {
    if (trials.empty()) throw ShapeError("no trials to aggregate");
    McStats s;
    s.trials = static_cast<int>(trials.size());
    std::vector<double> rho, ccf, r3;
    int fired = 0, peaky = 0;
    for (const auto& t : trials) {
        fired += t.fired ? 1 : 0;
        peaky += t.peaky ? 1 : 0;
        if (t.peak_rho_hat) rho.push_back(*t.peak_rho_hat);
        if (t.peak_abs_ccf) ccf.push_back(*t.peak_abs_ccf);
        if (t.r3) r3.push_back(*t.r3);
    }
    s.fired_fraction = static_cast<double>(fired) / s.trials;
    s.peaky_fraction = static_cast<double>(peaky) / s.trials;
    auto q = [](const std::vector<double>& v) -> std::optional<Quantiles> {
        if (v.empty()) return std::nullopt;
        return Quantiles{quantile(v, 0.05), quantile(v, 0.5), quantile(v, 0.95)};
    };
    s.rho_hat = q(rho);
    s.abs_ccf = q(ccf);
    s.r3 = q(r3);
    return s;
}

std::vector<TrialReport> monte_carlo(const ScenarioConfig& cfg) {
    auto outs = run_trials(cfg);
    std::vector<TrialReport> reps;
    reps.reserve(outs.size());
    for (auto& o : outs) reps.push_back(std::move(o.report));
    return reps;
}

ScenarioReport run_scenario(const ScenarioConfig& cfg) {
    auto outs = run_trials(cfg);
    ScenarioReport rep;
    rep.config = cfg;
    rep.figures = std::move(outs.front().figures);
    for (auto& o : outs) rep.trials.push_back(std::move(o.report));
    rep.stats = aggregate(rep.trials);

    // trial means of every per-trial extra
    const auto& first = rep.trials.front().extras;
    for (std::size_t k = 0; k < first.size(); ++k) {
        double acc = 0.0;
        for (const auto& t : rep.trials) acc += t.extras.at(k).second;
        rep.summary_extras.emplace_back("mean_" + first[k].first, acc / static_cast<double>(rep.trials.size()));
    }
    return rep;
}

std::string summary_json(const ScenarioReport& report) {
    const auto& c = report.config;
    const auto& s = report.stats;
    json extras = json::object();
    for (const auto& [k, v] : report.summary_extras) extras[k] = v;
    const json j = {
        {"schema_version", report_schema_version},
        {"scenario", c.name},
        {"description", scenario_description(c.name)},
        {"trials", s.trials},
        {"seed_base", c.seed_base},
        {"fs_hz", c.fs},
        {"thresholds", {{"snr", c.snr_threshold}, {"r3", c.r3_threshold}}},
        {"fired_fraction", s.fired_fraction},
        {"peaky_fraction", s.peaky_fraction},
        {"peak_rho_hat", quantiles_json(s.rho_hat)},
        {"peak_abs_ccf", quantiles_json(s.abs_ccf)},
        {"r3", quantiles_json(s.r3)},
        {"extras", extras},
    };
    return j.dump(2) + "\n";
}

std::string trials_csv(const std::vector<TrialReport>& trials) {
    if (trials.empty()) throw ShapeError("no trials to write");
    std::string out = "trial_index,seed,peak_rho_hat,peak_abs_ccf,r3,fired,peaky";
    for (const auto& [k, v] : trials.front().extras) out += "," + k;
    out += "\n";
    for (const auto& t : trials) {
        out += std::to_string(t.trial_index) + "," + std::to_string(t.seed) + "," + cell(t.peak_rho_hat) + "," +
               cell(t.peak_abs_ccf) + "," + cell(t.r3) + "," + (t.fired ? "1" : "0") + "," + (t.peaky ? "1" : "0");
        for (const auto& [k, v] : t.extras) out += "," + format_double(v);
        out += "\n";
    }
    return out;
}

std::string table_csv(const FigureTable& table) {
    std::string out;
    for (std::size_t c = 0; c < table.header.size(); ++c) out += (c ? "," : "") + table.header[c];
    out += "\n";
    const std::size_t rows = table.columns.empty() ? 0 : table.columns.front().size();
    for (const auto& col : table.columns)
        if (col.size() != rows) throw ShapeError("figure table columns differ in length");
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            if (c) out += ",";
            out += format_double(table.columns[c][r]);
        }
        out += "\n";
    }
    return out;
}

void emit_report(const ScenarioReport& report, const std::filesystem::path& out_dir) {
    if (report.trials.empty()) throw ShapeError("empty results: nothing to emit");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw ValidationError("cannot create " + out_dir.string() + ": " + ec.message());
    write_file(out_dir / "summary.json", summary_json(report));
    write_file(out_dir / "trials.csv", trials_csv(report.trials));
    for (const auto& f : report.figures) write_file(out_dir / (report.config.name + f.suffix + ".csv"), table_csv(f));
}

}    // namespace gwx
