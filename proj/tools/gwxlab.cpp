#include "gwx/conditioning.hpp"
#include "gwx/detection.hpp"
#include "gwx/error.hpp"
#include "gwx/harness.hpp"
#include "gwx/simulation.hpp"
#include "gwx/templates.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Globals {
    std::uint64_t seed = 1;
    std::optional<double> fs_hz;
    fs::path out = ".";
    std::optional<fs::path> config;

    double rate() const { return fs_hz.value_or(4096.0); }
};

struct Conditioning {
    std::string band;
    int order = 4;
    std::string whiten = "full";
    double line_threshold = gwx::default_line_threshold;
    double line_window_hz = gwx::default_line_window_hz;
};

std::string read_text(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw gwx::ValidationError("cannot open " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    if (!out) throw gwx::ValidationError("cannot write " + p.string());
    out << text;
}

gwx::StrainFormat format_of(const fs::path& p) {
    return p.extension() == ".csv" ? gwx::StrainFormat::csv : gwx::StrainFormat::gwx_text;
}

gwx::TimeSeries load(const fs::path& p) { return gwx::load_strain(p, format_of(p)); }

fs::path output_path(const Globals& g, const std::string& given, const std::string& fallback) {
    fs::create_directories(g.out);
    return g.out / (given.empty() ? fallback : given);
}

void save(const gwx::TimeSeries& ts, const fs::path& p) { gwx::save_strain(ts, p, format_of(p)); }

std::pair<double, double> parse_band(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw gwx::ParameterError("--band expects f_lo:f_hi, got '" + text + "'");
    try {
        std::size_t used = 0;
        const double lo = std::stod(text.substr(0, colon), &used);
        if (used != colon) throw std::invalid_argument(text);
        const auto rest = text.substr(colon + 1);
        const double hi = std::stod(rest, &used);
        if (used != rest.size()) throw std::invalid_argument(text);
        if (!(lo >= 0.0 && hi > lo)) throw gwx::ParameterError("--band needs 0 <= f_lo < f_hi");
        return {lo, hi};
    } catch (const std::logic_error&) {
        throw gwx::ParameterError("--band expects f_lo:f_hi, got '" + text + "'");
    }
}

gwx::PsdModel psd_model(const Globals& g) {
    if (g.config) return gwx::PsdModel::load(*g.config);
    return gwx::PsdModel::ligo_like();
}

// psd.csv as written by the psd command: f_hz,psd on a uniform grid from 0.
gwx::PowerSpectrum load_psd_csv(const fs::path& p) {
    std::istringstream in(read_text(p));
    std::string line;
    std::vector<double> freqs, values;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1) {
            if (line.rfind("f_hz,psd", 0) != 0) throw gwx::ParseError("expected header 'f_hz,psd'", lineno);
            continue;
        }
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw gwx::ParseError("expected two columns", lineno);
        try {
            freqs.push_back(std::stod(line.substr(0, comma)));
            values.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::logic_error&) {
            throw gwx::ParseError("non-numeric value", lineno);
        }
    }
    if (freqs.size() < 2) throw gwx::ShapeError(p.string() + ": need at least two PSD rows");
    const double df = freqs[1] - freqs[0];
    for (std::size_t k = 0; k < freqs.size(); ++k)
        if (std::abs(freqs[k] - df * static_cast<double>(k)) > 1e-6 * df)
            throw gwx::ShapeError(p.string() + ": PSD grid must be uniform and start at 0 Hz");
    return gwx::PowerSpectrum(df, std::move(values));
}

std::string psd_csv(const gwx::PowerSpectrum& psd) {
    std::string s = "f_hz,psd\n";
    for (std::size_t k = 0; k < psd.size(); ++k)
        s += gwx::format_double(psd.frequency(k)) + "," + gwx::format_double(psd[k]) + "\n";
    return s;
}

gwx::PowerSpectrum psd_for(const gwx::TimeSeries& ts, const std::string& psd_file) {
    if (!psd_file.empty()) return load_psd_csv(psd_file);
    return gwx::welch_psd(ts);
}

gwx::MfMode parse_mode(const std::string& s) {
    if (s == "circular") return gwx::MfMode::circular;
    if (s == "cyclic-prefix" || s == "cyclic_prefix") return gwx::MfMode::cyclic_prefix;
    throw gwx::ParameterError("--mode must be circular or cyclic-prefix");
}

void add_conditioning(CLI::App* cmd, Conditioning& c, bool with_whiten) {
    cmd->add_option("--band", c.band, "band edges f_lo:f_hi in Hz");
    cmd->add_option("--order", c.order, "Butterworth prototype order")->check(CLI::Range(1, 16));
    if (!with_whiten) return;
    cmd->add_option("--whiten", c.whiten, "full|localized")->check(CLI::IsMember({"full", "localized"}));
    cmd->add_option("--line-threshold", c.line_threshold, "line detection ratio over running median");
    cmd->add_option("--line-window-hz", c.line_window_hz, "running-median window in Hz");
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

int run(int argc, char** argv) {
    CLI::App app{"gwxlab: matched-filter and cross-correlation detection experiments"};
    app.fallthrough();
    app.require_subcommand(0, 1);

    Globals g;
    std::string out_dir = ".";
    std::string config_file;
    bool list_scenarios = false;
    app.add_option("--seed", g.seed, "base seed");
    app.add_option("--fs", g.fs_hz, "sampling rate in Hz")->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--config", config_file, "JSON config (PSD model, or scenario overlay for 'scenario run')")
        ->check(CLI::ExistingFile);
    app.add_flag("--list-scenarios", list_scenarios, "print scenario names and exit");

    // noise
    auto* noise = app.add_subcommand("noise", "colored Gaussian noise from a PSD model");
    double noise_duration = 32.0, noise_t0 = 0.0;
    std::string noise_output;
    noise->add_option("--duration", noise_duration, "seconds")->check(CLI::PositiveNumber);
    noise->add_option("--t0", noise_t0, "start time in seconds");
    noise->add_option("-o,--output", noise_output, "file name inside --out (default noise.txt)");

    // template
    auto* tmpl = app.add_subcommand("template", "stock or parameterized chirp template");
    std::string tmpl_name = "gw150914", tmpl_params, tmpl_output;
    tmpl->add_option("--name", tmpl_name, "gw150914|gw151226|gw170104");
    tmpl->add_option("--params", tmpl_params, "chirp metadata JSON file (overrides --name)")->check(CLI::ExistingFile);
    tmpl->add_option("-o,--output", tmpl_output, "file name inside --out (default template.txt)");

    // bogus
    auto* bogus = app.add_subcommand("bogus", "phase/amplitude-noise variant of a template");
    std::string bogus_template, bogus_meta, bogus_output;
    gwx::BogusSpec bogus_spec;
    bogus->add_option("--template", bogus_template, "template strain file")->required()->check(CLI::ExistingFile);
    bogus->add_option("--meta", bogus_meta, "template metadata JSON (carrier f0)")->check(CLI::ExistingFile);
    bogus->add_option("--sigma-phase", bogus_spec.sigma_phase, "phase noise std, radians");
    bogus->add_option("--sigma-amp", bogus_spec.sigma_amp, "amplitude noise std relative to rms envelope");
    bogus->add_option("--smoothing-bw", bogus_spec.smoothing_bw, "noise low-pass in Hz, <= 0 disables");
    bogus->add_option("-o,--output", bogus_output, "file name inside --out (default bogus.txt)");

    // inject
    auto* inj = app.add_subcommand("inject", "add a signal into a host series");
    std::string inj_host, inj_signal, inj_output;
    double inj_at = 0.0, inj_scale = 1.0;
    inj->add_option("--host", inj_host, "host strain file")->required()->check(CLI::ExistingFile);
    inj->add_option("--signal", inj_signal, "signal strain file")->required()->check(CLI::ExistingFile);
    inj->add_option("--at", inj_at, "time of the signal's first sample, s")->required();
    inj->add_option("--scale", inj_scale, "amplitude factor applied to the signal");
    inj->add_option("-o,--output", inj_output, "file name inside --out (default injected.txt)");

    // psd
    auto* psd = app.add_subcommand("psd", "Welch PSD estimate and spectral lines");
    std::string psd_input;
    double psd_segment = 4.0, psd_overlap = 0.5;
    std::string psd_window = "blackman";
    Conditioning psd_cond;
    psd->add_option("--input", psd_input, "strain file")->required()->check(CLI::ExistingFile);
    psd->add_option("--segment", psd_segment, "segment length, s")->check(CLI::PositiveNumber);
    psd->add_option("--overlap", psd_overlap, "segment overlap fraction");
    psd->add_option("--window", psd_window, "blackman|hann|rect")->check(CLI::IsMember({"blackman", "hann", "rect"}));
    psd->add_option("--line-threshold", psd_cond.line_threshold, "line detection ratio over running median");
    psd->add_option("--line-window-hz", psd_cond.line_window_hz, "running-median window in Hz");

    // whiten
    auto* wht = app.add_subcommand("whiten", "full-band or localized whitening");
    std::string wht_input, wht_psd, wht_output;
    Conditioning wht_cond;
    wht->add_option("--input", wht_input, "strain file")->required()->check(CLI::ExistingFile);
    wht->add_option("--psd", wht_psd, "psd.csv (default: Welch estimate of the input)")->check(CLI::ExistingFile);
    wht->add_option("-o,--output", wht_output, "file name inside --out (default whitened.txt)");
    add_conditioning(wht, wht_cond, true);

    // bandpass
    auto* bp = app.add_subcommand("bandpass", "Butterworth band-pass");
    std::string bp_input, bp_output;
    bool bp_causal = false;
    Conditioning bp_cond;
    bp->add_option("--input", bp_input, "strain file")->required()->check(CLI::ExistingFile);
    bp->add_flag("--causal", bp_causal, "single forward pass instead of zero-phase");
    bp->add_option("-o,--output", bp_output, "file name inside --out (default bandpassed.txt)");
    add_conditioning(bp, bp_cond, false);

    // mf
    auto* mf = app.add_subcommand("mf", "matched-filter SNR with chi-squared reweighting");
    std::string mf_strain, mf_template, mf_psd, mf_mode = "circular", mf_band;
    gwx::MfConfig mf_cfg;
    mf->add_option("--strain", mf_strain, "strain file")->required()->check(CLI::ExistingFile);
    mf->add_option("--template", mf_template, "template file")->required()->check(CLI::ExistingFile);
    mf->add_option("--psd", mf_psd, "psd.csv (default: Welch estimate of the strain)")->check(CLI::ExistingFile);
    mf->add_option("--block-len", mf_cfg.block_len, "block length, s; <= 0 for one block");
    mf->add_option("--mode", mf_mode, "circular|cyclic-prefix");
    mf->add_option("--reweight-bins", mf_cfg.reweight_bins, "chi-squared bands, 0 disables")->check(CLI::NonNegativeNumber);
    mf->add_option("--band", mf_band, "weighting band f_lo:f_hi in Hz");

    // ccf
    auto* ccf = app.add_subcommand("ccf", "normalized cross-correlation of two windows");
    std::string ccf_a, ccf_b;
    double ccf_max_lag = 0.01;
    std::optional<double> ccf_tau0;
    ccf->add_option("--a", ccf_a, "first series")->required()->check(CLI::ExistingFile);
    ccf->add_option("--b", ccf_b, "second series")->required()->check(CLI::ExistingFile);
    ccf->add_option("--max-lag", ccf_max_lag, "largest lag, s")->check(CLI::NonNegativeNumber);
    ccf->add_option("--tau0", ccf_tau0, "decorrelation time for r3, s (default: measured on the CCF)");

    // running-ccf
    auto* run_ccf = app.add_subcommand("running-ccf", "template CCF over sliding windows of a long series");
    std::string rc_input, rc_template;
    double rc_hop = 1.0, rc_max_lag = 0.01;
    std::vector<std::string> rc_exclude;
    run_ccf->add_option("--input", rc_input, "long strain file")->required()->check(CLI::ExistingFile);
    run_ccf->add_option("--template", rc_template, "template file")->required()->check(CLI::ExistingFile);
    run_ccf->add_option("--hop", rc_hop, "window step, s")->check(CLI::PositiveNumber);
    run_ccf->add_option("--max-lag", rc_max_lag, "largest lag, s")->check(CLI::NonNegativeNumber);
    run_ccf->add_option("--exclude", rc_exclude, "excluded time range t_a:t_b (repeatable)");

    // scenario
    auto* scen = app.add_subcommand("scenario", "Monte-Carlo scenarios");
    scen->require_subcommand(1);
    auto* scen_run = scen->add_subcommand("run", "run one scenario and write its report");
    auto* scen_list = scen->add_subcommand("list", "list scenario names");
    std::string scen_name;
    std::optional<int> scen_trials;
    scen_run->add_option("name", scen_name, "scenario name")->required();
    scen_run->add_option("--trials", scen_trials, "number of trials")->check(CLI::PositiveNumber);

    // far
    auto* far = app.add_subcommand("far", "false-alarm probability 1 - exp(-T/T_b (1 + n_b))");
    gwx::FalseAlarmParams far_p;
    far->add_option("--n-b", far_p.n_b, "louder background events")->required();
    far->add_option("--T", far_p.T, "observation time")->required();
    far->add_option("--T-b", far_p.T_b, "background time")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    g.out = out_dir;
    if (!config_file.empty()) g.config = config_file;

    const auto list = [] {
        for (const auto& n : gwx::scenario_names()) std::cout << n << "  " << gwx::scenario_description(n) << "\n";
    };

    if (list_scenarios || *scen_list) {
        list();
        return 0;
    }

    if (*noise) {
        auto ts = gwx::colored_noise(psd_model(g), noise_duration, g.rate(), g.seed).with_t0(noise_t0);
        const auto p = output_path(g, noise_output, "noise.txt");
        save(ts, p);
        print_json({{"output", p.string()}, {"n", ts.size()}, {"fs_hz", ts.fs()}, {"seed", g.seed}});
    } else if (*tmpl) {
        const auto params = tmpl_params.empty() ? gwx::stock_template(tmpl_name)
                                                : gwx::ChirpParams::from_json(read_text(tmpl_params));
        const auto h = gwx::make_chirp(params, g.rate());
        const auto p = output_path(g, tmpl_output, "template.txt");
        save(h, p);
        auto meta = p;
        meta.replace_extension(".json");
        write_text(meta, params.to_json(g.seed) + "\n");
        print_json({{"output", p.string()}, {"metadata", meta.string()}, {"n", h.size()}});
    } else if (*bogus) {
        const auto h = load(bogus_template);
        double f0 = 0.0;
        if (!bogus_meta.empty()) f0 = gwx::ChirpParams::from_json(read_text(bogus_meta)).carrier_f0;
        bogus_spec.seed = g.seed;
        const auto tpl = gwx::extract_phase_amplitude(h, f0);
        const auto b = gwx::make_bogus(tpl, bogus_spec);
        const auto err = gwx::template_error(h, b);
        const auto p = output_path(g, bogus_output, "bogus.txt");
        save(b, p);
        auto meta = p;
        meta.replace_extension(".json");
        const json m = {{"carrier_f0", f0},
                        {"sigma_phase", bogus_spec.sigma_phase},
                        {"sigma_amp", bogus_spec.sigma_amp},
                        {"smoothing_bw", bogus_spec.smoothing_bw},
                        {"seed", g.seed},
                        {"rel_l2", err.rel_l2}};
        write_text(meta, m.dump(2) + "\n");
        print_json({{"output", p.string()}, {"rel_l2", err.rel_l2}});
    } else if (*inj) {
        const auto host = load(inj_host);
        const auto sig = load(inj_signal);
        std::vector<double> scaled(sig.samples().begin(), sig.samples().end());
        for (auto& v : scaled) v *= inj_scale;
        const auto out = gwx::inject(host, sig.with_samples(std::move(scaled)), inj_at);
        const auto p = output_path(g, inj_output, "injected.txt");
        save(out, p);
        print_json({{"output", p.string()}, {"n", out.size()}});
    } else if (*psd) {
        const auto ts = load(psd_input);
        gwx::WelchOptions opts;
        opts.segment_len = static_cast<std::size_t>(std::llround(psd_segment * ts.fs()));
        opts.overlap = psd_overlap;
        opts.window = psd_window == "hann" ? gwx::WindowKind::hann
                      : psd_window == "rect" ? gwx::WindowKind::rect
                                             : gwx::WindowKind::blackman;
        const auto est = gwx::welch_psd(ts, opts);
        const auto lines = gwx::detect_lines(est, psd_cond.line_threshold, psd_cond.line_window_hz);
        fs::create_directories(g.out);
        write_text(g.out / "psd.csv", psd_csv(est));
        std::string lc = "f_center_hz,half_width_hz,peak_ratio\n";
        json jl = json::array();
        for (const auto& l : lines) {
            lc += gwx::format_double(l.f_center) + "," + gwx::format_double(l.half_width) + "," +
                  gwx::format_double(l.peak_ratio) + "\n";
            jl.push_back({{"f_center_hz", l.f_center}, {"half_width_hz", l.half_width}, {"peak_ratio", l.peak_ratio}});
        }
        write_text(g.out / "lines.csv", lc);
        print_json({{"df_hz", est.df()}, {"bins", est.size()}, {"lines", jl}});
    } else if (*wht) {
        const auto ts = load(wht_input);
        const auto spec = psd_for(ts, wht_psd);
        gwx::WhitenMode mode;
        if (wht_cond.whiten == "localized") {
            mode.variant = gwx::WhitenVariant::localized;
            mode.line_bands = gwx::detect_lines(spec, wht_cond.line_threshold, wht_cond.line_window_hz);
        }
        auto out = gwx::whiten(ts, spec, mode);
        if (!wht_cond.band.empty()) {
            const auto [lo, hi] = parse_band(wht_cond.band);
            out = gwx::butterworth_bandpass(out, lo, hi, wht_cond.order);
        }
        const auto p = output_path(g, wht_output, "whitened.txt");
        save(out, p);
        print_json({{"output", p.string()}, {"line_bands", mode.line_bands.size()}});
    } else if (*bp) {
        if (bp_cond.band.empty()) throw gwx::ParameterError("bandpass needs --band f_lo:f_hi");
        const auto [lo, hi] = parse_band(bp_cond.band);
        const auto ts = load(bp_input);
        const auto out = gwx::butterworth_bandpass(ts, lo, hi, bp_cond.order,
                                                   bp_causal ? gwx::FilterPhase::causal : gwx::FilterPhase::zero_phase);
        const auto p = output_path(g, bp_output, "bandpassed.txt");
        save(out, p);
        print_json({{"output", p.string()}, {"settle_time_s", gwx::settle_time(lo, hi, bp_cond.order)}});
    } else if (*mf) {
        const auto s = load(mf_strain);
        const auto h = load(mf_template);
        mf_cfg.mode = parse_mode(mf_mode);
        if (!mf_band.empty()) mf_cfg.band = parse_band(mf_band);
        const auto snr = gwx::matched_filter(s, h, psd_for(s, mf_psd), mf_cfg);
        std::string csv = "t_s,rho,rho_reweighted\n";
        for (std::size_t i = 0; i < snr.rho.size(); ++i)
            csv += gwx::format_double(snr.time_at(i)) + "," + gwx::format_double(snr.rho[i]) + "," +
                   gwx::format_double(snr.rho_reweighted[i]) + "\n";
        const auto p = output_path(g, "", "snr.csv");
        write_text(p, csv);
        print_json({{"output", p.string()},
                    {"peak_time_s", snr.peak.time},
                    {"peak_rho_reweighted", snr.peak.value},
                    {"fired", snr.peak.value > gwx::snr_threshold}});
    } else if (*ccf) {
        const auto a = load(ccf_a);
        const auto b = load(ccf_b);
        const auto r = gwx::normalized_ccf(a, b, ccf_max_lag, ccf_tau0);
        std::string csv = "lag_s,ccf\n";
        for (std::size_t i = 0; i < r.values.size(); ++i)
            csv += gwx::format_double(r.lags[i]) + "," + gwx::format_double(r.values[i]) + "\n";
        const auto p = output_path(g, "", "ccf.csv");
        write_text(p, csv);
        print_json({{"output", p.string()},
                    {"peak_value", r.peak_value},
                    {"peak_lag_s", r.peak_lag},
                    {"tau0_s", r.tau0},
                    {"r3", r.r3},
                    {"peaky", r.peaky}});
    } else if (*run_ccf) {
        const auto x = load(rc_input);
        const auto h = load(rc_template);
        std::vector<gwx::TimeRange> ex;
        for (const auto& e : rc_exclude) {
            const auto [a, b] = parse_band(e);
            ex.push_back({a, b});
        }
        const auto rows = gwx::running_window_ccf(x, h, rc_hop, ex, rc_max_lag);
        std::string csv = "t_start_s,peak_abs_ccf,r3\n";
        for (const auto& r : rows)
            csv += gwx::format_double(r.t_start) + "," + gwx::format_double(r.peak_abs_ccf) + "," +
                   gwx::format_double(r.r3) + "\n";
        const auto p = output_path(g, "", "running.csv");
        write_text(p, csv);
        print_json({{"output", p.string()}, {"windows", rows.size()}});
    } else if (*scen_run) {
        auto cfg = gwx::default_scenario(scen_name);
        if (g.config) gwx::apply_config_json(cfg, read_text(*g.config));
        if (app.count("--seed")) cfg.seed_base = g.seed;
        if (g.fs_hz) cfg.fs = *g.fs_hz;
        if (scen_trials) cfg.trials = *scen_trials;
        cfg.validate();
        const auto report = gwx::run_scenario(cfg);
        gwx::emit_report(report, g.out);
        std::cout << gwx::summary_json(report) << "\n";
    } else if (*far) {
        std::cout << gwx::format_double(gwx::false_alarm_rate(far_p)) << "\n";
    } else {
        std::cerr << app.help();
        return 2;
    }
    return 0;
}

}    // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const gwx::ValidationError& e) {
        std::cerr << "gwxlab: " << e.what() << "\n";
        return 2;
    } catch (const gwx::DegenerateError& e) {
        std::cerr << "gwxlab: degenerate: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "gwxlab: " << e.what() << "\n";
        return 1;
    }
}
