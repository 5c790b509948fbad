#pragma once

#include "gwx/detection.hpp"
#include "gwx/simulation.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

// Scenario orchestration, Monte-Carlo aggregation, the false-alarm
// formula and report emission.
namespace gwx {

inline constexpr int report_schema_version = 1;

// Knobs shared by the scenarios. Each scenario reads the subset it needs.
struct ScenarioParams {
    double block_duration = 32.0;    // s of synthetic strain per trial
    double inject_time = 16.0;       // s from block start
    std::string template_name = "gw150914";

    // misfire bursts
    double burst_duration = 1.0;
    double sine_f0 = 64.0;
    double sine_ratio = 0.01;
    double decay_tau = 0.25;
    double awgn_ratio = 1.0 / 500.0;

    // bogus templates
    double sigma_phase = 1.0;
    double sigma_amp = 0.0;
    double smoothing_bw = 64.0;

    // optimal matched-filter SNR of an injected ideal template
    double injection_snr = 12.0;

    // CCF conditioning
    double band_lo = 35.0;
    double band_hi = 350.0;
    int band_order = 4;
    double long_window = 20.0;

    // reference system 1: white-noise std relative to the template std
    double ref_noise_ratio = 1.0;

    // running baseline
    double running_duration = 64.0;
    double hop = 1.0;
    double edge_exclusion = 2.0;

    // circular-artifact construction
    double artifact_block = 4.0;
    double artifact_noise = 0.01;    // white-noise std relative to template peak
};

// Optional real-data inputs in gwx-text format.
struct ScenarioInputs {
    std::optional<std::filesystem::path> template_file;
    std::optional<std::filesystem::path> h1_file;
    std::optional<std::filesystem::path> l1_file;
};

struct ScenarioConfig {
    std::string name;
    int trials = 100;
    std::uint64_t seed_base = 1;
    double fs = 4096.0;
    double snr_threshold = gwx::snr_threshold;
    double r3_threshold = gwx::r3_threshold;
    MfConfig mf;
    PsdModel psd_model = PsdModel::ligo_like();
    ScenarioParams params;
    ScenarioInputs inputs;

    void validate() const;
};

// Defaults for a named scenario; throws ParameterError on unknown names.
ScenarioConfig default_scenario(const std::string& name);

// Overlay a JSON object ({"trials":..,"seed_base":..,"params":{..}, ...})
// onto `cfg`. Unknown keys are rejected.
void apply_config_json(ScenarioConfig& cfg, const std::string& text);

const std::vector<std::string>& scenario_names();
std::string scenario_description(const std::string& name);

struct FalseAlarmParams {
    double n_b = 0.0;
    double T = 1.0;
    double T_b = 1.0;
};

// F = 1 - exp(-T / T_b * (1 + n_b))
double false_alarm_rate(const FalseAlarmParams& p);

// Per-trial record. Metrics a scenario does not produce are empty; the
// verdicts are false in that case.
struct TrialReport {
    int trial_index = 0;
    std::uint64_t seed = 0;
    std::optional<double> peak_rho_hat;
    std::optional<double> peak_abs_ccf;
    std::optional<double> r3;
    bool fired = false;
    bool peaky = false;
    std::vector<std::pair<std::string, double>> extras;
};

struct Quantiles {
    double p05 = 0.0;
    double p50 = 0.0;
    double p95 = 0.0;
};

struct McStats {
    int trials = 0;
    double fired_fraction = 0.0;
    double peaky_fraction = 0.0;
    std::optional<Quantiles> rho_hat;
    std::optional<Quantiles> abs_ccf;
    std::optional<Quantiles> r3;
};

// One CSV written next to the report, named <scenario><suffix>.csv.
struct FigureTable {
    std::string suffix;
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
};

struct ScenarioReport {
    ScenarioConfig config;
    std::vector<TrialReport> trials;
    McStats stats;
    std::vector<FigureTable> figures;
    std::vector<std::pair<std::string, double>> summary_extras;
};

// Linear-interpolated quantile of unsorted values, q in [0, 1].
double quantile(std::vector<double> values, double q);

McStats aggregate(const std::vector<TrialReport>& trials);

// Runs `trials` independent trials of the scenario. Trial i draws from
// derive_seed(seed_base, i); trials may run concurrently and results are
// stored by index. Errors are rethrown prefixed with the trial index.
std::vector<TrialReport> monte_carlo(const ScenarioConfig& cfg);

ScenarioReport run_scenario(const ScenarioConfig& cfg);

// Writes summary.json, trials.csv and the scenario's figure CSVs.
void emit_report(const ScenarioReport& report, const std::filesystem::path& out_dir);

std::string summary_json(const ScenarioReport& report);
std::string trials_csv(const std::vector<TrialReport>& trials);
std::string table_csv(const FigureTable& table);

}    // namespace gwx
