#pragma once

#include "gwx/series.hpp"

#include <optional>
#include <span>
#include <utility>
#include <vector>

// The two detection engines: the frequency-domain matched filter with
// chi-squared reweighting, and the short-window normalized
// cross-correlation with its decorrelation metrics.
namespace gwx {

inline constexpr double snr_threshold = 5.0;
// exp(-1)
inline constexpr double r3_threshold = 0.36787944117144233;

enum class MfMode { circular, cyclic_prefix };

struct MfConfig {
    double block_len = 32.0;    // seconds; <= 0 means one block spanning the strain
    MfMode mode = MfMode::circular;
    int reweight_bins = 16;    // 0 disables chi-squared reweighting
    std::optional<std::pair<double, double>> band;
};

struct SnrPeak {
    double time = 0.0;
    double value = 0.0;
    std::size_t index = 0;
};

// Matched-filter output. Sample i sits at t0 + i / fs and is the
// statistic for the template's first sample aligned at that time.
struct SnrSeries {
    double fs = 0.0;
    double t0 = 0.0;
    std::vector<double> rho;
    std::vector<double> rho_reweighted;
    std::vector<double> chi2_reduced;    // empty when reweighting is off
    SnrPeak peak;
    double sigma = 0.0;    // <h|h>^(1/2) of the (last) block
    MfConfig config;

    double time_at(std::size_t i) const noexcept { return t0 + static_cast<double>(i) / fs; }
};

// rho(t) = |<s|h>(t)| / <h|h>^(1/2) with the one-sided noise-weighted
// inner product. In cyclic_prefix mode every block is extended with its
// own last N samples (N = template length) and correlated without
// wrap-around; the output then starts N samples before each block.
SnrSeries matched_filter(const TimeSeries& strain, const TimeSeries& tmpl, const PowerSpectrum& psd,
                         const MfConfig& cfg = {});

// <h|h> on the template's own transform grid, or on a zero-padded grid of
// `grid_len` samples.
double sigma_norm(const TimeSeries& tmpl, const PowerSpectrum& psd, std::size_t grid_len = 0,
                  std::optional<std::pair<double, double>> band = std::nullopt);

// Recompute the reweighted statistic with n_bins equal-power bands:
// chi2 = sum_b |z_b - f_b z|^2 / (f_b <h|h>), where f_b is the band's
// share of template power (1/p up to bin granularity),
// chi2_r = chi2 / (2p - 2), and rho_hat = rho * ((1 + chi2_r^3) / 2)^(-1/6)
// wherever chi2_r > 1.
SnrSeries reweight_snr(const SnrSeries& snr, const TimeSeries& strain, const TimeSeries& tmpl,
                       const PowerSpectrum& psd, int n_bins);

double reweight_value(double rho, double chi2_reduced);

struct CcfResult {
    double fs = 0.0;
    std::vector<double> lags;      // seconds
    std::vector<double> values;    // in [-1, 1]
    double peak_value = 0.0;       // signed value at max |CCF|
    double peak_lag = 0.0;
    double tau0 = 0.0;             // decorrelation time used for r3
    double r3 = 1.0;
    bool peaky = false;
    double window_T = 0.0;

    double max_abs() const noexcept { return std::abs(peak_value); }
};

struct R3Result {
    double r3;
    bool peaky;
};

// CCF(l) = sum_n a[n] b[n - l] after scaling both windows to unit energy.
// When `tau0` is omitted the decorrelation time is measured on the CCF
// itself around its peak; r3 is then evaluated with that tau0 when
// 3 tau0 < max_lag, otherwise r3 = 1 and the result is not peaky.
CcfResult normalized_ccf(const TimeSeries& a, const TimeSeries& b, double max_lag,
                         std::optional<double> tau0 = std::nullopt);

// Serial direct-sum evaluation of the same quantity, kept as reference.
CcfResult normalized_ccf_serial(const TimeSeries& a, const TimeSeries& b, double max_lag,
                                std::optional<double> tau0 = std::nullopt);

// First lag at which the normalized autocorrelation drops below 1/e.
// A signal whose autocorrelation later climbs back to 0.9 (periodic
// within the window) does not decorrelate and is rejected.
double decorrelation_time(const TimeSeries& tmpl);

inline constexpr double periodic_recovery_level = 0.9;

// max |CCF| over |lag| > 3 tau0 divided by max |CCF|.
R3Result peak_ratio_r3(const CcfResult& ccf, double tau0);

struct TimeRange {
    double begin;
    double end;
};

struct RunningEntry {
    double t_start;
    double peak_abs_ccf;
    double r3;
};

enum class Execution { serial, parallel };

// Slide a template-length window over `long_ts` in steps of `hop`,
// skipping any window that touches an exclusion range. r3 uses the
// template's own decorrelation time. Output is ordered by window start.
std::vector<RunningEntry> running_window_ccf(const TimeSeries& long_ts, const TimeSeries& tmpl, double hop,
                                             std::span<const TimeRange> exclusions, double max_lag,
                                             Execution exec = Execution::parallel);

}    // namespace gwx
