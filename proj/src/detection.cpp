#include "gwx/detection.hpp"

#include "gwx/conditioning.hpp"
#include "gwx/error.hpp"
#include "gwx/fft.hpp"
#include "gwx/kernels.hpp"
#include "gwx/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gwx {
namespace {

constexpr double inv_e = 0.36787944117144233;

// One-sided weight a_k / S_k on an n-point rfft grid; zero outside the band.
std::vector<double> filter_weights(const PowerSpectrum& psd, std::size_t n, double fs,
                                   const std::optional<std::pair<double, double>>& band) {
    const auto s = psd_on_grid(psd, n, fs);
    const double df = fs / static_cast<double>(n);
    std::vector<double> w(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
        const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
        double a = edge ? 1.0 : 2.0;
        if (band) {
            const double f = df * static_cast<double>(k);
            if (f < band->first || f > band->second) a = 0.0;
        }
        w[k] = a / s[k];
    }
    return w;
}

std::vector<double> padded(std::span<const double> x, std::size_t n) {
    std::vector<double> out(n, 0.0);
    std::copy(x.begin(), x.end(), out.begin());
    return out;
}

struct BlockResult {
    std::vector<double> rho;
    std::vector<double> rho_hat;
    std::vector<double> chi2r;
    double sigma = 0.0;
};

// Matched filter of one block. `x` is the transform grid (the block itself,
// or the block with its cyclic prefix) and `count` the number of outputs.
class BlockFilter {
public:
    BlockFilter(std::span<const double> x, std::span<const double> h, const PowerSpectrum& psd, double fs,
                const MfConfig& cfg, std::size_t count)
    : e_(x.size()), n_(h.size()), count_(count), dt_(1.0 / fs), linear_(cfg.mode == MfMode::cyclic_prefix) {
        w_ = filter_weights(psd, e_, fs, cfg.band);
        xf_ = fft::rfft(x);
        hf_ = fft::rfft(padded(h, e_));
        power_.resize(w_.size());
        for (std::size_t k = 0; k < w_.size(); ++k) power_[k] = w_[k] * std::norm(hf_[k]);
        const double total = std::accumulate(power_.begin(), power_.end(), 0.0);
        sigma2_ = 2.0 * dt_ / static_cast<double>(e_) * total;
        if (!(sigma2_ > 0.0)) throw DegenerateError("template has no power in the analysis band");
        if (linear_) {
            p_ = fft::good_size(e_ + n_);
            std::vector<cplx> hp(p_, 0.0);
            std::copy(h.begin(), h.end(), hp.begin());
            hlin_ = fft::fft(hp);
        }
    }

    double sigma2() const noexcept { return sigma2_; }

    // Complex <s|h>(t) restricted to bins k with keep[k] (all bins when empty).
    std::vector<cplx> correlate(const std::vector<char>& keep) const {
        const std::size_t half = w_.size();
        std::vector<cplx> spec(e_, 0.0);
        for (std::size_t k = 0; k < half; ++k) {
            if (!keep.empty() && !keep[k]) continue;
            spec[k] = w_[k] * xf_[k];
            if (!linear_) spec[k] *= std::conj(hf_[k]);
        }
        std::vector<cplx> z;
        if (!linear_) {
            z = fft::ifft(spec);
        } else {
            auto u = fft::ifft(spec);
            u.resize(p_, 0.0);
            auto uf = fft::fft(u);
            for (std::size_t k = 0; k < p_; ++k) uf[k] *= std::conj(hlin_[k]);
            z = fft::ifft(uf);
        }
        z.resize(count_);
        for (auto& v : z) v *= 2.0 * dt_;
        return z;
    }

    // Band membership for n_bins equal-power bands.
    std::vector<std::vector<char>> bands(int n_bins) const {
        const double total = std::accumulate(power_.begin(), power_.end(), 0.0);
        std::vector<std::vector<char>> out(static_cast<std::size_t>(n_bins), std::vector<char>(power_.size(), 0));
        std::vector<double> band_power(static_cast<std::size_t>(n_bins), 0.0);
        double cum = 0.0;
        for (std::size_t k = 0; k < power_.size(); ++k) {
            if (power_[k] <= 0.0) continue;
            const double mid = (cum + 0.5 * power_[k]) / total;
            cum += power_[k];
            auto b = static_cast<std::size_t>(mid * n_bins);
            b = std::min(b, static_cast<std::size_t>(n_bins - 1));
            out[b][k] = 1;
            band_power[b] += power_[k];
        }
        for (double bp : band_power)
            if (!(bp > 0.0))
                throw ParameterError("chi-squared binning failed: template power too concentrated for " +
                                     std::to_string(n_bins) + " bands");
        return out;
    }

    double band_fraction(const std::vector<char>& keep) const {
        double num = 0.0;
        double den = 0.0;
        for (std::size_t k = 0; k < power_.size(); ++k) {
            den += power_[k];
            if (keep[k]) num += power_[k];
        }
        return num / den;
    }

private:
    std::size_t e_;
    std::size_t n_;
    std::size_t count_;
    double dt_;
    bool linear_;
    std::size_t p_ = 0;
    std::vector<double> w_;
    std::vector<double> power_;
    std::vector<cplx> xf_;
    std::vector<cplx> hf_;
    std::vector<cplx> hlin_;
    double sigma2_ = 0.0;
};

BlockResult filter_block(std::span<const double> s, std::span<const double> h, const PowerSpectrum& psd, double fs,
                         const MfConfig& cfg) {
    const std::size_t len = s.size();
    const std::size_t n = h.size();
    std::vector<double> grid;
    if (cfg.mode == MfMode::cyclic_prefix) {
        grid.reserve(len + n);
        grid.insert(grid.end(), s.end() - static_cast<std::ptrdiff_t>(n), s.end());
        grid.insert(grid.end(), s.begin(), s.end());
    } else {
        grid.assign(s.begin(), s.end());
    }
    const BlockFilter bf(grid, h, psd, fs, cfg, len);
    const double sigma = std::sqrt(bf.sigma2());
    const auto z = bf.correlate({});

    BlockResult r;
    r.sigma = sigma;
    r.rho.resize(len);
    for (std::size_t i = 0; i < len; ++i) r.rho[i] = std::abs(z[i]) / sigma;
    if (cfg.reweight_bins == 0) {
        r.rho_hat = r.rho;
        return r;
    }
    const int p = cfg.reweight_bins;
    const auto bands = bf.bands(p);
    std::vector<double> chi2(len, 0.0);
    for (const auto& keep : bands) {
        const double frac = bf.band_fraction(keep);
        const auto zb = bf.correlate(keep);
        for (std::size_t i = 0; i < len; ++i) chi2[i] += std::norm(zb[i] - frac * z[i]) / (frac * bf.sigma2());
    }
    r.chi2r.resize(len);
    r.rho_hat.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
        r.chi2r[i] = chi2[i] / (2.0 * p - 2.0);
        r.rho_hat[i] = reweight_value(r.rho[i], r.chi2r[i]);
    }
    return r;
}

void check_config(const MfConfig& cfg) {
    if (cfg.reweight_bins == 1 || cfg.reweight_bins < 0)
        throw ParameterError("reweight_bins must be 0 (off) or at least 2");
    if (cfg.band && !(cfg.band->first >= 0.0 && cfg.band->second > cfg.band->first))
        throw ParameterError("matched-filter band must satisfy 0 <= f_lo < f_hi");
}

// Block boundaries: consecutive block_len chunks; a short remainder that
// cannot hold the template is absorbed into the previous block.
std::vector<std::pair<std::size_t, std::size_t>> block_spans(std::size_t total, std::size_t n, double fs,
                                                            double block_len) {
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    if (!(block_len > 0.0)) {
        spans.emplace_back(0, total);
        return spans;
    }
    const double exact = block_len * fs;
    const auto b = static_cast<std::size_t>(std::llround(exact));
    if (std::abs(exact - static_cast<double>(b)) > 1e-6)
        throw ParameterError("block_len x fs must be an integer number of samples");
    if (b < 2 * n) throw ParameterError("block must hold at least twice the template length");
    for (std::size_t start = 0; start < total; start += b) {
        const std::size_t len = std::min(b, total - start);
        if (len < n && !spans.empty())
            spans.back().second += len;
        else
            spans.emplace_back(start, len);
    }
    return spans;
}

std::optional<double> ccf_own_tau(const std::vector<double>& v, std::size_t peak, double fs) {
    const double level = std::abs(v[peak]) * inv_e;
    const double sign = v[peak] < 0.0 ? -1.0 : 1.0;
    std::vector<double> found;
    for (std::size_t i = peak + 1; i < v.size(); ++i)
        if (sign * v[i] < level) {
            found.push_back(static_cast<double>(i - peak));
            break;
        }
    for (std::size_t i = peak; i-- > 0;)
        if (sign * v[i] < level) {
            found.push_back(static_cast<double>(peak - i));
            break;
        }
    if (found.empty()) return std::nullopt;
    return std::accumulate(found.begin(), found.end(), 0.0) / static_cast<double>(found.size()) / fs;
}

CcfResult ccf_impl(const TimeSeries& a, const TimeSeries& b, double max_lag, std::optional<double> tau0, bool serial) {
    if (std::abs(a.fs() - b.fs()) > 1e-9 * a.fs()) throw ShapeError("CCF inputs must share a sampling rate");
    if (a.size() != b.size()) throw ShapeError("CCF windows must have equal duration");
    if (!(max_lag > 0.0)) throw ParameterError("max_lag must be positive");
    const double fs = a.fs();
    const auto k = static_cast<std::size_t>(std::llround(max_lag * fs));
    if (k > a.size()) throw RangeError("max_lag exceeds the window duration");
    if (k == 0) throw ParameterError("max_lag is shorter than one sample");

    const auto na = normalize_unit_energy(a);
    const auto nb = normalize_unit_energy(b);
    CcfResult r;
    r.fs = fs;
    r.window_T = a.duration();
    if (serial)
        r.values = kernels::xcorr_lags_serial(na.samples(), nb.samples(), k);
    else if ((2 * k + 1) * a.size() <= kernels::direct_work_limit)
        r.values = kernels::xcorr_lags_omp(na.samples(), nb.samples(), k);
    else
        r.values = kernels::xcorr_lags_fft(na.samples(), nb.samples(), k);
    r.lags.resize(r.values.size());
    for (std::size_t i = 0; i < r.lags.size(); ++i)
        r.lags[i] = (static_cast<double>(i) - static_cast<double>(k)) / fs;

    std::size_t peak = 0;
    for (std::size_t i = 1; i < r.values.size(); ++i)
        if (std::abs(r.values[i]) > std::abs(r.values[peak])) peak = i;
    r.peak_value = r.values[peak];
    r.peak_lag = r.lags[peak];

    const auto tau = tau0 ? tau0 : ccf_own_tau(r.values, peak, fs);
    const double lag_span = static_cast<double>(k) / fs;
    if (tau && 3.0 * *tau < lag_span) {
        r.tau0 = *tau;
        const auto rr = peak_ratio_r3(r, *tau);
        r.r3 = rr.r3;
        r.peaky = rr.peaky;
    } else {
        if (tau0) throw ParameterError("3 tau0 must be shorter than max_lag");
        r.tau0 = tau ? *tau : lag_span;
        r.r3 = 1.0;
        r.peaky = false;
    }
    return r;
}

}    // namespace

double reweight_value(double rho, double chi2_reduced) {
    if (!(chi2_reduced > 1.0)) return rho;
    return rho * std::pow(0.5 * (1.0 + chi2_reduced * chi2_reduced * chi2_reduced), -1.0 / 6.0);
}

SnrSeries matched_filter(const TimeSeries& strain, const TimeSeries& tmpl, const PowerSpectrum& psd,
                         const MfConfig& cfg) {
    if (std::abs(strain.fs() - tmpl.fs()) > 1e-9 * strain.fs())
        throw ShapeError("strain and template sampling rates differ");
    if (tmpl.size() > strain.size()) throw ShapeError("template is longer than the strain");
    check_config(cfg);
    if (energy(tmpl.samples()) == 0.0) throw DegenerateError("template is identically zero");

    const std::size_t n = tmpl.size();
    const auto spans = block_spans(strain.size(), n, strain.fs(), cfg.block_len);
    SnrSeries out;
    out.fs = strain.fs();
    out.t0 = strain.t0() - (cfg.mode == MfMode::cyclic_prefix ? static_cast<double>(n) / strain.fs() : 0.0);
    out.config = cfg;
    out.rho.reserve(strain.size());
    out.rho_reweighted.reserve(strain.size());
    for (const auto& [start, len] : spans) {
        auto br = filter_block(strain.samples().subspan(start, len), tmpl.samples(), psd, strain.fs(), cfg);
        out.rho.insert(out.rho.end(), br.rho.begin(), br.rho.end());
        out.rho_reweighted.insert(out.rho_reweighted.end(), br.rho_hat.begin(), br.rho_hat.end());
        out.chi2_reduced.insert(out.chi2_reduced.end(), br.chi2r.begin(), br.chi2r.end());
        out.sigma = br.sigma;
    }
    const auto it = std::max_element(out.rho_reweighted.begin(), out.rho_reweighted.end());
    out.peak.index = static_cast<std::size_t>(it - out.rho_reweighted.begin());
    out.peak.value = *it;
    out.peak.time = out.time_at(out.peak.index);
    return out;
}

double sigma_norm(const TimeSeries& tmpl, const PowerSpectrum& psd, std::size_t grid_len,
                  std::optional<std::pair<double, double>> band) {
    if (energy(tmpl.samples()) == 0.0) throw DegenerateError("template is identically zero");
    const std::size_t n = grid_len == 0 ? tmpl.size() : grid_len;
    if (n < tmpl.size()) throw ShapeError("grid shorter than the template");
    const auto w = filter_weights(psd, n, tmpl.fs(), band);
    const auto hf = fft::rfft(padded(tmpl.samples(), n));
    double acc = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * std::norm(hf[k]);
    const double s2 = 2.0 * tmpl.dt() / static_cast<double>(n) * acc;
    if (!(s2 > 0.0)) throw DegenerateError("template has no power in the analysis band");
    return s2;
}

SnrSeries reweight_snr(const SnrSeries& snr, const TimeSeries& strain, const TimeSeries& tmpl,
                       const PowerSpectrum& psd, int n_bins) {
    if (n_bins < 2) throw ParameterError("reweighting needs at least 2 bins");
    MfConfig cfg = snr.config;
    cfg.reweight_bins = n_bins;
    return matched_filter(strain, tmpl, psd, cfg);
}

CcfResult normalized_ccf(const TimeSeries& a, const TimeSeries& b, double max_lag, std::optional<double> tau0) {
    return ccf_impl(a, b, max_lag, tau0, false);
}

CcfResult normalized_ccf_serial(const TimeSeries& a, const TimeSeries& b, double max_lag,
                                std::optional<double> tau0) {
    return ccf_impl(a, b, max_lag, tau0, true);
}

double decorrelation_time(const TimeSeries& tmpl) {
    const auto x = tmpl.samples();
    const std::size_t n = x.size();
    if (n < 2) throw ShapeError("decorrelation time needs at least two samples");
    std::vector<double> r;
    if (n * n <= kernels::direct_work_limit) {
        r = kernels::autocorr_omp(x, n);
    } else {
        const auto full = kernels::xcorr_lags_fft(x, x, n - 1);
        r.assign(full.begin() + static_cast<std::ptrdiff_t>(n - 1), full.end());
    }
    if (!(r[0] > 0.0)) throw DegenerateError("template is identically zero");
    std::size_t cross = 0;
    for (std::size_t l = 1; l < n; ++l)
        if (r[l] / r[0] < inv_e) {
            cross = l;
            break;
        }
    if (cross == 0) throw DegenerateError("autocorrelation never falls below 1/e");
    for (std::size_t l = cross + 1; l < n; ++l)
        if (r[l] / r[0] >= periodic_recovery_level)
            throw DegenerateError("autocorrelation recovers to near unity; signal does not decorrelate");
    return static_cast<double>(cross) / tmpl.fs();
}

R3Result peak_ratio_r3(const CcfResult& ccf, double tau0) {
    if (ccf.values.empty()) throw ShapeError("empty CCF");
    if (!(tau0 > 0.0)) throw ParameterError("tau0 must be positive");
    if (!(3.0 * tau0 < ccf.lags.back())) throw ParameterError("insufficient lag range: 3 tau0 >= max_lag");
    double all = 0.0;
    double outer = 0.0;
    const double cut = 3.0 * tau0 * ccf.fs;
    const double centre = static_cast<double>(ccf.values.size() / 2);
    for (std::size_t i = 0; i < ccf.values.size(); ++i) {
        const double m = std::abs(ccf.values[i]);
        all = std::max(all, m);
        if (std::abs(static_cast<double>(i) - centre) > cut) outer = std::max(outer, m);
    }
    if (!(all > 0.0)) return {1.0, false};
    const double r3 = outer / all;
    return {r3, r3 < r3_threshold};
}

std::vector<RunningEntry> running_window_ccf(const TimeSeries& long_ts, const TimeSeries& tmpl, double hop,
                                             std::span<const TimeRange> exclusions, double max_lag,
                                             Execution exec) {
    if (!(hop > 0.0)) throw ParameterError("hop must be positive");
    if (std::abs(long_ts.fs() - tmpl.fs()) > 1e-9 * tmpl.fs()) throw ShapeError("sampling rates differ");
    if (tmpl.size() >= long_ts.size()) throw ShapeError("template must be shorter than the long series");
    const double tau0 = decorrelation_time(tmpl);
    if (!(3.0 * tau0 < max_lag)) throw ParameterError("insufficient lag range: 3 tau0 >= max_lag");

    const double fs = long_ts.fs();
    const std::size_t n = tmpl.size();
    const auto step = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(hop * fs)));
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + n <= long_ts.size(); s += step) {
        const double b = long_ts.time_at(s);
        const double e = b + static_cast<double>(n) / fs;
        const bool excluded = std::any_of(exclusions.begin(), exclusions.end(),
                                          [&](const TimeRange& r) { return r.begin < e && r.end > b; });
        if (!excluded) starts.push_back(s);
    }
    if (starts.empty()) throw RangeError("no usable window outside the exclusion ranges");

    std::vector<RunningEntry> out(starts.size());
    const bool parallel = exec == Execution::parallel;
    for_each_index(starts.size(), parallel, [&](std::size_t i) {
        const std::size_t s = starts[i];
        std::vector<double> w(long_ts.samples().begin() + static_cast<std::ptrdiff_t>(s),
                              long_ts.samples().begin() + static_cast<std::ptrdiff_t>(s + n));
        const TimeSeries win(fs, long_ts.time_at(s), std::move(w));
        const auto t = tmpl.with_t0(win.t0());
        const auto r = parallel ? normalized_ccf(win, t, max_lag, tau0) : normalized_ccf_serial(win, t, max_lag, tau0);
        out[i] = {win.t0(), r.max_abs(), r.r3};
    });
    return out;
}

}    // namespace gwx
