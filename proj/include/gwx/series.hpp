#pragma once

#include <complex>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

// Time-series container, spectra and the Welch estimator that every other
// module is built on.
namespace gwx {

using cplx = std::complex<double>;

// Uniformly sampled real sequence. Immutable after construction; the
// constructor enforces fs > 0, at least one sample, and finite values.
class TimeSeries {
public:
    TimeSeries(double fs, double t0, std::vector<double> samples);

    double fs() const noexcept { return fs_; }
    double t0() const noexcept { return t0_; }
    double dt() const noexcept { return 1.0 / fs_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double duration() const noexcept { return static_cast<double>(samples_.size()) / fs_; }
    double time_at(std::size_t i) const noexcept { return t0_ + static_cast<double>(i) / fs_; }

    std::span<const double> samples() const noexcept { return samples_; }
    double operator[](std::size_t i) const noexcept { return samples_[i]; }

    // Same fs and t0, new samples.
    TimeSeries with_samples(std::vector<double> samples) const;
    TimeSeries with_t0(double t0) const;

private:
    double fs_;
    double t0_;
    std::vector<double> samples_;
};

enum class SpectrumConvention { one_sided, two_sided };

// Continuous-FT approximation of a series: bin k = dt * DFT_k. One-sided
// spectra hold n/2+1 bins, two-sided hold n bins in FFT order.
struct ComplexSpectrum {
    double df = 0.0;
    std::vector<cplx> bins;
    SpectrumConvention convention = SpectrumConvention::one_sided;
    std::size_t series_len = 0;
    double t0 = 0.0;

    std::vector<double> magnitude() const;
    std::vector<double> phase() const;
};

// One-sided PSD in strain^2/Hz on the grid f_k = k * df.
class PowerSpectrum {
public:
    PowerSpectrum(double df, std::vector<double> values);

    double df() const noexcept { return df_; }
    std::size_t size() const noexcept { return values_.size(); }
    double f_max() const noexcept { return df_ * static_cast<double>(values_.size() - 1); }
    double frequency(std::size_t k) const noexcept { return df_ * static_cast<double>(k); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t k) const noexcept { return values_[k]; }

    // Linear in log-power between grid points, clamped at the grid edges.
    // Falls back to linear interpolation when either neighbour is zero.
    double at(double f) const;

    // Values at k * df_new for k < count.
    std::vector<double> sample_on(double df_new, std::size_t count) const;

    PowerSpectrum scaled(double factor) const;

private:
    double df_;
    std::vector<double> values_;
};

enum class StrainFormat { gwx_text, csv };
enum class WindowKind { blackman, hann, rect };

struct WelchOptions {
    std::size_t segment_len = 0;    // 0 -> 4 * fs samples
    double overlap = 0.5;
    WindowKind window = WindowKind::blackman;
};

TimeSeries load_strain(const std::filesystem::path& path, StrainFormat format);
void save_strain(const TimeSeries& ts, const std::filesystem::path& path, StrainFormat format);

// Window [t_start, t_start + duration) snapped to the nearest sample.
TimeSeries slice_window(const TimeSeries& ts, double t_start, double duration);

// Scaled copy with sum of squares equal to one.
TimeSeries normalize_unit_energy(const TimeSeries& ts);

ComplexSpectrum forward_spectrum(const TimeSeries& ts,
                                 SpectrumConvention convention = SpectrumConvention::one_sided);
TimeSeries inverse_spectrum(const ComplexSpectrum& sp);

PowerSpectrum welch_psd(const TimeSeries& ts, const WelchOptions& opts = {});

std::vector<double> make_window(WindowKind kind, std::size_t n);

// Analytic signal x + i H[x] by one-sided spectral projection over the
// whole sequence (circular).
std::vector<cplx> analytic_signal(std::span<const double> x);

// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

double energy(std::span<const double> x);
double mean(std::span<const double> x);
double std_dev(std::span<const double> x);

}    // namespace gwx
