#pragma once

#include "gwx/series.hpp"

#include <span>
#include <vector>

// Band-pass filtering, full-band and localized whitening, and spectral
// line detection.
namespace gwx {

struct LineBand {
    double f_center = 0.0;
    double half_width = 0.0;
    double peak_ratio = 1.0;    // PSD peak over local running median

    double lo() const noexcept { return f_center - half_width; }
    double hi() const noexcept { return f_center + half_width; }
};

enum class WhitenVariant { full_band, localized };

struct WhitenMode {
    WhitenVariant variant = WhitenVariant::full_band;
    std::vector<LineBand> line_bands;    // used only when localized
};

// Direct-form-II-transposed second-order section, a0 == 1.
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
};

enum class FilterPhase { zero_phase, causal };

// Digital Butterworth band-pass with an `order`-pole analog prototype
// (2*order poles in total), bilinear transform with prewarped edges, gain
// normalized to one at the geometric band centre.
std::vector<Biquad> design_butterworth_bandpass(double f_lo, double f_hi, int order, double fs);

// Complex response of a cascade at frequency f.
cplx sos_response(std::span<const Biquad> sos, double f, double fs);

// Forward-backward filtering by default. The first and last
// ~2 * settle_time(f_lo) seconds carry filter transients; the output keeps
// the input length regardless.
TimeSeries butterworth_bandpass(const TimeSeries& ts, double f_lo, double f_hi, int order,
                                FilterPhase phase = FilterPhase::zero_phase);

// Rough 1% settling time of the band-pass, seconds.
double settle_time(double f_lo, double f_hi, int order);

// PSD values below this fraction of the median are clamped before dividing.
inline constexpr double psd_floor_fraction = 1e-12;

// `psd` sampled on the rfft grid of an n-sample series at rate fs, with
// bins below psd_floor_fraction x median clamped. Throws DegenerateError if
// any bin is still nonpositive.
std::vector<double> psd_on_grid(const PowerSpectrum& psd, std::size_t n, double fs);

// X(f) / sqrt(S_n(f) * fs / 2): unit-variance output for noise drawn
// from `psd`.
TimeSeries whiten_full(const TimeSeries& ts, const PowerSpectrum& psd);

// Divide by the amplitude spectrum only inside `lines`, relative to each
// band's neighbourhood median, with raised-cosine ramps of half_width/4
// outside each edge. Outside the bands the spectrum passes unchanged.
TimeSeries whiten_localized(const TimeSeries& ts, const PowerSpectrum& psd, std::span<const LineBand> lines);

TimeSeries whiten(const TimeSeries& ts, const PowerSpectrum& psd, const WhitenMode& mode);

inline constexpr double default_line_threshold = 10.0;
inline constexpr double default_line_window_hz = 8.0;

// Maximal runs of bins above threshold_ratio x running median, merged when
// they touch, sorted by centre frequency.
std::vector<LineBand> detect_lines(const PowerSpectrum& psd, double threshold_ratio = default_line_threshold,
                                   double median_window_hz = default_line_window_hz);

}    // namespace gwx
