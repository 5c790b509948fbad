#pragma once

#include "gwx/series.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

// Synthetic detector-like data: colored noise from a PSD model, burst
// injections and off-bin line interference.
namespace gwx {

struct PowerLawSegment {
    double f_hz = 0.0;     // start of the segment
    double level = 0.0;    // PSD at f_hz, strain^2/Hz
    double slope = 0.0;    // log-log slope until the next segment
};

struct SpectralLine {
    double f_hz = 0.0;
    double ratio = 1.0;       // peak power multiplier
    double width_hz = 0.5;    // Gaussian standard deviation of the bump
};

// Piecewise std multiplier: `factor` applies from t_s (relative to the
// series start) until the next step.
struct StdStep {
    double t_s = 0.0;
    double factor = 1.0;
};

struct PsdModel {
    std::vector<PowerLawSegment> segments;
    std::vector<SpectralLine> lines;
    std::vector<StdStep> std_modulation;    // empty: stationary

    double psd_at(double f) const;
    void validate(double fs) const;

    // Seismic wall below 20 Hz, bucket around 100-200 Hz, f^2 shot-noise
    // rise above, 60/120/180 Hz mains lines and a violin cluster near 500 Hz.
    static PsdModel ligo_like();
    static PsdModel flat(double level);

    static PsdModel from_json(const std::string& text);
    static PsdModel load(const std::filesystem::path& path);
    std::string to_json() const;

    PowerSpectrum tabulate(double df, std::size_t count) const;
};

enum class BurstKind { sine_decay, awgn };

struct BurstSpec {
    BurstKind kind = BurstKind::sine_decay;
    double f0 = 64.0;
    double duration = 1.0;
    double sigma_ratio = 0.01;
    // infinity: constant envelope
    double decay_tau = 0.25;
    std::uint64_t seed = 0;

    static BurstSpec sine(double f0, double duration, double sigma_ratio, double decay_tau = 0.25);
    static BurstSpec awgn(double duration, double sigma_ratio = 1.0 / 500.0, std::uint64_t seed = 0);
};

inline constexpr double no_decay = std::numeric_limits<double>::infinity();

TimeSeries colored_noise(const PsdModel& model, double duration, double fs, std::uint64_t seed);

// Burst whose population std equals sigma_ratio * std(ref); sampled at
// ref's rate, starting at ref.t0().
TimeSeries sine_burst(const BurstSpec& spec, const TimeSeries& ref);
TimeSeries awgn_burst(const BurstSpec& spec, const TimeSeries& ref);

// amplitude * cos(2 pi (f0 + delta) t). delta defaults to half a bin of a
// 32 s analysis grid.
TimeSeries line_interference(double amplitude, double f0, double delta, double duration, double fs);
inline constexpr double half_bin_32s = 1.0 / 64.0;

// host + signal, with signal's first sample landing at t_at.
TimeSeries inject(const TimeSeries& host, const TimeSeries& signal, double t_at);

}    // namespace gwx
