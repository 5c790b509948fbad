#pragma once

#include "gwx/series.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

// Chirp templates as phase/envelope pairs, FM/AM synthesis and phase-noise
// ("bogus") variants.
namespace gwx {

enum class SweepLaw { linear, newtonian };

// Parameters of a synthetic stand-in chirp.
struct ChirpParams {
    std::string name = "chirp";
    double duration = 0.2;
    double f_start = 35.0;
    double f_end = 250.0;
    SweepLaw law = SweepLaw::newtonian;
    // envelope = (f(t) / f_start)^amp_exponent
    double amp_exponent = 2.0 / 3.0;
    // carrier used for the A(t) cos(2 pi f0 t + m(t)) decomposition
    double carrier_f0 = 0.0;
    double taper_fraction = 0.05;

    double frequency_at(double t) const;
    double phase_at(double t) const;    // radians, total phase

    std::string to_json(std::uint64_t seed = 0) const;
    static ChirpParams from_json(const std::string& text);
};

ChirpParams gw150914_like();
ChirpParams gw151226_like();
ChirpParams gw170104_like();
std::vector<ChirpParams> stock_templates();
ChirpParams stock_template(const std::string& name);

// Peak-normalized chirp with cosine tapers on both ends.
TimeSeries make_chirp(const ChirpParams& params, double fs);

// h(t) = A(t) cos(2 pi f0 t + m(t)), t measured from base.t0().
struct Template {
    TimeSeries base;
    std::vector<double> phase;       // m(t), unwrapped, radians
    std::vector<double> envelope;    // A(t) >= 0
    double carrier_f0 = 0.0;
};

struct BogusSpec {
    double sigma_phase = 0.0;       // radians, std of w_m
    double sigma_amp = 0.0;         // std of w_a as a fraction of rms(A)
    double smoothing_bw = 64.0;     // Hz low-pass on the noise; <= 0 disables
    std::uint64_t seed = 0;
};

// Analytic-signal envelope and unwrapped phase.
Template extract_phase_amplitude(const TimeSeries& h, double carrier_f0);

TimeSeries synthesize_fm(const Template& tpl);

// A_b(t) cos(2 pi f0 t + m(t) + w_m(t)) with A_b = max(0, A + w_a).
TimeSeries make_bogus(const Template& tpl, const BogusSpec& spec);

struct TemplateError {
    TimeSeries error;    // ideal - candidate
    double rel_l2;       // |error| / |ideal|
};

TemplateError template_error(const TimeSeries& ideal, const TimeSeries& candidate);

struct BandSelector {
    double f_lo;
    double f_hi;
};
struct TimeSelector {
    double t_a;
    double t_b;
};
using EnergySelector = std::variant<BandSelector, TimeSelector>;

double energy_fraction(const TimeSeries& ts, const EnergySelector& selector);

}    // namespace gwx
