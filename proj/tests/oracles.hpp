#pragma once

// Brute-force reference implementations used by the tests. Everything here
// is O(n^2) and independent of FFTW and of the library kernels.

#include "gwx/series.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

// X_k = sum_n x_n exp(-2 pi i k n / N); sign = +1 gives the unscaled inverse.
inline std::vector<cplx> dft(const std::vector<cplx>& x, int sign = -1) {
    const std::size_t n = x.size();
    std::vector<cplx> tw(n);
    for (std::size_t m = 0; m < n; ++m) {
        const double arg = sign * 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
        tw[m] = cplx(std::cos(arg), std::sin(arg));
    }
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc = 0.0;
        std::size_t m = 0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += x[j] * tw[m];
            m += k;
            if (m >= n) m -= n;
        }
        out[k] = acc;
    }
    return out;
}

inline std::vector<cplx> to_complex(const std::vector<double>& x) { return {x.begin(), x.end()}; }

// sum_n a[n] b[n - l] for l in [-max_lag, max_lag], zero outside the extent.
inline std::vector<double> xcorr(const std::vector<double>& a, const std::vector<double>& b, std::size_t max_lag) {
    const auto na = static_cast<long>(a.size());
    const auto nb = static_cast<long>(b.size());
    const auto k = static_cast<long>(max_lag);
    std::vector<double> out;
    for (long l = -k; l <= k; ++l) {
        double acc = 0.0;
        for (long n = 0; n < na; ++n)
            if (n - l >= 0 && n - l < nb) acc += a[n] * b[n - l];
        out.push_back(acc);
    }
    return out;
}

// Analytic signal of a circular sequence after one-sided weighting: bin k
// of the positive half is multiplied by a_k * w[k] (a = 1 at DC and
// Nyquist, 2 elsewhere) and the negative half is dropped.
inline std::vector<cplx> weighted_analytic(const std::vector<double>& x, const std::vector<double>& w) {
    const std::size_t n = x.size();
    auto spec = dft(to_complex(x));
    for (std::size_t k = 0; k < n; ++k) {
        if (k > n / 2) {
            spec[k] = 0.0;
            continue;
        }
        const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
        spec[k] *= (edge ? 1.0 : 2.0) * w[k];
    }
    auto out = dft(spec, +1);
    for (auto& v : out) v /= static_cast<double>(n);
    return out;
}

// Noise-weighted linear-correlation SNR. `grid` is the sequence the filter
// sees; output i correlates grid[i..] with h (zero past the end), divided by
// <h|h>^(1/2). Weights 1/S_k are evaluated from `psd` at k fs / grid.size().
inline std::vector<double> mf_rho(const std::vector<double>& grid, const std::vector<double>& h,
                                  const gwx::PowerSpectrum& psd, double fs, std::size_t count) {
    const std::size_t e = grid.size();
    std::vector<double> w(e / 2 + 1);
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = 1.0 / psd.at(fs * static_cast<double>(k) / static_cast<double>(e));
    const auto u = weighted_analytic(grid, w);

    // <h|h> = 2 dt / E * sum_k a_k |H_k|^2 / S_k on the E-point grid
    std::vector<double> hp(e, 0.0);
    std::copy(h.begin(), h.end(), hp.begin());
    const auto hf = dft(to_complex(hp));
    double hh = 0.0;
    for (std::size_t k = 0; k <= e / 2; ++k) {
        const bool edge = k == 0 || (e % 2 == 0 && k == e / 2);
        hh += (edge ? 1.0 : 2.0) * w[k] * std::norm(hf[k]);
    }
    const double dt = 1.0 / fs;
    hh *= 2.0 * dt / static_cast<double>(e);

    std::vector<double> rho(count);
    for (std::size_t i = 0; i < count; ++i) {
        cplx acc = 0.0;
        for (std::size_t j = 0; j < h.size() && i + j < e; ++j) acc += u[i + j] * h[j];
        rho[i] = std::abs(2.0 * dt * acc) / std::sqrt(hh);
    }
    return rho;
}

inline std::vector<double> gaussian(std::uint64_t seed, std::size_t n, double sd = 1.0) {
    std::mt19937_64 g(seed);
    std::normal_distribution<double> d(0.0, sd);
    std::vector<double> v(n);
    for (auto& x : v) x = d(g);
    return v;
}

inline double sum_sq(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

inline double max_rel_dev(const std::vector<double>& got, const std::vector<double>& want) {
    double scale = 0.0;
    for (double v : want) scale = std::max(scale, std::abs(v));
    double dev = 0.0;
    for (std::size_t i = 0; i < want.size(); ++i) dev = std::max(dev, std::abs(got[i] - want[i]));
    return dev / scale;
}

}    // namespace oracle
