#pragma once

#include <complex>
#include <span>
#include <vector>

// Data-parallel inner loops. Every OpenMP kernel has a serial twin with
// identical arithmetic order per output element; the serial versions are
// the references the tests and benchmarks compare against.
namespace gwx::kernels {

using cplx = std::complex<double>;

// out[l + max_lag] = sum_n a[n] * b[n - l] for l in [-max_lag, max_lag],
// both sequences zero outside their extent.
std::vector<double> xcorr_lags_serial(std::span<const double> a, std::span<const double> b, std::size_t max_lag);
std::vector<double> xcorr_lags_omp(std::span<const double> a, std::span<const double> b, std::size_t max_lag);
// Same values through a zero-padded FFT; used when the direct sum gets big.
std::vector<double> xcorr_lags_fft(std::span<const double> a, std::span<const double> b, std::size_t max_lag);

// out[t] = sum_j x[t + j] * h[j] for t < count. Requires
// x.size() >= count + h.size() - 1.
std::vector<cplx> slide_correlate_serial(std::span<const cplx> x, std::span<const double> h, std::size_t count);
std::vector<cplx> slide_correlate_omp(std::span<const cplx> x, std::span<const double> h, std::size_t count);

// r[l] = sum_n x[n] x[n + l] for l < max_lag.
std::vector<double> autocorr_serial(std::span<const double> x, std::size_t max_lag);
std::vector<double> autocorr_omp(std::span<const double> x, std::size_t max_lag);

// Direct sums above this many multiply-adds go through the FFT path.
inline constexpr std::size_t direct_work_limit = 1u << 22;

int max_threads();

}    // namespace gwx::kernels
