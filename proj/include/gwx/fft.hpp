#pragma once

#include <complex>
#include <span>
#include <vector>

// Thin FFTW wrapper. Plans are created with FFTW_ESTIMATE under a global
// lock so the transforms can be called from OpenMP worker threads.
namespace gwx::fft {

using cplx = std::complex<double>;

// Unscaled real-to-complex DFT, n/2+1 bins.
std::vector<cplx> rfft(std::span<const double> x);

// Inverse of rfft including the 1/n factor; `n` is the real output length.
std::vector<double> irfft(std::span<const cplx> bins, std::size_t n);

// Unscaled complex DFT.
std::vector<cplx> fft(std::span<const cplx> x);

// Inverse complex DFT including the 1/n factor.
std::vector<cplx> ifft(std::span<const cplx> x);

// Smallest 2^a 3^b 5^c 7^d >= n; FFTW is fast on those sizes.
std::size_t good_size(std::size_t n);

}    // namespace gwx::fft
