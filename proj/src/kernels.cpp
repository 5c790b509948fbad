#include "gwx/kernels.hpp"

#include "gwx/error.hpp"
#include "gwx/fft.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gwx::kernels {
namespace {

double lag_sum(std::span<const double> a, std::span<const double> b, long long lag) {
    // n ranges where both a[n] and b[n - lag] exist
    const long long na = static_cast<long long>(a.size());
    const long long nb = static_cast<long long>(b.size());
    const long long lo = std::max(0LL, lag);
    const long long hi = std::min(na, nb + lag);
    double acc = 0.0;
    for (long long n = lo; n < hi; ++n) acc += a[static_cast<std::size_t>(n)] * b[static_cast<std::size_t>(n - lag)];
    return acc;
}

cplx slide_one(std::span<const cplx> x, std::span<const double> h, std::size_t t) {
    cplx acc = 0.0;
    for (std::size_t j = 0; j < h.size(); ++j) acc += x[t + j] * h[j];
    return acc;
}

void check_slide(std::span<const cplx> x, std::span<const double> h, std::size_t count) {
    if (h.empty() || x.size() + 1 < count + h.size()) throw ShapeError("slide_correlate: input too short for requested outputs");
}

}    // namespace

std::vector<double> xcorr_lags_serial(std::span<const double> a, std::span<const double> b, std::size_t max_lag) {
    const auto m = static_cast<long long>(max_lag);
    std::vector<double> out(2 * max_lag + 1);
    for (long long l = -m; l <= m; ++l) out[static_cast<std::size_t>(l + m)] = lag_sum(a, b, l);
    return out;
}

std::vector<double> xcorr_lags_omp(std::span<const double> a, std::span<const double> b, std::size_t max_lag) {
    const auto m = static_cast<long long>(max_lag);
    std::vector<double> out(2 * max_lag + 1);
#pragma omp parallel for schedule(static)
    for (long long l = -m; l <= m; ++l) out[static_cast<std::size_t>(l + m)] = lag_sum(a, b, l);
    return out;
}

std::vector<double> xcorr_lags_fft(std::span<const double> a, std::span<const double> b, std::size_t max_lag) {
    const std::size_t n = fft::good_size(a.size() + b.size() + max_lag);
    std::vector<double> pa(n, 0.0);
    std::vector<double> pb(n, 0.0);
    std::copy(a.begin(), a.end(), pa.begin());
    std::copy(b.begin(), b.end(), pb.begin());
    auto fa = fft::rfft(pa);
    const auto fb = fft::rfft(pb);
    for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= std::conj(fb[k]);
    const auto c = fft::irfft(fa, n);
    // c[l mod n] = sum_n a[n] b[n - l]
    std::vector<double> out(2 * max_lag + 1);
    const auto m = static_cast<long long>(max_lag);
    const auto nn = static_cast<long long>(n);
    for (long long l = -m; l <= m; ++l) out[static_cast<std::size_t>(l + m)] = c[static_cast<std::size_t>((l % nn + nn) % nn)];
    return out;
}

std::vector<cplx> slide_correlate_serial(std::span<const cplx> x, std::span<const double> h, std::size_t count) {
    check_slide(x, h, count);
    std::vector<cplx> out(count);
    for (std::size_t t = 0; t < count; ++t) out[t] = slide_one(x, h, t);
    return out;
}

std::vector<cplx> slide_correlate_omp(std::span<const cplx> x, std::span<const double> h, std::size_t count) {
    check_slide(x, h, count);
    std::vector<cplx> out(count);
    const auto c = static_cast<long long>(count);
#pragma omp parallel for schedule(static)
    for (long long t = 0; t < c; ++t) out[static_cast<std::size_t>(t)] = slide_one(x, h, static_cast<std::size_t>(t));
    return out;
}

std::vector<double> autocorr_serial(std::span<const double> x, std::size_t max_lag) {
    std::vector<double> r(std::min(max_lag, x.size()));
    for (std::size_t l = 0; l < r.size(); ++l) r[l] = lag_sum(x, x, -static_cast<long long>(l));
    return r;
}

std::vector<double> autocorr_omp(std::span<const double> x, std::size_t max_lag) {
    std::vector<double> r(std::min(max_lag, x.size()));
    const auto m = static_cast<long long>(r.size());
#pragma omp parallel for schedule(static)
    for (long long l = 0; l < m; ++l) r[static_cast<std::size_t>(l)] = lag_sum(x, x, -l);
    return r;
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}    // namespace gwx::kernels
