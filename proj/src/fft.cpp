#include "gwx/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

namespace gwx::fft {
namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct PlanGuard {
    fftw_plan plan = nullptr;
    ~PlanGuard() {
        if (plan != nullptr) {
            std::lock_guard lock(planner_mutex());
            fftw_destroy_plan(plan);
        }
    }
};

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

}    // namespace

std::vector<cplx> rfft(std::span<const double> x) {
    const auto n = x.size();
    std::vector<double> in(x.begin(), x.end());
    std::vector<cplx> out(n / 2 + 1);
    if (n == 0) return out;
    PlanGuard g;
    {
        std::lock_guard lock(planner_mutex());
        g.plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), as_fftw(out.data()), FFTW_ESTIMATE);
    }
    fftw_execute(g.plan);
    return out;
}

std::vector<double> irfft(std::span<const cplx> bins, std::size_t n) {
    std::vector<cplx> in(n / 2 + 1);
    std::copy_n(bins.begin(), std::min(bins.size(), in.size()), in.begin());
    std::vector<double> out(n);
    if (n == 0) return out;
    PlanGuard g;
    {
        std::lock_guard lock(planner_mutex());
        g.plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), as_fftw(in.data()), out.data(), FFTW_ESTIMATE);
    }
    fftw_execute(g.plan);
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& v : out) v *= scale;
    return out;
}

namespace {

std::vector<cplx> c2c(std::span<const cplx> x, int sign) {
    const auto n = x.size();
    std::vector<cplx> in(x.begin(), x.end());
    std::vector<cplx> out(n);
    if (n == 0) return out;
    PlanGuard g;
    {
        std::lock_guard lock(planner_mutex());
        g.plan = fftw_plan_dft_1d(static_cast<int>(n), as_fftw(in.data()), as_fftw(out.data()), sign, FFTW_ESTIMATE);
    }
    fftw_execute(g.plan);
    return out;
}

}    // namespace

std::vector<cplx> fft(std::span<const cplx> x) { return c2c(x, FFTW_FORWARD); }

std::vector<cplx> ifft(std::span<const cplx> x) {
    auto out = c2c(x, FFTW_BACKWARD);
    const double scale = out.empty() ? 1.0 : 1.0 / static_cast<double>(out.size());
    for (auto& v : out) v *= scale;
    return out;
}

std::size_t good_size(std::size_t n) {
    if (n <= 1) return 1;
    for (std::size_t m = n;; ++m) {
        std::size_t r = m;
        for (std::size_t p : {2u, 3u, 5u, 7u})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

}    // namespace gwx::fft
