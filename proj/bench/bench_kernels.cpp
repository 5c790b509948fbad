#include "gwx/detection.hpp"
#include "gwx/kernels.hpp"
#include "gwx/rng.hpp"

#include <benchmark/benchmark.h>

namespace {

std::vector<double> draws(std::uint64_t seed, std::size_t n) { return gwx::gaussian_draws(seed, n); }

void BM_xcorr_serial(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(0));
    const auto a = draws(1, n), b = draws(2, n);
    for (auto _ : st) benchmark::DoNotOptimize(gwx::kernels::xcorr_lags_serial(a, b, n / 2));
}

void BM_xcorr_omp(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(0));
    const auto a = draws(1, n), b = draws(2, n);
    for (auto _ : st) benchmark::DoNotOptimize(gwx::kernels::xcorr_lags_omp(a, b, n / 2));
}

void BM_xcorr_fft(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(0));
    const auto a = draws(1, n), b = draws(2, n);
    for (auto _ : st) benchmark::DoNotOptimize(gwx::kernels::xcorr_lags_fft(a, b, n / 2));
}

void BM_slide_serial(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(0));
    const auto re = draws(3, n + 1024);
    std::vector<gwx::kernels::cplx> x(re.begin(), re.end());
    const auto h = draws(4, 1024);
    for (auto _ : st) benchmark::DoNotOptimize(gwx::kernels::slide_correlate_serial(x, h, n));
}

void BM_slide_omp(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(0));
    const auto re = draws(3, n + 1024);
    std::vector<gwx::kernels::cplx> x(re.begin(), re.end());
    const auto h = draws(4, 1024);
    for (auto _ : st) benchmark::DoNotOptimize(gwx::kernels::slide_correlate_omp(x, h, n));
}

void BM_running_ccf(benchmark::State& st) {
    const double fs = 4096.0;
    const gwx::TimeSeries ts(fs, 0.0, draws(5, 16 * 4096));
    const gwx::TimeSeries h(fs, 0.0, draws(6, 820));
    const auto exec = st.range(0) ? gwx::Execution::parallel : gwx::Execution::serial;
    for (auto _ : st) benchmark::DoNotOptimize(gwx::running_window_ccf(ts, h, 0.25, {}, 0.1, exec));
}

void BM_matched_filter(benchmark::State& st) {
    const double fs = 4096.0;
    const gwx::TimeSeries s(fs, 0.0, draws(7, 32 * 4096));
    const gwx::TimeSeries h(fs, 0.0, draws(8, 820));
    const gwx::PowerSpectrum psd(1.0, std::vector<double>(2049, 1.0));
    gwx::MfConfig cfg;
    cfg.mode = st.range(0) ? gwx::MfMode::cyclic_prefix : gwx::MfMode::circular;
    for (auto _ : st) benchmark::DoNotOptimize(gwx::matched_filter(s, h, psd, cfg));
}

}    // namespace

BENCHMARK(BM_xcorr_serial)->Arg(1024)->Arg(4096);
BENCHMARK(BM_xcorr_omp)->Arg(1024)->Arg(4096);
BENCHMARK(BM_xcorr_fft)->Arg(1024)->Arg(4096);
BENCHMARK(BM_slide_serial)->Arg(8192);
BENCHMARK(BM_slide_omp)->Arg(8192);
BENCHMARK(BM_running_ccf)->Arg(0)->Arg(1);
BENCHMARK(BM_matched_filter)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
