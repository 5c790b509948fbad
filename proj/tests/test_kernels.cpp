#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gwx/error.hpp"
#include "gwx/fft.hpp"
#include "gwx/kernels.hpp"
#include "gwx/parallel.hpp"
#include "oracles.hpp"

#include <atomic>
#include <stdexcept>

using namespace gwx;

TEST_CASE("xcorr kernels agree with the brute-force oracle") {
    for (auto [na, nb, lag] : {std::tuple{64u, 64u, 63u}, {500u, 300u, 100u}, {1000u, 1000u, 10u}, {7u, 3u, 7u}}) {
        const auto a = oracle::gaussian(na, na);
        const auto b = oracle::gaussian(nb + 1000, nb);
        const auto want = oracle::xcorr(a, b, lag);
        const auto s = kernels::xcorr_lags_serial(a, b, lag);
        const auto o = kernels::xcorr_lags_omp(a, b, lag);
        const auto f = kernels::xcorr_lags_fft(a, b, lag);
        CAPTURE(na);
        CHECK(s == o);
        CHECK(oracle::max_rel_dev(s, want) < 1e-13);
        CHECK(oracle::max_rel_dev(f, want) < 1e-12);
    }
}

TEST_CASE("slide correlation kernels") {
    const auto xr = oracle::gaussian(1, 300);
    const auto xi = oracle::gaussian(2, 300);
    std::vector<kernels::cplx> x(300);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = {xr[i], xi[i]};
    const auto h = oracle::gaussian(3, 50);
    const auto s = kernels::slide_correlate_serial(x, h, 251);
    const auto o = kernels::slide_correlate_omp(x, h, 251);
    CHECK(s == o);
    for (std::size_t t : {0u, 17u, 250u}) {
        kernels::cplx acc = 0.0;
        for (std::size_t j = 0; j < h.size(); ++j) acc += x[t + j] * h[j];
        CHECK(std::abs(s[t] - acc) < 1e-12);
    }
    CHECK_THROWS_AS(kernels::slide_correlate_serial(x, h, 252), ShapeError);
    CHECK_THROWS_AS(kernels::slide_correlate_omp(x, {}, 10), ShapeError);
}

TEST_CASE("autocorrelation kernels") {
    const auto x = oracle::gaussian(4, 800);
    const auto s = kernels::autocorr_serial(x, 800);
    const auto o = kernels::autocorr_omp(x, 800);
    CHECK(s == o);
    const auto full = oracle::xcorr(x, x, 799);
    for (std::size_t l = 0; l < 800; ++l) CHECK(std::abs(s[l] - full[799 + l]) < 1e-10);
    CHECK(kernels::autocorr_serial(x, 5000).size() == 800);
}

TEST_CASE("fft helpers") {
    const auto x = oracle::gaussian(5, 384);
    const auto spec = fft::rfft(x);
    const auto want = oracle::dft(oracle::to_complex(x));
    REQUIRE(spec.size() == 193);
    double dev = 0.0;
    for (std::size_t k = 0; k < spec.size(); ++k) dev = std::max(dev, std::abs(spec[k] - want[k]));
    CHECK(dev < 1e-10);
    const auto back = fft::irfft(spec, 384);
    CHECK(oracle::max_rel_dev(back, x) < 1e-13);
    CHECK(fft::good_size(1025) >= 1025);
    CHECK(fft::good_size(1024) == 1024);
}

TEST_CASE("for_each_index covers every index and rethrows") {
    for (bool par : {false, true}) {
        std::vector<int> hit(1000, 0);
        for_each_index(hit.size(), par, [&](std::size_t i) { hit[i] += 1; });
        CHECK(std::count(hit.begin(), hit.end(), 1) == 1000);
        std::atomic<int> ran{0};
        CHECK_THROWS_AS(for_each_index(100, par,
                                       [&](std::size_t i) {
                                           ++ran;
                                           if (i == 42) throw std::runtime_error("boom");
                                       }),
                        std::runtime_error);
        CHECK(ran.load() == 100);
    }
    CHECK(kernels::max_threads() >= 1);
}
