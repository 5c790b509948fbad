#include "gwx/series.hpp"

#include "gwx/error.hpp"
#include "gwx/fft.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>

namespace gwx {

TimeSeries::TimeSeries(double fs, double t0, std::vector<double> samples)
: fs_(fs), t0_(t0), samples_(std::move(samples)) {
    if (!(fs_ > 0.0) || !std::isfinite(fs_)) throw ParameterError("sample rate must be positive and finite");
    if (!std::isfinite(t0_)) throw ParameterError("start time must be finite");
    if (samples_.empty()) throw ShapeError("time series needs at least one sample");
    for (std::size_t i = 0; i < samples_.size(); ++i)
        if (!std::isfinite(samples_[i])) throw ParameterError("non-finite sample at index " + std::to_string(i));
}

TimeSeries TimeSeries::with_samples(std::vector<double> samples) const {
    return TimeSeries(fs_, t0_, std::move(samples));
}

TimeSeries TimeSeries::with_t0(double t0) const { return TimeSeries(fs_, t0, samples_); }

std::vector<double> ComplexSpectrum::magnitude() const {
    std::vector<double> out(bins.size());
    std::transform(bins.begin(), bins.end(), out.begin(), [](cplx c) { return std::abs(c); });
    return out;
}

std::vector<double> ComplexSpectrum::phase() const {
    std::vector<double> out(bins.size());
    std::transform(bins.begin(), bins.end(), out.begin(), [](cplx c) { return std::arg(c); });
    return out;
}

PowerSpectrum::PowerSpectrum(double df, std::vector<double> values) : df_(df), values_(std::move(values)) {
    if (!(df_ > 0.0) || !std::isfinite(df_)) throw ParameterError("PSD bin spacing must be positive");
    if (values_.empty()) throw ShapeError("PSD needs at least one bin");
    for (double v : values_)
        if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError("PSD values must be finite and nonnegative");
}

double PowerSpectrum::at(double f) const {
    const double pos = f / df_;
    if (pos <= 0.0) return values_.front();
    const auto last = values_.size() - 1;
    if (pos >= static_cast<double>(last)) return values_.back();
    const auto k = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(k);
    const double a = values_[k];
    const double b = values_[k + 1];
    if (a <= 0.0 || b <= 0.0) return a + frac * (b - a);
    return std::exp(std::log(a) + frac * (std::log(b) - std::log(a)));
}

std::vector<double> PowerSpectrum::sample_on(double df_new, std::size_t count) const {
    std::vector<double> out(count);
    for (std::size_t k = 0; k < count; ++k) out[k] = at(df_new * static_cast<double>(k));
    return out;
}

PowerSpectrum PowerSpectrum::scaled(double factor) const {
    auto v = values_;
    for (auto& x : v) x *= factor;
    return PowerSpectrum(df_, std::move(v));
}

// ---------------------------------------------------------------------------
// I/O

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

bool parse_double(std::string_view s, double& out) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

std::string_view strip_cr(std::string_view s) {
    if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
    return s;
}

double header_value(std::string_view line, std::string_view key, std::size_t lineno) {
    line = strip_cr(line);
    const std::string prefix = "# " + std::string(key) + "=";
    if (line.substr(0, prefix.size()) != prefix) throw ParseError("malformed header, expected '" + prefix + "...'", lineno);
    double v = 0.0;
    if (!parse_double(line.substr(prefix.size()), v)) throw ParseError("malformed header value for " + std::string(key), lineno);
    return v;
}

TimeSeries load_gwx_text(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    auto next = [&](const char* what) {
        if (!std::getline(in, line)) throw ParseError(std::string("missing ") + what, lineno + 1);
        ++lineno;
    };
    next("format line");
    if (strip_cr(line) != "# gwx-strain v1") throw ParseError("malformed header, expected '# gwx-strain v1'", lineno);
    next("fs_hz header");
    const double fs = header_value(line, "fs_hz", lineno);
    next("t0_s header");
    const double t0 = header_value(line, "t0_s", lineno);
    next("n header");
    const double n_raw = header_value(line, "n", lineno);
    if (n_raw < 1.0 || n_raw != std::floor(n_raw)) throw ParseError("malformed header, n must be a positive integer", lineno);
    if (!(fs > 0.0)) throw ParseError("malformed header, fs_hz must be positive", 2);
    const auto n = static_cast<std::size_t>(n_raw);

    std::vector<double> samples;
    samples.reserve(n);
    while (std::getline(in, line)) {
        ++lineno;
        auto view = strip_cr(line);
        if (view.empty() && in.peek() == std::char_traits<char>::eof()) break;
        double v = 0.0;
        if (!parse_double(view, v)) throw ParseError("non-numeric sample '" + std::string(view) + "'", lineno);
        samples.push_back(v);
    }
    if (samples.size() != n)
        throw ParseError("sample count mismatch: header n=" + std::to_string(n) + ", found " + std::to_string(samples.size()),
                         lineno);
    return TimeSeries(fs, t0, std::move(samples));
}

TimeSeries load_csv(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError("missing CSV header", 1);
    ++lineno;
    if (strip_cr(line) != "t_s,strain") throw ParseError("malformed header, expected 't_s,strain'", lineno);
    std::vector<double> times;
    std::vector<double> samples;
    while (std::getline(in, line)) {
        ++lineno;
        auto view = strip_cr(line);
        if (view.empty()) continue;
        const auto comma = view.find(',');
        double t = 0.0;
        double v = 0.0;
        if (comma == std::string_view::npos || !parse_double(view.substr(0, comma), t) ||
            !parse_double(view.substr(comma + 1), v))
            throw ParseError("non-numeric CSV row '" + std::string(view) + "'", lineno);
        times.push_back(t);
        samples.push_back(v);
    }
    if (samples.size() < 2) throw ParseError("CSV strain needs at least two rows to infer fs", lineno);
    const double span = times.back() - times.front();
    if (!(span > 0.0)) throw ParseError("CSV times must increase", lineno);
    const double fs = static_cast<double>(samples.size() - 1) / span;
    return TimeSeries(fs, times.front(), std::move(samples));
}

}    // namespace

TimeSeries load_strain(const std::filesystem::path& path, StrainFormat format) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open strain file " + path.string());
    return format == StrainFormat::gwx_text ? load_gwx_text(in) : load_csv(in);
}

void save_strain(const TimeSeries& ts, const std::filesystem::path& path, StrainFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write strain file " + path.string());
    std::string body;
    body.reserve(ts.size() * 24 + 64);
    if (format == StrainFormat::gwx_text) {
        body += "# gwx-strain v1\n";
        body += "# fs_hz=" + format_double(ts.fs()) + "\n";
        body += "# t0_s=" + format_double(ts.t0()) + "\n";
        body += "# n=" + std::to_string(ts.size()) + "\n";
        for (double v : ts.samples()) {
            body += format_double(v);
            body += '\n';
        }
    } else {
        body += "t_s,strain\n";
        for (std::size_t i = 0; i < ts.size(); ++i) {
            body += format_double(ts.time_at(i));
            body += ',';
            body += format_double(ts[i]);
            body += '\n';
        }
    }
    out << body;
    if (!out) throw ValidationError("failed writing strain file " + path.string());
}

// ---------------------------------------------------------------------------

TimeSeries slice_window(const TimeSeries& ts, double t_start, double duration) {
    if (!(duration > 0.0)) throw RangeError("window duration must be positive");
    const double half = 0.5 / ts.fs();
    if (t_start < ts.t0() - half || t_start + duration > ts.t0() + ts.duration() + half)
        throw RangeError("window [" + format_double(t_start) + ", " + format_double(t_start + duration) +
                         "] outside series [" + format_double(ts.t0()) + ", " +
                         format_double(ts.t0() + ts.duration()) + "]");
    const auto first = static_cast<long long>(std::llround((t_start - ts.t0()) * ts.fs()));
    const auto count = static_cast<long long>(std::llround(duration * ts.fs()));
    if (first < 0 || count < 1 || first + count > static_cast<long long>(ts.size()))
        throw RangeError("window does not fit the sample grid");
    auto s = ts.samples().subspan(static_cast<std::size_t>(first), static_cast<std::size_t>(count));
    return TimeSeries(ts.fs(), ts.time_at(static_cast<std::size_t>(first)), std::vector<double>(s.begin(), s.end()));
}

double energy(std::span<const double> x) {
    return std::transform_reduce(x.begin(), x.end(), x.begin(), 0.0);
}

double mean(std::span<const double> x) {
    if (x.empty()) return 0.0;
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double std_dev(std::span<const double> x) {
    if (x.empty()) return 0.0;
    const double m = mean(x);
    double acc = 0.0;
    for (double v : x) acc += (v - m) * (v - m);
    return std::sqrt(acc / static_cast<double>(x.size()));
}

TimeSeries normalize_unit_energy(const TimeSeries& ts) {
    const double e = energy(ts.samples());
    if (!(e > 0.0)) throw DegenerateError("cannot normalize an all-zero window");
    const double scale = 1.0 / std::sqrt(e);
    std::vector<double> out(ts.samples().begin(), ts.samples().end());
    for (auto& v : out) v *= scale;
    return ts.with_samples(std::move(out));
}

ComplexSpectrum forward_spectrum(const TimeSeries& ts, SpectrumConvention convention) {
    if (ts.size() < 2) throw ShapeError("forward transform needs at least two samples");
    ComplexSpectrum sp;
    sp.df = ts.fs() / static_cast<double>(ts.size());
    sp.convention = convention;
    sp.series_len = ts.size();
    sp.t0 = ts.t0();
    if (convention == SpectrumConvention::one_sided) {
        sp.bins = fft::rfft(ts.samples());
    } else {
        std::vector<cplx> x(ts.samples().begin(), ts.samples().end());
        sp.bins = fft::fft(x);
    }
    for (auto& b : sp.bins) b *= ts.dt();
    return sp;
}

TimeSeries inverse_spectrum(const ComplexSpectrum& sp) {
    const auto n = sp.series_len;
    if (!(sp.df > 0.0)) throw ShapeError("spectrum has non-positive bin spacing");
    const auto expected = sp.convention == SpectrumConvention::one_sided ? n / 2 + 1 : n;
    if (n < 2 || sp.bins.size() != expected)
        throw ShapeError("spectrum has " + std::to_string(sp.bins.size()) + " bins, expected " +
                         std::to_string(expected) + " for series length " + std::to_string(n));
    const double fs = sp.df * static_cast<double>(n);
    const double inv_dt = fs;
    std::vector<double> out;
    if (sp.convention == SpectrumConvention::one_sided) {
        out = fft::irfft(sp.bins, n);
    } else {
        auto c = fft::ifft(sp.bins);
        out.resize(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = c[i].real();
    }
    for (auto& v : out) v *= inv_dt;
    return TimeSeries(fs, sp.t0, std::move(out));
}

std::vector<double> make_window(WindowKind kind, std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (n < 2 || kind == WindowKind::rect) return w;
    const double denom = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = 2.0 * std::numbers::pi * static_cast<double>(i) / denom;
        w[i] = kind == WindowKind::hann ? 0.5 - 0.5 * std::cos(x) : 0.42 - 0.5 * std::cos(x) + 0.08 * std::cos(2.0 * x);
    }
    return w;
}

PowerSpectrum welch_psd(const TimeSeries& ts, const WelchOptions& opts) {
    std::size_t seg = opts.segment_len;
    if (seg == 0) seg = static_cast<std::size_t>(std::llround(4.0 * ts.fs()));
    if (seg < 2) throw ParameterError("Welch segment length must be at least 2");
    if (seg > ts.size())
        throw ParameterError("Welch segment length " + std::to_string(seg) + " exceeds series length " +
                             std::to_string(ts.size()));
    if (!(opts.overlap >= 0.0 && opts.overlap < 1.0)) throw ParameterError("Welch overlap must be in [0, 1)");

    const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(seg * (1.0 - opts.overlap))));
    const auto window = make_window(opts.window, seg);
    const double wss = energy(window);
    const std::size_t nbins = seg / 2 + 1;
    std::vector<double> acc(nbins, 0.0);
    std::vector<double> buf(seg);
    std::size_t count = 0;
    const auto x = ts.samples();
    for (std::size_t start = 0; start + seg <= x.size(); start += hop) {
        for (std::size_t i = 0; i < seg; ++i) buf[i] = x[start + i] * window[i];
        const auto spec = fft::rfft(buf);
        for (std::size_t k = 0; k < nbins; ++k) acc[k] += std::norm(spec[k]);
        ++count;
    }
    const double scale = 1.0 / (ts.fs() * wss * static_cast<double>(count));
    for (std::size_t k = 0; k < nbins; ++k) {
        const bool edge = k == 0 || (seg % 2 == 0 && k == nbins - 1);
        acc[k] *= scale * (edge ? 1.0 : 2.0);
    }
    return PowerSpectrum(ts.fs() / static_cast<double>(seg), std::move(acc));
}

std::vector<cplx> analytic_signal(std::span<const double> x) {
    const auto n = x.size();
    std::vector<cplx> spec(n);
    {
        const auto half = fft::rfft(x);
        for (std::size_t k = 0; k < half.size(); ++k) spec[k] = half[k];
    }
    // keep DC (and Nyquist for even n), double positive frequencies, zero the rest
    for (std::size_t k = 1; k < n; ++k) {
        if (2 * k < n)
            spec[k] *= 2.0;
        else if (2 * k > n)
            spec[k] = 0.0;
    }
    return fft::ifft(spec);
}

}    // namespace gwx
