#include "kooptx/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "kooptx/errors.hpp"
#include "kooptx/kernels.hpp"

namespace kooptx {

namespace {

void require_valid(const Signal& s, const char* op) {
    if (s.samples.empty()) throw DataError(std::string(op) + ": empty signal");
    if (!(s.fs > 0.0)) throw DataError(std::string(op) + ": non-positive fs");
}

}  // namespace

Signal resample(const Signal& s, double target_fs) {
    require_valid(s, "resample");
    if (!(target_fs > 0.0)) throw ConfigError("resample: target_fs must be positive");

    const size_t n = s.samples.size();
    const auto n_out = static_cast<size_t>(
        std::llround(static_cast<double>(n) * target_fs / s.fs));
    if (n_out == 0) throw DataError("resample: output would be empty");

    Signal out;
    out.fs = target_fs;
    out.samples.resize(n_out);
    const double step = s.fs / target_fs;  // input-index distance per output sample
    for (size_t i = 0; i < n_out; ++i) {
        const double pos = static_cast<double>(i) * step;
        const auto i0 = static_cast<size_t>(pos);
        if (i0 >= n - 1) {
            out.samples[i] = s.samples[n - 1];
        } else {
            const double frac = pos - static_cast<double>(i0);
            out.samples[i] = s.samples[i0] * (1.0 - frac) + s.samples[i0 + 1] * frac;
        }
    }
    return out;
}

Signal zscore(const Signal& s) {
    require_valid(s, "zscore");
    const size_t n = s.samples.size();
    if (n < 2) throw DataError("zscore: need at least 2 samples");

    const auto& k = kernels::active();
    const double mean = k.sum(s.samples.data(), n) / static_cast<double>(n);
    double var = 0.0;
    for (double x : s.samples) {
        const double d = x - mean;
        var += d * d;
    }
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    if (sd == 0.0) throw DataError("zscore: constant signal has no scale");

    Signal out;
    out.fs = s.fs;
    out.samples.resize(n);
    const double inv = 1.0 / sd;
    for (size_t i = 0; i < n; ++i) out.samples[i] = (s.samples[i] - mean) * inv;
    return out;
}

WindowSet segment(const Signal& s, double window_sec, double stride_sec) {
    require_valid(s, "segment");
    const auto w = static_cast<long long>(std::llround(window_sec * s.fs));
    const auto st = static_cast<long long>(std::llround(stride_sec * s.fs));
    if (w < 2) throw ConfigError("segment: window must cover at least 2 samples");
    if (st < 1) throw ConfigError("segment: stride must cover at least 1 sample");

    const auto n = static_cast<long long>(s.samples.size());
    if (n < w) throw DataError("segment: signal shorter than one window");

    WindowSet out;
    out.window_len = static_cast<size_t>(w);
    out.stride = static_cast<size_t>(st);
    out.source_fs = s.fs;
    const long long count = (n - w) / st + 1;
    out.windows.reserve(static_cast<size_t>(count));
    for (long long c = 0; c < count; ++c) {
        const auto* base = s.samples.data() + c * st;
        out.windows.emplace_back(base, base + w);
    }
    return out;
}

Signal read_signal_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line != "t,value") throw DataError(path + ": expected header `t,value`");

    std::vector<double> t, v;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n'))
            line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw DataError(path + ":" + std::to_string(lineno) + ": expected `t,value` row");
        try {
            t.push_back(std::stod(line.substr(0, comma)));
            v.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw DataError(path + ":" + std::to_string(lineno) + ": unparseable number");
        }
    }
    if (t.size() < 2) throw DataError(path + ": need at least 2 samples");

    std::vector<double> dt(t.size() - 1);
    for (size_t i = 0; i + 1 < t.size(); ++i) dt[i] = t[i + 1] - t[i];
    auto sorted = dt;
    std::sort(sorted.begin(), sorted.end());
    const size_t m = sorted.size();
    const double med = (m % 2 == 1) ? sorted[m / 2]
                                    : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    if (!(med > 0.0)) throw DataError(path + ": non-increasing timestamps");
    for (double d : dt)
        if (std::fabs(d - med) > 0.01 * med)
            throw DataError(path + ": sampling is not uniform within 1%");

    return Signal{std::move(v), 1.0 / med};
}

void write_signal_csv(const std::string& path, const Signal& s) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw DataError("cannot write " + path);
    std::fputs("t,value\n", f);
    for (size_t i = 0; i < s.samples.size(); ++i)
        std::fprintf(f, "%.17g,%.17g\n", static_cast<double>(i) / s.fs, s.samples[i]);
    std::fclose(f);
}

}  // namespace kooptx
