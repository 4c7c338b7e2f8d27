#include "kooptx/wavelet.hpp"

#include <cmath>
#include <numbers>

#include "kooptx/errors.hpp"

namespace kooptx {

namespace {

// Published orthogonal reconstruction low-pass taps; analysis filters are
// derived below (dec_lo = reversed rec_lo, dec_hi[j] = (-1)^j rec_lo[j]).
const double kDb4RecLo[8] = {
    0.23037781330885523,  0.7148465705525415,   0.6308807679295904,
    -0.02798376941698385, -0.18703481171888114, 0.030841381835986965,
    0.032883011666982945, -0.010597401784997278};

const double kHaarRecLo[2] = {std::numbers::sqrt2 / 2.0, std::numbers::sqrt2 / 2.0};

struct FilterPair {
    std::vector<double> lo, hi;  // analysis filters
};

FilterPair analysis_filters(WaveletFamily family) {
    const double* rec = family == WaveletFamily::Haar ? kHaarRecLo : kDb4RecLo;
    const int L = wavelet_filter_length(family);
    FilterPair f;
    f.lo.resize(L);
    f.hi.resize(L);
    for (int j = 0; j < L; ++j) {
        f.lo[j] = rec[L - 1 - j];
        f.hi[j] = (j % 2 == 0 ? 1.0 : -1.0) * rec[j];
    }
    return f;
}

void validate_spec(const WaveletSpec& spec, size_t len) {
    if (spec.levels < 1) throw ConfigError("wavelet: levels must be >= 1");
    const int L = wavelet_filter_length(spec.family);
    if (len < static_cast<size_t>(L))
        throw DataError("wavelet: window shorter than the filter");
    const int max_levels = static_cast<int>(
        std::floor(std::log2(static_cast<double>(len) / (L - 1))));
    if (spec.levels > max_levels)
        throw ConfigError("wavelet: too many levels for this window length");
    if (len % (1ull << spec.levels) != 0)
        throw DataError("wavelet: length must be a multiple of 2^levels");
}

}  // namespace

int wavelet_filter_length(WaveletFamily family) {
    return family == WaveletFamily::Haar ? 2 : 8;
}

WaveletDecomposition dwt(const std::vector<double>& window, const WaveletSpec& spec) {
    validate_spec(spec, window.size());
    const auto f = analysis_filters(spec.family);
    const size_t L = f.lo.size();

    WaveletDecomposition out;
    out.details.resize(spec.levels);
    std::vector<double> x = window;
    for (int lev = 0; lev < spec.levels; ++lev) {
        const size_t n = x.size();
        std::vector<double> a(n / 2), d(n / 2);
        for (size_t i = 0; i < n / 2; ++i) {
            double sa = 0.0, sd = 0.0;
            for (size_t j = 0; j < L; ++j) {
                const double v = x[(2 * i + j) % n];
                sa += f.lo[j] * v;
                sd += f.hi[j] * v;
            }
            a[i] = sa;
            d[i] = sd;
        }
        // finest band ends up at details.back()
        out.details[spec.levels - 1 - lev] = std::move(d);
        x = std::move(a);
    }
    out.approx = std::move(x);
    return out;
}

std::vector<double> idwt(const WaveletDecomposition& decomp, const WaveletSpec& spec) {
    if (decomp.details.size() != static_cast<size_t>(spec.levels))
        throw DataError("idwt: level count does not match the spec");
    size_t expect = decomp.approx.size();
    for (const auto& d : decomp.details) {
        if (d.size() != expect)
            throw DataError("idwt: band lengths do not chain dyadically");
        expect *= 2;
    }

    const auto f = analysis_filters(spec.family);
    const size_t L = f.lo.size();
    std::vector<double> x = decomp.approx;
    for (const auto& d : decomp.details) {
        const size_t half = x.size();
        std::vector<double> up(2 * half, 0.0);
        for (size_t i = 0; i < half; ++i)
            for (size_t j = 0; j < L; ++j) {
                const size_t idx = (2 * i + j) % (2 * half);
                up[idx] += f.lo[j] * x[i] + f.hi[j] * d[i];
            }
        x = std::move(up);
    }
    validate_spec(spec, x.size());  // reconstructed length must be dwt-legal
    return x;
}

std::vector<double> wavelet_features(const WaveletDecomposition& decomp) {
    std::vector<double> out;
    out.reserve(4 * (decomp.details.size() + 1));
    auto band_stats = [&out](const std::vector<double>& b) {
        double energy = 0.0, mean = 0.0, mx = 0.0;
        for (double v : b) {
            energy += v * v;
            mean += v;
            mx = std::max(mx, std::fabs(v));
        }
        mean /= static_cast<double>(b.size());
        double var = 0.0;
        for (double v : b) var += (v - mean) * (v - mean);
        var /= static_cast<double>(b.size());
        out.push_back(std::log(std::max(energy, 1e-12)));
        out.push_back(mean);
        out.push_back(std::sqrt(var));
        out.push_back(mx);
    };
    band_stats(decomp.approx);
    for (const auto& d : decomp.details) band_stats(d);
    return out;
}

std::vector<double> wavelet_window_features(const std::vector<double>& window,
                                            const WaveletSpec& spec) {
    if (spec.levels < 1) throw ConfigError("wavelet: levels must be >= 1");
    const size_t block = 1ull << spec.levels;
    const size_t keep = (window.size() / block) * block;
    if (keep == 0) throw DataError("wavelet: window shorter than 2^levels");
    return wavelet_features(dwt({window.begin(), window.begin() + keep}, spec));
}

}  // namespace kooptx
