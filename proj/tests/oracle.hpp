#pragma once

// Rule-based rhythm oracle used by the tests: peak detection plus two
// measurements (RR spread, QRS width) that separate the four synthetic
// classes. Kept out of the library on purpose — production code must not
// depend on the thing that grades it.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace oracle {

inline std::vector<size_t> rpeaks(const std::vector<double>& x, double fs) {
    const double thr = 0.62 * *std::max_element(x.begin(), x.end());
    std::vector<size_t> pk;
    for (size_t i = 1; i + 1 < x.size(); ++i) {
        if (x[i] >= thr && x[i] >= x[i - 1] && x[i] >= x[i + 1]) {
            if (pk.empty() || static_cast<double>(i - pk.back()) / fs > 0.28)
                pk.push_back(i);
            else if (x[i] > x[pk.back()])
                pk.back() = i;  // refractory window keeps the taller peak
        }
    }
    return pk;
}

// Median width of the peaks at 65% of each peak's own height, each side
// capped at 0.60 s so fused/plateaued shapes saturate instead of diverging.
inline double qrs_width(const std::vector<double>& x, double fs,
                        const std::vector<size_t>& pk) {
    std::vector<double> ws;
    const auto cap = static_cast<size_t>(0.60 * fs);
    for (size_t p : pk) {
        const double lev = 0.65 * x[p];
        size_t l = p, r = p;
        while (l > 0 && x[l] > lev && p - l < cap) --l;
        while (r < x.size() - 1 && x[r] > lev && r - p < cap) ++r;
        ws.push_back(static_cast<double>(r - l) / fs);
    }
    std::sort(ws.begin(), ws.end());
    const size_t m = ws.size();
    return (m % 2 == 1) ? ws[m / 2] : 0.5 * (ws[m / 2 - 1] + ws[m / 2]);
}

// Population coefficient of variation of the RR intervals.
inline double rr_cv(const std::vector<size_t>& pk, double fs) {
    std::vector<double> rr;
    for (size_t i = 1; i < pk.size(); ++i)
        rr.push_back(static_cast<double>(pk[i] - pk[i - 1]) / fs);
    double mean = 0.0;
    for (double r : rr) mean += r;
    mean /= static_cast<double>(rr.size());
    double var = 0.0;
    for (double r : rr) var += (r - mean) * (r - mean);
    var /= static_cast<double>(rr.size());
    return std::sqrt(var) / mean;
}

inline std::string classify(const std::vector<double>& x, double fs) {
    const auto pk = rpeaks(x, fs);
    if (pk.size() < 3) return "?";
    const double cv = rr_cv(pk, fs);
    if (qrs_width(x, fs, pk) > 0.42) return "ventricular";
    if (cv < 0.10) return "normal";
    if (cv < 0.28) return "afib";
    return "block";
}

}  // namespace oracle
