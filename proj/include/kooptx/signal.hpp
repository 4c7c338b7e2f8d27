#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace kooptx {

// Uniformly sampled single-lead signal.
struct Signal {
    std::vector<double> samples;
    double fs = 0.0;  // Hz
};

// Fixed-length overlapping windows cut from one signal.
struct WindowSet {
    std::vector<std::vector<double>> windows;
    size_t window_len = 0;
    size_t stride = 0;  // samples between window starts
    double source_fs = 0.0;
};

// Linear-interpolation resample. Output length = round(len * target_fs / fs);
// exact on constants and on piecewise-linear content.
Signal resample(const Signal& s, double target_fs);

// Zero-mean / unit-population-std rescale. Constant input is refused rather
// than divided by zero.
Signal zscore(const Signal& s);

// Cut floor((N - W)/S) + 1 windows of W = round(window_sec*fs) samples every
// S = round(stride_sec*fs) samples; a trailing partial window is discarded.
WindowSet segment(const Signal& s, double window_sec, double stride_sec);

// CSV exchange format: header `t,value`, one sample per row. The sampling
// rate is inferred from the median time step; rows whose spacing deviates
// from it by more than 1% make the file unusable and are rejected.
Signal read_signal_csv(const std::string& path);
void write_signal_csv(const std::string& path, const Signal& s);

}  // namespace kooptx
