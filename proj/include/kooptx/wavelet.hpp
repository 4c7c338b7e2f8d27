#pragma once

#include <vector>

namespace kooptx {

enum class WaveletFamily { Haar, DB4 };

struct WaveletSpec {
    WaveletFamily family = WaveletFamily::DB4;
    int levels = 4;
};

// Output of a dyadic analysis cascade. details[0] is the coarsest detail
// band, details.back() the finest; approx is the coarsest approximation.
struct WaveletDecomposition {
    std::vector<double> approx;
    std::vector<std::vector<double>> details;
};

int wavelet_filter_length(WaveletFamily family);

// Analysis cascade with periodic boundary extension:
//   a[i] = sum_j h[j] * x[(2i+j) mod N],  d[i] = sum_j g[j] * x[(2i+j) mod N]
// repeated `levels` times on the approximation. Requires the window length to
// be a multiple of 2^levels so every stage stays even, and levels within
// floor(log2(len / (filter_len - 1))).
WaveletDecomposition dwt(const std::vector<double>& window, const WaveletSpec& spec);

// Exact inverse of dwt for these orthogonal families (transpose of the
// analysis operator). The decomposition's band lengths must chain dyadically
// or it is rejected as not having come from dwt with this spec.
std::vector<double> idwt(const WaveletDecomposition& decomp, const WaveletSpec& spec);

// Per-band summary [log-energy, mean, std, max-abs], approx first then
// details coarsest-to-finest; length 4*(levels+1). Energies are floored at
// 1e-12 before the log so silent bands stay finite.
std::vector<double> wavelet_features(const WaveletDecomposition& decomp);

// Convenience used by the feature pipeline: truncate the window to the
// largest multiple of 2^levels (250-sample windows become 240 at the default
// 4 levels), then dwt + wavelet_features.
std::vector<double> wavelet_window_features(const std::vector<double>& window,
                                            const WaveletSpec& spec);

}  // namespace kooptx
