#pragma once

#include <string>
#include <vector>

#include "kooptx/koopman.hpp"
#include "kooptx/mat.hpp"

namespace kooptx {

// Eigenvalue scatter in the complex plane over a dashed unit circle, axes
// fixed to [-1.2, 1.2] in both directions. Eigenvalues outside that frame
// are clamped to its edge and flagged with an overflow chevron.
void emit_eigen_plot(const KoopmanModel& model, const std::string& path);

// Row-per-mode amplitude heatmap, linear grayscale from 0 (black) to the
// matrix maximum (white).
void emit_mode_heatmap(const Mat& amps, const std::string& path);

// Original and reconstructed traces overlaid against time in seconds, with
// a legend and the NRMSE in the figure title.
void emit_reconstruction_overlay(const std::vector<double>& original,
                                 const std::vector<double>& reconstructed, double fs,
                                 const std::string& path);

}  // namespace kooptx
