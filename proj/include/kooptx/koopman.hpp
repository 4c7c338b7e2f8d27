#pragma once

#include <complex>
#include <string>
#include <vector>

#include "kooptx/dictionary.hpp"
#include "kooptx/mat.hpp"

namespace kooptx {

struct KoopmanModel {
    Mat K;  // M x M operator on the lifted space
    // Sorted by descending |λ|, ties by descending Re, then Im >= 0 first.
    std::vector<std::complex<double>> eigvals;
    std::vector<std::complex<double>> eigvecs;  // row-major M x M, columns follow eigvals
    Mat C;                                      // 1 x M readout to the scalar state
    Dictionary dict;
    double dt = 0.0;  // seconds per step
    int svd_rank = 0;
    double ridge_reg = 0.0;
    int effective_rank = 0;  // rank actually used after the numerical-rank floor

    size_t dim() const { return K.rows; }
};

// The rank-independent half of an EDMD solve: spectral decomposition of the
// data Gram matrix Ψ(H)Ψ(H)ᵀ plus the cross products needed to finish the
// fit for any (svd_rank, ridge) afterwards. The ablation grid shares one of
// these across its three rank settings.
struct EdmdGram {
    Dictionary dict;
    Mat u;                      // M x M eigenvectors of the Gram matrix, by descending σ
    std::vector<double> sigma;  // singular values of Ψ(H), descending
    Mat a;                      // Ψ(H')Ψ(H)ᵀ
    std::vector<double> x_psi;  // (first state row of H)·Ψ(H)ᵀ
    double dt = 0.0;
    size_t n_pairs = 0;
};

EdmdGram edmd_gram(const std::vector<double>& window, double fs,
                   const DictionaryConfig& cfg);
KoopmanModel edmd_finalize(const EdmdGram& gram, int svd_rank, double ridge_reg);

// gram + finalize in one call: least squares min ‖Ψ(H′) − KΨ(H)‖² + ridge‖K‖²
// on the SVD basis truncated to min(svd_rank, numerical rank at 1e-10·σmax).
KoopmanModel edmd_fit(const std::vector<double>& window, double fs,
                      const DictionaryConfig& cfg, int svd_rank, double ridge_reg);

// Sorted spectrum (reduced-operator eigenvalues plus the structural zeros of
// the truncated directions) without forming K or eigenvectors.
std::vector<std::complex<double>> edmd_eigvals(const EdmdGram& gram, int svd_rank,
                                               double ridge_reg);

// Per retained mode: (Re λ, Im λ, |λ|, ln|λ|/dt), top_k modes by the model's
// eigenvalue order, zero-padded when the model has fewer than top_k modes.
// Growth of a numerically zero mode is floored at ln(1e-12)/dt.
std::vector<double> spectrum_features(const KoopmanModel& model, int top_k);
std::vector<double> features_from_eigvals(
    const std::vector<std::complex<double>>& sorted_eigvals, double dt, int top_k);

struct ReconResult {
    std::vector<double> samples;
    bool used_fallback = false;  // eigenbasis cond > 1e12 → iterated K instead
};

// output[t] = C Kᵗ Ψ(h0) for t = 0..steps-1, evaluated through the
// eigendecomposition when it is well conditioned.
ReconResult reconstruct(const KoopmanModel& model, const std::vector<double>& window,
                        int steps);

// |b_k|·|λ_k|ᵗ·|C v_k| for the top min(svd_rank, M) modes (rows follow
// model.eigvals order), t over the window's embedded steps. Computed through
// the eigenbasis regardless of conditioning — rows from a near-defective
// basis are numerically meaningless but defined.
Mat mode_amplitudes(const KoopmanModel& model, const std::vector<double>& window);

// Signed complex contribution (C v_k)·b_k of every mode; summing the real
// parts over all M modes reproduces reconstruct(...)[0].
std::vector<std::complex<double>> mode_coefficients(const KoopmanModel& model,
                                                    const std::vector<double>& window);

struct ReconError {
    double rmse = 0.0;
    double nrmse = 0.0;  // rmse / population std of the original
    double max_abs = 0.0;
};
ReconError reconstruction_error(const std::vector<double>& original,
                                const std::vector<double>& reconstructed);

// Lossless JSON round-trip of a fitted model.
void save_model_json(const KoopmanModel& model, const std::string& path);
KoopmanModel load_model_json(const std::string& path);

}  // namespace kooptx
