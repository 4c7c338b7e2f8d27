#pragma once

#include <cstdint>
#include <vector>

#include "kooptx/mat.hpp"

namespace kooptx {

struct DictionaryConfig {
    int delay = 8;          // delay-embedding dimension
    int poly_deg = 2;       // max total degree of monomial observables
    int rbf_centers = 0;    // number of Gaussian RBF observables
    double rbf_sigma = 0.3; // RBF bandwidth (used when rbf_centers > 0)
    uint64_t center_seed = 0;
};

// Observable dictionary: constant + monomials + Gaussian RBFs centred on
// sampled snapshot columns.
struct Dictionary {
    DictionaryConfig config;
    std::vector<std::vector<int>> exponents;      // graded-lex, degree 1..poly_deg
    std::vector<std::vector<double>> centers;     // rbf_centers vectors of length delay
    size_t size() const { return 1 + exponents.size() + centers.size(); }
};

// Hankel lifting, newest-first: column j = [x_{j+d-1}, ..., x_j], giving
// delay x (N - delay + 1) snapshots.
Mat delay_embed(const std::vector<double>& window, int delay);

// Exponent vectors of all monomials over `dims` variables with total degree
// 1..max_deg, in graded lexicographic order (degree first, then index-tuple
// lex order).
std::vector<std::vector<int>> monomial_exponents(int dims, int max_deg);

// Centers are rbf_centers distinct snapshot columns drawn without
// replacement using config.center_seed; deterministic.
Dictionary build_dictionary(const DictionaryConfig& config, const Mat& snapshots);

// Evaluate all observables on each snapshot column: row 0 = 1, then
// monomials in graded-lex order, then exp(-|z - c|^2 / (2 sigma^2)) per
// center. Result is M x n_snapshots.
Mat lift(const Dictionary& dict, const Mat& snapshots);

}  // namespace kooptx
