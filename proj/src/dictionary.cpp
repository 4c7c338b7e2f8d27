#include "kooptx/dictionary.hpp"

#include <cmath>

#include "kooptx/errors.hpp"
#include "kooptx/kernels.hpp"
#include "kooptx/rng.hpp"

namespace kooptx {

namespace {

void validate_config(const DictionaryConfig& c) {
    if (c.delay < 1) throw ConfigError("dictionary: delay must be >= 1");
    if (c.poly_deg < 1) throw ConfigError("dictionary: poly_deg must be >= 1");
    if (c.rbf_centers < 0) throw ConfigError("dictionary: rbf_centers must be >= 0");
    if (c.rbf_centers > 0 && !(c.rbf_sigma > 0.0))
        throw ConfigError("dictionary: rbf_sigma must be positive when RBFs are used");
}

}  // namespace

Mat delay_embed(const std::vector<double>& window, int delay) {
    if (delay < 1) throw ConfigError("delay_embed: delay must be >= 1");
    const size_t n = window.size();
    if (n < static_cast<size_t>(delay) + 1)
        throw DataError("delay_embed: window shorter than delay + 1");

    const size_t cols = n - delay + 1;
    Mat s(static_cast<size_t>(delay), cols);
    for (size_t j = 0; j < cols; ++j)
        for (int i = 0; i < delay; ++i)
            s(static_cast<size_t>(i), j) = window[j + delay - 1 - i];
    return s;
}

std::vector<std::vector<int>> monomial_exponents(int dims, int max_deg) {
    std::vector<std::vector<int>> out;
    std::vector<int> combo;  // non-decreasing variable indices
    auto emit = [&]() {
        std::vector<int> e(dims, 0);
        for (int v : combo) ++e[v];
        out.push_back(std::move(e));
    };
    // lexicographic multisets of size deg over {0..dims-1}
    auto rec = [&](auto&& self, int start, int remaining) -> void {
        if (remaining == 0) {
            emit();
            return;
        }
        for (int v = start; v < dims; ++v) {
            combo.push_back(v);
            self(self, v, remaining - 1);
            combo.pop_back();
        }
    };
    for (int deg = 1; deg <= max_deg; ++deg) rec(rec, 0, deg);
    return out;
}

Dictionary build_dictionary(const DictionaryConfig& config, const Mat& snapshots) {
    validate_config(config);
    if (snapshots.rows != static_cast<size_t>(config.delay))
        throw DataError("build_dictionary: snapshot rows != delay");
    if (snapshots.cols < static_cast<size_t>(std::max(1, config.rbf_centers)))
        throw DataError("build_dictionary: more RBF centers than snapshot columns");

    Dictionary dict;
    dict.config = config;
    dict.exponents = monomial_exponents(config.delay, config.poly_deg);

    if (config.rbf_centers > 0) {
        // partial Fisher–Yates: first rbf_centers slots of a virtual shuffle
        Rng rng(config.center_seed);
        std::vector<size_t> idx(snapshots.cols);
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (int i = 0; i < config.rbf_centers; ++i) {
            const size_t j = i + static_cast<size_t>(rng.below(idx.size() - i));
            std::swap(idx[i], idx[j]);
        }
        dict.centers.reserve(config.rbf_centers);
        for (int i = 0; i < config.rbf_centers; ++i) {
            std::vector<double> c(config.delay);
            for (int row = 0; row < config.delay; ++row)
                c[row] = snapshots(static_cast<size_t>(row), idx[i]);
            dict.centers.push_back(std::move(c));
        }
    }
    return dict;
}

Mat lift(const Dictionary& dict, const Mat& snapshots) {
    const auto& cfg = dict.config;
    if (snapshots.rows != static_cast<size_t>(cfg.delay))
        throw DataError("lift: snapshot rows != delay");

    const size_t n = snapshots.cols;
    const size_t m = dict.size();
    Mat psi(m, n);

    for (size_t j = 0; j < n; ++j) psi(0, j) = 1.0;

    size_t row = 1;
    for (const auto& e : dict.exponents) {
        double* out = psi.row(row++);
        for (size_t j = 0; j < n; ++j) {
            double p = 1.0;
            for (int v = 0; v < cfg.delay; ++v)
                for (int k = 0; k < e[v]; ++k) p *= snapshots(static_cast<size_t>(v), j);
            out[j] = p;
        }
    }

    const auto& k = kernels::active();
    const double inv2s2 =
        cfg.rbf_centers > 0 ? 1.0 / (2.0 * cfg.rbf_sigma * cfg.rbf_sigma) : 0.0;
    std::vector<double> col(cfg.delay);
    for (const auto& c : dict.centers) {
        double* out = psi.row(row++);
        for (size_t j = 0; j < n; ++j) {
            for (int v = 0; v < cfg.delay; ++v) col[v] = snapshots(static_cast<size_t>(v), j);
            out[j] = std::exp(-k.sq_dist(col.data(), c.data(), col.size()) * inv2s2);
        }
    }
    return psi;
}

}  // namespace kooptx
