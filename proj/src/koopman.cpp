#include "kooptx/koopman.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>

#include "kooptx/errors.hpp"
#include "kooptx/kernels.hpp"

namespace kooptx {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_finite(const Mat& m, const char* what) {
    for (double v : m.data)
        if (!std::isfinite(v))
            throw NumericError(std::string("edmd: non-finite values in ") + what);
}

// Model eigenvalue order: descending |λ|, then descending Re, then Im >= 0
// before Im < 0. Returns the permutation, not the sorted values.
std::vector<size_t> eig_order(const std::vector<std::complex<double>>& vals) {
    std::vector<double> mag(vals.size());
    for (size_t i = 0; i < vals.size(); ++i) mag[i] = std::abs(vals[i]);
    std::vector<size_t> idx(vals.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        if (mag[a] != mag[b]) return mag[a] > mag[b];
        if (vals[a].real() != vals[b].real()) return vals[a].real() > vals[b].real();
        return (vals[a].imag() >= 0.0) && (vals[b].imag() < 0.0);
    });
    return idx;
}

// Shared tail of the reconstruction paths: the eigenbasis as an Eigen matrix,
// the lifted initial state, its modal expansion b = V⁻¹ψ0, and the per-mode
// readout C·V.
struct ModalExpansion {
    Eigen::VectorXcd b;
    Eigen::RowVectorXcd cv;
    double cond = 0.0;
    Eigen::VectorXd psi0;
};

ModalExpansion expand_initial_state(const KoopmanModel& model,
                                    const std::vector<double>& window) {
    const auto d = static_cast<size_t>(model.dict.config.delay);
    if (window.size() < d) throw DataError("reconstruct: window shorter than delay");

    Mat h0(d, 1);
    for (size_t i = 0; i < d; ++i) h0(i, 0) = window[d - 1 - i];
    const Mat psi = lift(model.dict, h0);
    const size_t m = model.dim();

    Eigen::MatrixXcd v(m, m);
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < m; ++j) v(i, j) = model.eigvecs[i * m + j];

    ModalExpansion ex;
    ex.psi0 = Eigen::VectorXd(m);
    for (size_t i = 0; i < m; ++i) ex.psi0(i) = psi(i, 0);

    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(v);
    const double smin = svd.singularValues()(m - 1);
    ex.cond = smin > 0.0 ? svd.singularValues()(0) / smin
                         : std::numeric_limits<double>::infinity();

    ex.b = v.partialPivLu().solve(ex.psi0.cast<std::complex<double>>());
    Eigen::RowVectorXcd c(m);
    for (size_t j = 0; j < m; ++j) c(j) = model.C(0, j);
    ex.cv = c * v;
    return ex;
}

}  // namespace

EdmdGram edmd_gram(const std::vector<double>& window, double fs,
                   const DictionaryConfig& cfg) {
    if (!(fs > 0.0)) throw ConfigError("edmd: fs must be positive");

    const Mat s = delay_embed(window, cfg.delay);
    EdmdGram gram;
    gram.dict = build_dictionary(cfg, s);
    gram.dt = 1.0 / fs;

    const size_t m = gram.dict.size();
    const size_t n = s.cols - 1;  // snapshot pairs
    if (n < m)
        throw DataError("edmd: underdetermined fit — window yields " +
                        std::to_string(s.cols) + " snapshots for dictionary size " +
                        std::to_string(m));
    gram.n_pairs = n;

    Mat sx(s.rows, n), sy(s.rows, n);
    for (size_t i = 0; i < s.rows; ++i)
        for (size_t j = 0; j < n; ++j) {
            sx(i, j) = s(i, j);
            sy(i, j) = s(i, j + 1);
        }

    const Mat psix = lift(gram.dict, sx);
    const Mat psiy = lift(gram.dict, sy);
    check_finite(psix, "the lifted snapshots");
    check_finite(psiy, "the lifted successor snapshots");

    const auto& k = kernels::active();
    Mat g(m, m);
    k.gemm_nt(psix.data.data(), psix.data.data(), g.data.data(), m, n, m, false);
    gram.a = Mat(m, m);
    k.gemm_nt(psiy.data.data(), psix.data.data(), gram.a.data.data(), m, n, m, false);

    gram.x_psi.resize(m);
    for (size_t i = 0; i < m; ++i)
        gram.x_psi[i] = k.dot(psix.row(i), sx.row(0), n);

    const Eigen::Map<const RowMat> ge(g.data.data(), m, m);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ge);
    if (es.info() != Eigen::Success)
        throw NumericError("edmd: Gram eigendecomposition failed");

    gram.u = Mat(m, m);
    gram.sigma.resize(m);
    for (size_t c = 0; c < m; ++c) {
        const size_t src = m - 1 - c;  // ascending → descending
        gram.sigma[c] = std::sqrt(std::max(es.eigenvalues()(src), 0.0));
        for (size_t r = 0; r < m; ++r) gram.u(r, c) = es.eigenvectors()(r, src);
    }
    return gram;
}

namespace {

// Effective rank plus the pieces every finalize/eigvals call needs.
struct ReducedFit {
    size_t r = 0;
    Mat ur;      // M x r
    Mat b;       // M x r : Ψy V Σ/(Σ²+ridge)  (= A Ur diag(1/(σ²+ridge)))
    Mat ktilde;  // r x r
};

ReducedFit reduce(const EdmdGram& gram, int svd_rank, double ridge_reg) {
    if (svd_rank < 1) throw ConfigError("edmd: svd_rank must be >= 1");
    if (ridge_reg < 0.0) throw ConfigError("edmd: ridge_reg must be >= 0");

    const size_t m = gram.dict.size();
    const double smax = gram.sigma[0];
    if (!(smax > 0.0)) throw NumericError("edmd: lifted data has zero norm");
    size_t numrank = 0;
    while (numrank < m && gram.sigma[numrank] > 1e-10 * smax) ++numrank;

    ReducedFit rf;
    rf.r = std::min<size_t>(svd_rank, numrank);
    const size_t r = rf.r;

    rf.ur = Mat(m, r);
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < r; ++j) rf.ur(i, j) = gram.u(i, j);

    const auto& k = kernels::active();
    rf.b = Mat(m, r);
    k.gemm_nn(gram.a.data.data(), rf.ur.data.data(), rf.b.data.data(), m, m, r, false);
    for (size_t j = 0; j < r; ++j) {
        const double w = 1.0 / (gram.sigma[j] * gram.sigma[j] + ridge_reg);
        for (size_t i = 0; i < m; ++i) rf.b(i, j) *= w;
    }

    rf.ktilde = Mat(r, r);
    k.gemm_tn(rf.ur.data.data(), rf.b.data.data(), rf.ktilde.data.data(), r, m, r,
              false);
    return rf;
}

}  // namespace

KoopmanModel edmd_finalize(const EdmdGram& gram, int svd_rank, double ridge_reg) {
    const ReducedFit rf = reduce(gram, svd_rank, ridge_reg);
    const size_t m = gram.dict.size();
    const size_t r = rf.r;
    const auto& k = kernels::active();

    KoopmanModel model;
    model.dict = gram.dict;
    model.dt = gram.dt;
    model.svd_rank = svd_rank;
    model.ridge_reg = ridge_reg;
    model.effective_rank = static_cast<int>(r);

    model.K = Mat(m, m);
    k.gemm_nt(rf.b.data.data(), rf.ur.data.data(), model.K.data.data(), m, r, m, false);

    // C = (x·Ψᵀ Ur) diag(1/(σ²+ridge)) Urᵀ — annihilates the truncated
    // directions, so the structural zero modes carry no readout.
    model.C = Mat(1, m);
    std::vector<double> t(r);
    for (size_t j = 0; j < r; ++j) {
        double acc = 0.0;
        for (size_t i = 0; i < m; ++i) acc += gram.u(i, j) * gram.x_psi[i];
        t[j] = acc / (gram.sigma[j] * gram.sigma[j] + ridge_reg);
    }
    for (size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (size_t j = 0; j < r; ++j) acc += rf.ur(i, j) * t[j];
        model.C(0, i) = acc;
    }

    Eigen::MatrixXd kt(r, r);
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < r; ++j) kt(i, j) = rf.ktilde(i, j);
    const Eigen::EigenSolver<Eigen::MatrixXd> es(kt);
    if (es.info() != Eigen::Success)
        throw NumericError("edmd: reduced-operator eigendecomposition failed");

    // Lifted eigenvectors: [B·W | U⊥] with eigenvalues [μ | 0]. The U⊥
    // columns are exact null vectors of K = B Urᵀ.
    std::vector<std::complex<double>> vals(m, {0.0, 0.0});
    for (size_t j = 0; j < r; ++j) vals[j] = es.eigenvalues()(j);

    Mat wr(r, r), wi(r, r);
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < r; ++j) {
            wr(i, j) = es.eigenvectors()(i, j).real();
            wi(i, j) = es.eigenvectors()(i, j).imag();
        }
    Mat vr(m, r), vi(m, r);
    k.gemm_nn(rf.b.data.data(), wr.data.data(), vr.data.data(), m, r, r, false);
    k.gemm_nn(rf.b.data.data(), wi.data.data(), vi.data.data(), m, r, r, false);

    const auto order = eig_order(vals);
    model.eigvals.resize(m);
    model.eigvecs.assign(m * m, {0.0, 0.0});
    for (size_t dst = 0; dst < m; ++dst) {
        const size_t src = order[dst];
        model.eigvals[dst] = vals[src];
        if (src < r) {
            for (size_t i = 0; i < m; ++i)
                model.eigvecs[i * m + dst] = {vr(i, src), vi(i, src)};
        } else {
            for (size_t i = 0; i < m; ++i)
                model.eigvecs[i * m + dst] = {gram.u(i, src), 0.0};
        }
    }
    return model;
}

KoopmanModel edmd_fit(const std::vector<double>& window, double fs,
                      const DictionaryConfig& cfg, int svd_rank, double ridge_reg) {
    return edmd_finalize(edmd_gram(window, fs, cfg), svd_rank, ridge_reg);
}

std::vector<std::complex<double>> edmd_eigvals(const EdmdGram& gram, int svd_rank,
                                               double ridge_reg) {
    const ReducedFit rf = reduce(gram, svd_rank, ridge_reg);
    const size_t r = rf.r;

    Eigen::MatrixXd kt(r, r);
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < r; ++j) kt(i, j) = rf.ktilde(i, j);
    const Eigen::EigenSolver<Eigen::MatrixXd> es(kt, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw NumericError("edmd: reduced-operator eigendecomposition failed");

    std::vector<std::complex<double>> vals(gram.dict.size(), {0.0, 0.0});
    for (size_t j = 0; j < r; ++j) vals[j] = es.eigenvalues()(j);
    const auto order = eig_order(vals);
    std::vector<std::complex<double>> sorted(vals.size());
    for (size_t i = 0; i < vals.size(); ++i) sorted[i] = vals[order[i]];
    return sorted;
}

std::vector<double> features_from_eigvals(
    const std::vector<std::complex<double>>& sorted_eigvals, double dt, int top_k) {
    if (top_k < 1) throw ConfigError("spectrum_features: top_k must be >= 1");
    std::vector<double> out;
    out.reserve(4 * static_cast<size_t>(top_k));
    for (int i = 0; i < top_k; ++i) {
        if (static_cast<size_t>(i) < sorted_eigvals.size()) {
            const auto lam = sorted_eigvals[i];
            const double mag = std::abs(lam);
            out.push_back(lam.real());
            out.push_back(lam.imag());
            out.push_back(mag);
            out.push_back(std::log(std::max(mag, 1e-12)) / dt);
        } else {
            out.insert(out.end(), {0.0, 0.0, 0.0, 0.0});  // padding, no growth floor
        }
    }
    return out;
}

std::vector<double> spectrum_features(const KoopmanModel& model, int top_k) {
    return features_from_eigvals(model.eigvals, model.dt, top_k);
}

ReconResult reconstruct(const KoopmanModel& model, const std::vector<double>& window,
                        int steps) {
    if (steps < 1) throw ConfigError("reconstruct: steps must be >= 1");
    const auto ex = expand_initial_state(model, window);
    const size_t m = model.dim();

    ReconResult res;
    res.samples.resize(steps);

    if (!(ex.cond <= 1e12)) {
        // Near-defective eigenbasis: iterate the operator directly.
        res.used_fallback = true;
        const auto& k = kernels::active();
        std::vector<double> v(ex.psi0.data(), ex.psi0.data() + m), next(m);
        for (int t = 0; t < steps; ++t) {
            res.samples[t] = k.dot(model.C.row(0), v.data(), m);
            k.gemm_nn(model.K.data.data(), v.data(), next.data(), m, m, 1, false);
            std::swap(v, next);
        }
        return res;
    }

    std::vector<std::complex<double>> coef(m), p(m, {1.0, 0.0});
    for (size_t j = 0; j < m; ++j) coef[j] = ex.cv(j) * ex.b(j);
    for (int t = 0; t < steps; ++t) {
        double acc = 0.0;
        for (size_t j = 0; j < m; ++j) {
            acc += (coef[j] * p[j]).real();
            p[j] *= model.eigvals[j];
        }
        res.samples[t] = acc;
    }
    return res;
}

Mat mode_amplitudes(const KoopmanModel& model, const std::vector<double>& window) {
    const auto ex = expand_initial_state(model, window);
    const size_t m = model.dim();
    const size_t rows = std::min<size_t>(static_cast<size_t>(model.svd_rank), m);
    const size_t steps = window.size() - model.dict.config.delay + 1;

    Mat amp(rows, steps);
    for (size_t k = 0; k < rows; ++k) {
        const double a0 = std::abs(ex.b(k)) * std::abs(ex.cv(k));
        const double decay = std::abs(model.eigvals[k]);
        double v = a0;
        for (size_t t = 0; t < steps; ++t) {
            amp(k, t) = v;
            v *= decay;
        }
    }
    return amp;
}

std::vector<std::complex<double>> mode_coefficients(const KoopmanModel& model,
                                                    const std::vector<double>& window) {
    const auto ex = expand_initial_state(model, window);
    std::vector<std::complex<double>> coef(model.dim());
    for (size_t j = 0; j < coef.size(); ++j) coef[j] = ex.cv(j) * ex.b(j);
    return coef;
}

ReconError reconstruction_error(const std::vector<double>& original,
                                const std::vector<double>& reconstructed) {
    if (original.size() != reconstructed.size())
        throw DataError("reconstruction_error: length mismatch");
    if (original.empty()) throw DataError("reconstruction_error: empty input");

    const size_t n = original.size();
    double mean = 0.0;
    for (double v : original) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0, sq = 0.0, mx = 0.0;
    for (size_t i = 0; i < n; ++i) {
        var += (original[i] - mean) * (original[i] - mean);
        const double d = original[i] - reconstructed[i];
        sq += d * d;
        mx = std::max(mx, std::fabs(d));
    }
    var /= static_cast<double>(n);
    if (var == 0.0)
        throw DataError("reconstruction_error: original has zero variance");

    ReconError e;
    e.rmse = std::sqrt(sq / static_cast<double>(n));
    e.nrmse = e.rmse / std::sqrt(var);
    e.max_abs = mx;
    return e;
}

void save_model_json(const KoopmanModel& model, const std::string& path) {
    using nlohmann::json;
    const size_t m = model.dim();

    json j;
    j["dict"] = {{"delay", model.dict.config.delay},
                 {"poly_deg", model.dict.config.poly_deg},
                 {"rbf_centers", model.dict.config.rbf_centers},
                 {"rbf_sigma", model.dict.config.rbf_sigma},
                 {"center_seed", model.dict.config.center_seed},
                 {"centers", model.dict.centers}};
    j["dt"] = model.dt;
    j["svd_rank"] = model.svd_rank;
    j["ridge_reg"] = model.ridge_reg;
    j["effective_rank"] = model.effective_rank;

    auto rows_of = [m](const Mat& mat) {
        std::vector<std::vector<double>> rows(mat.rows);
        for (size_t i = 0; i < mat.rows; ++i)
            rows[i].assign(mat.row(i), mat.row(i) + mat.cols);
        return rows;
    };
    j["K"] = rows_of(model.K);
    j["C"] = std::vector<double>(model.C.data);

    std::vector<double> ev_re(m), ev_im(m);
    for (size_t i = 0; i < m; ++i) {
        ev_re[i] = model.eigvals[i].real();
        ev_im[i] = model.eigvals[i].imag();
    }
    j["eigvals"] = {{"re", ev_re}, {"im", ev_im}};

    std::vector<std::vector<double>> vec_re(m, std::vector<double>(m)),
        vec_im(m, std::vector<double>(m));
    for (size_t i = 0; i < m; ++i)
        for (size_t c = 0; c < m; ++c) {
            vec_re[i][c] = model.eigvecs[i * m + c].real();
            vec_im[i][c] = model.eigvecs[i * m + c].imag();
        }
    j["eigvecs"] = {{"re", vec_re}, {"im", vec_im}};

    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(1) << "\n";
}

KoopmanModel load_model_json(const std::string& path) {
    using nlohmann::json;
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError(path + ": " + e.what());
    }

    try {
        KoopmanModel model;
        const auto& d = j.at("dict");
        model.dict.config.delay = d.at("delay").get<int>();
        model.dict.config.poly_deg = d.at("poly_deg").get<int>();
        model.dict.config.rbf_centers = d.at("rbf_centers").get<int>();
        model.dict.config.rbf_sigma = d.at("rbf_sigma").get<double>();
        model.dict.config.center_seed = d.at("center_seed").get<uint64_t>();
        model.dict.centers = d.at("centers").get<std::vector<std::vector<double>>>();
        model.dict.exponents =
            monomial_exponents(model.dict.config.delay, model.dict.config.poly_deg);

        model.dt = j.at("dt").get<double>();
        model.svd_rank = j.at("svd_rank").get<int>();
        model.ridge_reg = j.at("ridge_reg").get<double>();
        model.effective_rank = j.at("effective_rank").get<int>();

        const auto k_rows = j.at("K").get<std::vector<std::vector<double>>>();
        const size_t m = k_rows.size();
        if (m == 0 || m != model.dict.size())
            throw DataError(path + ": operator size does not match the dictionary");
        model.K = Mat(m, m);
        for (size_t i = 0; i < m; ++i) {
            if (k_rows[i].size() != m) throw DataError(path + ": ragged K");
            std::copy(k_rows[i].begin(), k_rows[i].end(), model.K.row(i));
        }

        const auto c_vals = j.at("C").get<std::vector<double>>();
        if (c_vals.size() != m) throw DataError(path + ": C length mismatch");
        model.C = Mat(1, m);
        std::copy(c_vals.begin(), c_vals.end(), model.C.row(0));

        const auto ev_re = j.at("eigvals").at("re").get<std::vector<double>>();
        const auto ev_im = j.at("eigvals").at("im").get<std::vector<double>>();
        if (ev_re.size() != m || ev_im.size() != m)
            throw DataError(path + ": eigvals length mismatch");
        model.eigvals.resize(m);
        for (size_t i = 0; i < m; ++i) model.eigvals[i] = {ev_re[i], ev_im[i]};

        const auto vr = j.at("eigvecs").at("re").get<std::vector<std::vector<double>>>();
        const auto vi = j.at("eigvecs").at("im").get<std::vector<std::vector<double>>>();
        if (vr.size() != m || vi.size() != m)
            throw DataError(path + ": eigvecs shape mismatch");
        model.eigvecs.resize(m * m);
        for (size_t i = 0; i < m; ++i) {
            if (vr[i].size() != m || vi[i].size() != m)
                throw DataError(path + ": ragged eigvecs");
            for (size_t c = 0; c < m; ++c)
                model.eigvecs[i * m + c] = {vr[i][c], vi[i][c]};
        }
        return model;
    } catch (const json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
}

}  // namespace kooptx
