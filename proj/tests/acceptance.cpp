// Acceptance harness: checks the ten release criteria and prints one line
// per criterion. Exit status is the number of failed criteria.
//
// Criteria 1-7 and 9 run in-process against the library; 8 and 10 drive the
// actual command-line binary (path injected at compile time) end to end on a
// freshly synthesized four-class dataset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "kooptx/dataset.hpp"
#include "kooptx/experiment.hpp"
#include "kooptx/koopman.hpp"
#include "kooptx/labels.hpp"
#include "kooptx/models.hpp"
#include "kooptx/rng.hpp"
#include "kooptx/signal.hpp"
#include "kooptx/synth.hpp"
#include "kooptx/wavelet.hpp"

#ifndef KOOPTX_CLI_PATH
#error "KOOPTX_CLI_PATH must be defined as the path of the pipeline binary"
#endif

namespace fs = std::filesystem;
using namespace kooptx;

namespace {

constexpr double kPi = 3.14159265358979323846;

int g_failures = 0;

void criterion_ablation_protocol();

void report(int id, bool ok, const std::string& detail) {
    std::printf("criterion %d: %s - %s\n", id, ok ? "pass" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

struct Stopwatch {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    }
};

// ---------------------------------------------------------------- criterion 1

void criterion_linear_exactness() {
    Stopwatch sw;
    std::string why;
    bool ok = true;
    double rot_err = -1.0, lti_err = -1.0;

    {  // planar rotation observed through its first coordinate
        const double theta = kPi / 5.0;
        std::vector<double> w(100);
        for (size_t t = 0; t < w.size(); ++t)
            w[t] = std::cos(theta * static_cast<double>(t));
        DictionaryConfig cfg;
        cfg.delay = 2;
        cfg.poly_deg = 1;
        cfg.rbf_centers = 0;
        const KoopmanModel model = edmd_fit(w, 1.0, cfg, 16, 0.0);
        if (model.eigvals.size() != 3) {
            ok = false;
            why = fmt("rotation spectrum has %zu eigenvalues, expected 3",
                      model.eigvals.size());
        } else {
            const std::complex<double> expect(std::cos(theta), std::sin(theta));
            rot_err = std::max(std::abs(model.eigvals[1] - expect),
                               std::abs(model.eigvals[2] - std::conj(expect)));
            if (rot_err >= 1e-8) {
                ok = false;
                why = fmt("rotation pair off by %.3g", rot_err);
            }
        }
    }
    if (ok) {  // scalar linear system x' = 0.9 x
        std::vector<double> w(40);
        w[0] = 1.0;
        for (size_t t = 1; t < w.size(); ++t) w[t] = 0.9 * w[t - 1];
        DictionaryConfig cfg;
        cfg.delay = 1;
        cfg.poly_deg = 1;
        cfg.rbf_centers = 0;
        const KoopmanModel model = edmd_fit(w, 1.0, cfg, 16, 0.0);
        if (model.eigvals.size() != 2) {
            ok = false;
            why = fmt("linear-system spectrum has %zu eigenvalues, expected 2",
                      model.eigvals.size());
        } else {
            lti_err = std::abs(model.eigvals[1] - std::complex<double>(0.9, 0.0));
            if (lti_err >= 1e-10) {
                ok = false;
                why = fmt("dominant eigenvalue off by %.3g", lti_err);
            }
        }
    }
    const double t = sw.seconds();
    if (ok && t >= 1.0) {
        ok = false;
        why = fmt("took %.2f s, budget 1 s", t);
    }
    report(1, ok,
           ok ? fmt("rotation pair within %.2g, linear eigenvalue within %.2g "
                    "(%.2f s)",
                    rot_err, lti_err, t)
              : why);
}

// ---------------------------------------------------------------- criterion 2

void criterion_oscillator_spectrum() {
    Stopwatch sw;
    const double fs = 125.0;
    std::vector<double> w(250);
    for (size_t i = 0; i < w.size(); ++i)
        w[i] = std::sin(2.0 * kPi * 8.0 * static_cast<double>(i) / fs);

    DictionaryConfig cfg;  // defaults: delay 8, poly 2
    const KoopmanModel model = edmd_fit(w, fs, cfg, 16, 1e-4);

    const double want = 2.0 * kPi * 8.0 / fs;
    double best_angle_err = 1e9, mag = 0.0;
    for (const auto& lam : model.eigvals) {
        if (lam.imag() <= 0.0) continue;
        const double d = std::fabs(std::arg(lam) - want);
        if (d < best_angle_err) {
            best_angle_err = d;
            mag = std::abs(lam);
        }
    }
    const double t = sw.seconds();
    bool ok = best_angle_err < 1e-3 && mag >= 0.999 && mag <= 1.001 && t < 1.0;
    report(2, ok,
           fmt("8 Hz pair |lambda| = %.6f, angle error %.2g rad (%.2f s)", mag,
               best_angle_err, t));
}

// ----------------------------------------------------- criteria 3 and 4

void criterion_reconstruction_and_spectrum() {
    Stopwatch sw;
    const double fs = 125.0;
    DictionaryConfig dict;  // defaults: delay 8, poly 2, no RBF
    const int windows = 50;

    int recon_good = 0, inside = 0, total_eigs = 0, total = 0;
    double worst_nrmse = 0.0;
    for (uint64_t seed = 1; total < windows; ++seed) {
        const Signal rec = zscore(synth_ecg(SynthClass::Normal, 10.0, fs, seed));
        const WindowSet ws = segment(rec, 2.0, 1.0);
        for (size_t wi = 0; wi < ws.windows.size() && total < windows; wi += 2, ++total) {
            const auto& w = ws.windows[wi];
            const KoopmanModel model = edmd_fit(w, fs, dict, 16, 1e-4);

            // The readout tracks the newest sample of each embedded state, so
            // the reconstruction aligns with the window from sample delay-1.
            const int steps = static_cast<int>(w.size()) - dict.delay + 1;
            const ReconResult recon = reconstruct(model, w, steps);
            const std::vector<double> ref(w.begin() + dict.delay - 1, w.end());
            const double nrmse = reconstruction_error(ref, recon.samples).nrmse;
            worst_nrmse = std::max(worst_nrmse, nrmse);
            if (nrmse <= 0.10) ++recon_good;

            for (const auto& lam : model.eigvals) {
                ++total_eigs;
                if (std::abs(lam) <= 1.01) ++inside;
            }
        }
    }
    const double t = sw.seconds();

    const bool ok3 = recon_good >= (9 * windows + 9) / 10 && t < 30.0;
    report(3, ok3,
           fmt("NRMSE <= 0.10 on %d/%d normal-rhythm windows, worst %.3f (%.1f s)",
               recon_good, windows, worst_nrmse, t));

    const double frac = static_cast<double>(inside) / static_cast<double>(total_eigs);
    report(4, frac >= 0.90,
           fmt("%d/%d eigenvalues (%.1f%%) have |lambda| <= 1.01", inside, total_eigs,
               100.0 * frac));
}

// ---------------------------------------------------------------- criterion 5

void criterion_wavelet() {
    Rng rng(11);
    double worst_pr = 0.0, worst_parseval = 0.0, worst_detail = 0.0;
    bool ok = true;
    std::string why;

    for (int rep = 0; rep < 100 && ok; ++rep) {
        const size_t n = 32ull << rng.below(3);
        std::vector<double> w(n);
        for (double& v : w) v = rng.normal();
        double sig_energy = 0.0;
        for (double v : w) sig_energy += v * v;

        for (auto fam : {WaveletFamily::Haar, WaveletFamily::DB4}) {
            const int max_levels = static_cast<int>(std::floor(
                std::log2(static_cast<double>(n) / (wavelet_filter_length(fam) - 1))));
            const WaveletSpec spec{fam, 1 + static_cast<int>(rng.below(max_levels))};
            const auto dec = dwt(w, spec);

            const auto back = idwt(dec, spec);
            for (size_t i = 0; i < n; ++i)
                worst_pr = std::max(worst_pr, std::fabs(back[i] - w[i]));

            double coef_energy = 0.0;
            for (double v : dec.approx) coef_energy += v * v;
            for (const auto& band : dec.details)
                for (double v : band) coef_energy += v * v;
            worst_parseval =
                std::max(worst_parseval, std::fabs(coef_energy - sig_energy) / sig_energy);
        }
    }
    if (worst_pr >= 1e-10) {
        ok = false;
        why = fmt("perfect-reconstruction error %.3g", worst_pr);
    } else if (worst_parseval >= 1e-9) {
        ok = false;
        why = fmt("energy mismatch %.3g relative", worst_parseval);
    }

    if (ok) {  // four vanishing moments: interior DB4 details annihilate cubics
        const size_t N = 128;
        std::vector<double> x(N);
        for (size_t t = 0; t < N; ++t) {
            const double u = static_cast<double>(t) / static_cast<double>(N);
            x[t] = 0.3 - 1.7 * u + 0.9 * u * u + 2.1 * u * u * u;
        }
        const auto d = dwt(x, {WaveletFamily::DB4, 1});
        for (size_t i = 0; i < d.details[0].size(); ++i) {
            if (2 * i + 7 >= N) continue;  // filter support wraps the boundary
            worst_detail = std::max(worst_detail, std::fabs(d.details[0][i]));
        }
        if (worst_detail >= 1e-10) {
            ok = false;
            why = fmt("cubic input leaves interior detail %.3g", worst_detail);
        }
    }
    report(5, ok,
           ok ? fmt("reconstruction within %.2g, energy within %.2g rel, cubic "
                    "details below %.2g",
                    worst_pr, worst_parseval, worst_detail)
              : why);
}

// ---------------------------------------------------------------- criterion 6

double batch_loss(const Classifier& model, const std::vector<const Mat*>& records,
                  const std::vector<int>& labels) {
    double loss = 0.0;
    for (size_t i = 0; i < records.size(); ++i)
        loss += cross_entropy(classifier_logits(model, *records[i]), labels[i]);
    return loss / static_cast<double>(records.size());
}

double fd_worst_rel_err(Classifier model, const std::vector<const Mat*>& records,
                        const std::vector<int>& labels) {
    std::vector<double> grads;
    classifier_batch_grad(model, records, labels, {}, grads);

    double worst = 0.0;
    const double h = 1e-5;
    for (size_t p = 0; p < model.params.size(); ++p) {
        const double keep = model.params[p];
        model.params[p] = keep + h;
        const double up = batch_loss(model, records, labels);
        model.params[p] = keep - h;
        const double dn = batch_loss(model, records, labels);
        model.params[p] = keep;
        const double fd = (up - dn) / (2.0 * h);
        if (std::fabs(fd) < 1e-10 && std::fabs(grads[p]) < 1e-10) continue;
        const double rel = std::fabs(fd - grads[p]) /
                           std::max({std::fabs(fd), std::fabs(grads[p]), 1e-8});
        worst = std::max(worst, rel);
    }
    return worst;
}

void criterion_gradient_checks() {
    Stopwatch sw;
    Rng rng(29);
    const auto random_mat = [&](size_t rows, size_t cols) {
        Mat m(rows, cols);
        for (double& v : m.data) v = 0.5 * rng.normal();
        return m;
    };

    TransformerConfig tf;
    tf.layers = 1;
    tf.heads = 2;
    tf.emb_dim = 8;
    tf.ff_dim = 16;
    tf.dropout = 0.0;
    tf.n_classes = 2;
    tf.max_tokens = 2;
    tf.in_dim = 6;
    const Classifier transformer = make_transformer(tf, 5);
    const Mat ta = random_mat(2, 6), tb = random_mat(2, 6);
    const double tf_err = fd_worst_rel_err(transformer, {&ta, &tb}, {0, 1});

    RnnConfig rc;
    rc.hidden = 8;
    rc.in_dim = 2;
    rc.n_classes = 2;
    const Classifier rnn = make_rnn(rc, 6);
    const Mat ra = random_mat(5, 2), rb = random_mat(3, 2);
    const double rnn_err = fd_worst_rel_err(rnn, {&ra, &rb}, {1, 0});

    const double t = sw.seconds();
    const bool ok = tf_err < 1e-4 && rnn_err < 1e-4 && t < 60.0;
    report(6, ok,
           fmt("worst finite-difference relative error: transformer %.2g, rnn %.2g "
               "(%.1f s)",
               tf_err, rnn_err, t));
}

// ---------------------------------------------------------------- criterion 7

void criterion_attention_oracle() {
    Rng rng(31);
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const size_t nq = 1 + rng.below(4), nk = 1 + rng.below(4);
        const size_t dk = 1 + rng.below(4), dv = 1 + rng.below(4);
        Mat q(nq, dk), k(nk, dk), v(nk, dv);
        for (double& x : q.data) x = rng.normal();
        for (double& x : k.data) x = rng.normal();
        for (double& x : v.data) x = rng.normal();

        const Mat fast = attention(q, k, v);

        for (size_t i = 0; i < nq; ++i) {
            std::vector<double> scores(nk);
            double denom = 0.0;
            for (size_t j = 0; j < nk; ++j) {
                double dot = 0.0;
                for (size_t c = 0; c < dk; ++c) dot += q(i, c) * k(j, c);
                scores[j] = std::exp(dot / std::sqrt(static_cast<double>(dk)));
                denom += scores[j];
            }
            for (size_t c = 0; c < dv; ++c) {
                double want = 0.0;
                for (size_t j = 0; j < nk; ++j) want += scores[j] / denom * v(j, c);
                worst = std::max(worst, std::fabs(want - fast(i, c)));
            }
        }
    }

    double ce_err = 0.0;
    for (int c : {2, 3, 4, 7}) {
        const double got = cross_entropy(std::vector<double>(c, 0.7), c - 1);
        ce_err = std::max(ce_err, std::fabs(got - std::log(static_cast<double>(c))));
    }

    const bool ok = worst < 1e-12 && ce_err < 1e-12;
    report(7, ok,
           fmt("attention matches the direct formula within %.2g over 20 cases; "
               "uniform-logit cross entropy within %.2g of ln C",
               worst, ce_err));
}

// ---------------------------------------------------- criteria 8 and 10

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string("\"") + KOOPTX_CLI_PATH + "\" " + args + " > \"" +
                            log.string() + "\" 2>&1";
    return std::system(cmd.c_str());
}

struct SummaryRow {
    double mean_macro_f1 = 0.0;
    bool seen = false;
};

bool parse_summary(const fs::path& path, std::map<std::string, SummaryRow>& rows,
                   std::string& why) {
    std::ifstream in(path);
    if (!in.good()) {
        why = "missing " + path.string();
        return false;
    }
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string system, task, mean;
        std::getline(ss, system, ',');
        std::getline(ss, task, ',');
        std::getline(ss, mean, ',');
        rows[system] = {std::strtod(mean.c_str(), nullptr), true};
    }
    return true;
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::vector<std::string> lines;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

void criteria_end_to_end() {
    const fs::path base = fs::temp_directory_path() / "kooptx_acceptance";
    std::error_code ec;
    fs::remove_all(base, ec);
    fs::create_directories(base);
    const fs::path data = base / "data", run1 = base / "run1", run2 = base / "run2";

    bool ok8 = true;
    std::string why8;
    double wall = 0.0;
    std::map<std::string, SummaryRow> rows;

    if (run_cli("synth --out \"" + data.string() + "\"", base / "synth.log") != 0) {
        ok8 = false;
        why8 = "synth run failed, see " + (base / "synth.log").string();
    }
    if (ok8) {
        Stopwatch sw;
        const int rc = run_cli(
            "compare --data \"" + data.string() + "\" --out \"" + run1.string() +
                "\" --task four",
            base / "compare1.log");
        wall = sw.seconds();
        if (rc != 0) {
            ok8 = false;
            why8 = fmt("compare exited with %d, see %s", rc,
                       (base / "compare1.log").string().c_str());
        }
    }
    if (ok8 && !parse_summary(run1 / "summary.csv", rows, why8)) ok8 = false;
    if (ok8) {
        for (const char* system : {"WaveletTx", "KoopmanTx", "HybridTx",
                                   "KoopmanTxAblated", "RnnRaw"})
            if (!rows[system].seen) {
                ok8 = false;
                why8 = std::string("summary.csv has no row for ") + system;
                break;
            }
    }
    if (ok8) {
        const size_t report_rows = read_lines(run1 / "report.csv").size();
        const double ablated = rows["KoopmanTxAblated"].mean_macro_f1;
        const double koop = rows["KoopmanTx"].mean_macro_f1;
        const double wave = rows["WaveletTx"].mean_macro_f1;
        if (report_rows != 26) {  // header + 5 systems x 5 seeds
            ok8 = false;
            why8 = fmt("report.csv has %zu lines, expected 26", report_rows);
        } else if (ablated < 0.90) {
            ok8 = false;
            why8 = fmt("KoopmanTxAblated macro-F1 %.4f below 0.90", ablated);
        } else if (koop < wave) {
            ok8 = false;
            why8 = fmt("ordering violated: KoopmanTx %.4f < WaveletTx %.4f", koop, wave);
        } else if (wall >= 1800.0) {
            ok8 = false;
            why8 = fmt("compare took %.0f s, budget 1800 s", wall);
        } else {
            why8 = fmt("four-class compare on 200 records: KoopmanTxAblated %.4f, "
                       "KoopmanTx %.4f >= WaveletTx %.4f, five systems reported "
                       "(%.0f s)",
                       ablated, koop, wave, wall);
        }
    }
    report(8, ok8, why8);

    // Criterion 9 runs in between in spec order; it is independent of the CLI,
    // so it is emitted by the caller before criterion 10.
    criterion_ablation_protocol();

    bool ok10 = ok8;
    std::string why10 = ok8 ? "" : "skipped: criterion 8 did not produce a baseline";
    if (ok10) {
        const int rc = run_cli(
            "compare --data \"" + data.string() + "\" --out \"" + run2.string() +
                "\" --task four",
            base / "compare2.log");
        if (rc != 0) {
            ok10 = false;
            why10 = fmt("second compare exited with %d", rc);
        }
    }
    if (ok10) {
        const auto sum1 = read_lines(run1 / "summary.csv");
        const auto sum2 = read_lines(run2 / "summary.csv");
        if (sum1 != sum2 || sum1.empty()) {
            ok10 = false;
            why10 = "summary.csv differs between identical runs";
        }
    }
    if (ok10) {
        auto rep1 = read_lines(run1 / "report.csv");
        auto rep2 = read_lines(run2 / "report.csv");
        const auto strip_wall = [](std::string& line) {
            const size_t cut = line.rfind(", ");
            if (cut != std::string::npos) line.erase(cut);
        };
        for (std::string& l : rep1) strip_wall(l);
        for (std::string& l : rep2) strip_wall(l);
        if (rep1 != rep2 || rep1.empty()) {
            ok10 = false;
            why10 = "report.csv scores differ between identical runs";
        } else {
            why10 = fmt("summary.csv byte-identical and all %zu report rows "
                        "reproduce exactly (timing column aside)",
                        rep1.size() - 1);
        }
    }
    report(10, ok10, why10);
}

// ---------------------------------------------------------------- criterion 9

template <typename T>
concept ExposesTestIndices = requires(T view) { view.test; };
static_assert(!ExposesTestIndices<TrainValView>,
              "the ablation interface must not carry test-set indices");

void criterion_ablation_protocol() {
    std::vector<RawRecord> records;
    for (SynthClass cls : kSynthClasses)
        for (uint64_t i = 0; i < 4; ++i) {
            RawRecord rec;
            rec.file = synth_class_name(cls) + std::to_string(i);
            rec.diagnosis = synth_class_diagnosis(cls);
            rec.signal = synth_ecg(cls, 10.0, 125.0, 100 + i);
            records.push_back(std::move(rec));
        }
    PipelineConfig cfg;
    cfg.ablation_max_epochs = 2;
    cfg.ablation_patience = 1;
    const PreparedData data = prepare_data(records, Task::Binary, cfg);

    const AblationResult ab = run_ablation(trainval_view(data), cfg);
    // Default dictionary cell: delay 8, centers 0, sigma 0.3, rank 16.
    const AblationCell* fallback = nullptr;
    for (const AblationCell& c : ab.cells)
        if (c.delay == 8 && c.rbf_centers == 0 && c.rbf_sigma == 0.3 && c.svd_rank == 16)
            fallback = &c;

    bool ok = fallback != nullptr && !std::isnan(fallback->val_macro_f1) &&
              ab.winner.val_macro_f1 >= fallback->val_macro_f1;
    report(9, ok,
           fmt("grid winner validation macro-F1 %.4f >= default cell %.4f; the "
               "search interface carries no test indices (compile-time check)",
               ab.winner.val_macro_f1, fallback ? fallback->val_macro_f1 : -1.0));
}

}  // namespace

int main() {
    std::printf("acceptance: pipeline binary %s\n", KOOPTX_CLI_PATH);
    criterion_linear_exactness();
    criterion_oscillator_spectrum();
    criterion_reconstruction_and_spectrum();
    criterion_wavelet();
    criterion_gradient_checks();
    criterion_attention_oracle();
    criteria_end_to_end();  // emits 8, 9 (independent) and 10 in order
    std::printf("acceptance: %d of 10 criteria failed\n", g_failures);
    return g_failures;
}
