#include "kooptx/experiment.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "kooptx/errors.hpp"
#include "kooptx/koopman.hpp"
#include "kooptx/models.hpp"

namespace kooptx {

namespace {

using nlohmann::json;

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

WaveletFamily family_from_name(const std::string& name) {
    if (name == "haar") return WaveletFamily::Haar;
    if (name == "db4") return WaveletFamily::DB4;
    throw ConfigError("unknown wavelet '" + name + "' (expected haar or db4)");
}

}  // namespace

PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config " + path + ": expected a JSON object");

    PipelineConfig cfg;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "fs") cfg.fs = value.get<double>();
            else if (key == "record_seconds") cfg.record_seconds = value.get<double>();
            else if (key == "window_seconds") cfg.window_seconds = value.get<double>();
            else if (key == "stride_seconds") cfg.stride_seconds = value.get<double>();
            else if (key == "records_per_class") cfg.records_per_class = value.get<int>();
            else if (key == "base_seed") cfg.base_seed = value.get<uint64_t>();
            else if (key == "delay") cfg.dict.delay = value.get<int>();
            else if (key == "poly_degree") cfg.dict.poly_deg = value.get<int>();
            else if (key == "rbf_centers") cfg.dict.rbf_centers = value.get<int>();
            else if (key == "rbf_sigma") cfg.dict.rbf_sigma = value.get<double>();
            else if (key == "svd_rank") cfg.svd_rank = value.get<int>();
            else if (key == "ridge") cfg.ridge = value.get<double>();
            else if (key == "top_k") cfg.top_k = value.get<int>();
            else if (key == "wavelet") cfg.wavelet.family = family_from_name(value.get<std::string>());
            else if (key == "levels") cfg.wavelet.levels = value.get<int>();
            else if (key == "layers") cfg.layers = value.get<int>();
            else if (key == "heads") cfg.heads = value.get<int>();
            else if (key == "emb_dim") cfg.emb_dim = value.get<int>();
            else if (key == "ff_dim") cfg.ff_dim = value.get<int>();
            else if (key == "dropout") cfg.dropout = value.get<double>();
            else if (key == "rnn_hidden") cfg.rnn_hidden = value.get<int>();
            else if (key == "lr") cfg.train.lr = value.get<double>();
            else if (key == "beta1") cfg.train.beta1 = value.get<double>();
            else if (key == "beta2") cfg.train.beta2 = value.get<double>();
            else if (key == "weight_decay") cfg.train.weight_decay = value.get<double>();
            else if (key == "batch") cfg.train.batch = value.get<int>();
            else if (key == "max_epochs") cfg.train.max_epochs = value.get<int>();
            else if (key == "patience") cfg.train.patience = value.get<int>();
            else if (key == "seed") cfg.train.seed = value.get<uint64_t>();
            else if (key == "ablation_max_epochs") cfg.ablation_max_epochs = value.get<int>();
            else if (key == "ablation_patience") cfg.ablation_patience = value.get<int>();
            else if (key == "train_ratio") cfg.train_ratio = value.get<double>();
            else if (key == "val_ratio") cfg.val_ratio = value.get<double>();
            else if (key == "test_ratio") cfg.test_ratio = value.get<double>();
            else if (key == "split_seed") cfg.split_seed = value.get<uint64_t>();
            else if (key == "system") cfg.system = value.get<std::string>();
            else throw ConfigError("config " + path + ": unknown key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    validate_pipeline_config(cfg);
    return cfg;
}

void validate_pipeline_config(const PipelineConfig& cfg) {
    if (!(cfg.fs > 0.0)) throw ConfigError("fs must be positive");
    if (!(cfg.window_seconds > 0.0)) throw ConfigError("window_seconds must be positive");
    if (!(cfg.stride_seconds > 0.0)) throw ConfigError("stride_seconds must be positive");
    if (cfg.record_seconds < cfg.window_seconds)
        throw ConfigError("record_seconds must be at least window_seconds");
    if (cfg.records_per_class < 1) throw ConfigError("records_per_class must be >= 1");
    if (cfg.dict.delay < 1) throw ConfigError("delay must be >= 1");
    if (cfg.dict.poly_deg < 1) throw ConfigError("poly_degree must be >= 1");
    if (cfg.dict.rbf_centers < 0) throw ConfigError("rbf_centers must be >= 0");
    if (!(cfg.dict.rbf_sigma > 0.0)) throw ConfigError("rbf_sigma must be positive");
    if (cfg.svd_rank < 1) throw ConfigError("svd_rank must be >= 1");
    if (cfg.ridge < 0.0) throw ConfigError("ridge must be >= 0");
    if (cfg.top_k < 1) throw ConfigError("top_k must be >= 1");
    if (cfg.wavelet.levels < 1) throw ConfigError("levels must be >= 1");
    if (cfg.layers < 1 || cfg.heads < 1 || cfg.emb_dim < 1 || cfg.ff_dim < 1)
        throw ConfigError("transformer dimensions must be positive");
    if (cfg.emb_dim % cfg.heads != 0) throw ConfigError("heads must divide emb_dim");
    if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0))
        throw ConfigError("dropout must lie in [0, 1)");
    if (cfg.rnn_hidden < 1) throw ConfigError("rnn_hidden must be >= 1");
    if (cfg.train.batch < 1) throw ConfigError("batch must be >= 1");
    if (cfg.train.max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (cfg.train.patience < 1) throw ConfigError("patience must be >= 1");
    if (!(cfg.train.lr > 0.0)) throw ConfigError("lr must be positive");
    if (cfg.ablation_max_epochs < 1) throw ConfigError("ablation_max_epochs must be >= 1");
    if (cfg.ablation_patience < 1) throw ConfigError("ablation_patience must be >= 1");
    for (double r : {cfg.train_ratio, cfg.val_ratio, cfg.test_ratio})
        if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("split ratios must lie in [0, 1]");
    if (std::fabs(cfg.train_ratio + cfg.val_ratio + cfg.test_ratio - 1.0) > 1e-9)
        throw ConfigError("split ratios must sum to 1");
}

const SystemKind kAllSystems[5] = {SystemKind::WaveletTx, SystemKind::KoopmanTx,
                                   SystemKind::HybridTx, SystemKind::KoopmanTxAblated,
                                   SystemKind::RnnRaw};

std::string system_name(SystemKind s) {
    switch (s) {
        case SystemKind::WaveletTx: return "WaveletTx";
        case SystemKind::KoopmanTx: return "KoopmanTx";
        case SystemKind::HybridTx: return "HybridTx";
        case SystemKind::KoopmanTxAblated: return "KoopmanTxAblated";
        default: return "RnnRaw";
    }
}

SystemKind system_from_config_name(const std::string& name) {
    if (name == "wavelet_tx") return SystemKind::WaveletTx;
    if (name == "koopman_tx") return SystemKind::KoopmanTx;
    if (name == "hybrid_tx") return SystemKind::HybridTx;
    if (name == "koopman_tx_ablated") return SystemKind::KoopmanTxAblated;
    if (name == "rnn_raw") return SystemKind::RnnRaw;
    throw ConfigError("unknown system '" + name +
                      "' (expected wavelet_tx, koopman_tx, hybrid_tx, "
                      "koopman_tx_ablated or rnn_raw)");
}

PreparedData prepare_data(const std::vector<RawRecord>& records, Task task,
                          const PipelineConfig& cfg) {
    if (records.empty()) throw DataError("prepare_data: no records");
    const double fs = records.front().signal.fs;
    if (std::fabs(fs - cfg.fs) > 1e-9 * cfg.fs)
        throw DataError("dataset sampled at " + std::to_string(fs) +
                        " Hz but the config expects " + std::to_string(cfg.fs));
    const auto want = static_cast<size_t>(std::llround(cfg.record_seconds * fs));

    std::vector<std::string> diagnoses;
    diagnoses.reserve(records.size());
    for (const RawRecord& r : records) diagnoses.push_back(r.diagnosis);
    const LabelResult labeled = generate_labels(diagnoses, make_label_rule(task));
    if (labeled.kept.empty())
        throw DataError("prepare_data: no record matched any label pattern");
    if (labeled.excluded > 0)
        std::fprintf(stderr, "note: %zu record(s) matched no label pattern and were excluded\n",
                     labeled.excluded);

    PreparedData data;
    data.task = task;
    data.fs = fs;
    data.excluded = labeled.excluded;
    data.labels = labeled.labels;
    data.signals.reserve(labeled.kept.size());
    for (size_t pos : labeled.kept) {
        const RawRecord& r = records[pos];
        if (r.signal.samples.size() < want)
            throw DataError(r.file + ": " + std::to_string(r.signal.samples.size()) +
                            " samples, need " + std::to_string(want));
        Signal cut{std::vector<double>(r.signal.samples.begin(),
                                       r.signal.samples.begin() + static_cast<long>(want)),
                   fs};
        data.signals.push_back(zscore(cut));
    }

    data.split = split_dataset(data.labels,
                               {cfg.train_ratio, cfg.val_ratio, cfg.test_ratio},
                               cfg.split_seed);
    return data;
}

namespace {

std::vector<double> koopman_window_features(const std::vector<double>& window,
                                            double fs, const DictionaryConfig& dict,
                                            int svd_rank, double ridge, int top_k) {
    const EdmdGram gram = edmd_gram(window, fs, dict);
    return features_from_eigvals(edmd_eigvals(gram, svd_rank, ridge), gram.dt, top_k);
}

Mat rows_to_mat(const std::vector<std::vector<double>>& rows) {
    Mat out(rows.size(), rows.front().size());
    for (size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != out.cols)
            throw DataError("feature rows have inconsistent widths");
        std::copy(rows[r].begin(), rows[r].end(), out.data.begin() + static_cast<long>(r * out.cols));
    }
    return out;
}

}  // namespace

std::vector<Mat> build_koopman_tokens(const PreparedData& data,
                                      const PipelineConfig& cfg,
                                      const DictionaryConfig& dict, int svd_rank) {
    std::vector<Mat> tokens;
    tokens.reserve(data.signals.size());
    for (const Signal& s : data.signals) {
        const WindowSet ws = segment(s, cfg.window_seconds, cfg.stride_seconds);
        std::vector<std::vector<double>> rows;
        rows.reserve(ws.windows.size());
        for (const auto& w : ws.windows)
            rows.push_back(
                koopman_window_features(w, data.fs, dict, svd_rank, cfg.ridge, cfg.top_k));
        tokens.push_back(rows_to_mat(rows));
    }
    return tokens;
}

std::vector<Mat> build_tokens(const PreparedData& data, SystemKind system,
                              const PipelineConfig& cfg) {
    std::vector<Mat> tokens;
    tokens.reserve(data.signals.size());
    switch (system) {
        case SystemKind::KoopmanTx:
        case SystemKind::KoopmanTxAblated:
            return build_koopman_tokens(data, cfg, cfg.dict, cfg.svd_rank);
        case SystemKind::WaveletTx:
            for (const Signal& s : data.signals) {
                const WindowSet ws = segment(s, cfg.window_seconds, cfg.stride_seconds);
                std::vector<std::vector<double>> rows;
                rows.reserve(ws.windows.size());
                for (const auto& w : ws.windows)
                    rows.push_back(wavelet_window_features(w, cfg.wavelet));
                tokens.push_back(rows_to_mat(rows));
            }
            return tokens;
        case SystemKind::HybridTx: {
            // Wavelet block first, Koopman block appended per token.
            const std::vector<Mat> koop = build_koopman_tokens(data, cfg, cfg.dict, cfg.svd_rank);
            for (size_t i = 0; i < data.signals.size(); ++i) {
                const WindowSet ws =
                    segment(data.signals[i], cfg.window_seconds, cfg.stride_seconds);
                std::vector<std::vector<double>> rows;
                rows.reserve(ws.windows.size());
                for (size_t w = 0; w < ws.windows.size(); ++w) {
                    std::vector<double> row = wavelet_window_features(ws.windows[w], cfg.wavelet);
                    const Mat& km = koop[i];
                    row.insert(row.end(), km.data.begin() + static_cast<long>(w * km.cols),
                               km.data.begin() + static_cast<long>((w + 1) * km.cols));
                    rows.push_back(std::move(row));
                }
                tokens.push_back(rows_to_mat(rows));
            }
            return tokens;
        }
        default:  // RnnRaw: one z-scored sample per timestep
            for (const Signal& s : data.signals) {
                Mat m(s.samples.size(), 1);
                std::copy(s.samples.begin(), s.samples.end(), m.data.begin());
                tokens.push_back(std::move(m));
            }
            return tokens;
    }
}

FeatureScaler fit_scaler(const std::vector<Mat>& tokens,
                         const std::vector<size_t>& train_idx) {
    if (tokens.empty() || train_idx.empty())
        throw DataError("fit_scaler: nothing to fit on");
    const size_t dim = tokens.front().cols;
    FeatureScaler sc;
    sc.mean.assign(dim, 0.0);
    sc.stddev.assign(dim, 0.0);
    size_t n = 0;
    for (size_t idx : train_idx) {
        const Mat& m = tokens.at(idx);
        for (size_t r = 0; r < m.rows; ++r, ++n)
            for (size_t c = 0; c < dim; ++c) sc.mean[c] += m(r, c);
    }
    if (n == 0) throw DataError("fit_scaler: training split has no feature rows");
    for (double& v : sc.mean) v /= static_cast<double>(n);
    for (size_t idx : train_idx) {
        const Mat& m = tokens.at(idx);
        for (size_t r = 0; r < m.rows; ++r)
            for (size_t c = 0; c < dim; ++c) {
                const double d = m(r, c) - sc.mean[c];
                sc.stddev[c] += d * d;
            }
    }
    for (double& v : sc.stddev) v = std::sqrt(v / static_cast<double>(n));
    return sc;
}

void apply_scaler(std::vector<Mat>& tokens, const FeatureScaler& scaler) {
    for (Mat& m : tokens) {
        if (m.cols != scaler.mean.size())
            throw DataError("apply_scaler: feature width does not match the scaler");
        for (size_t r = 0; r < m.rows; ++r)
            for (size_t c = 0; c < m.cols; ++c) {
                const double s = scaler.stddev[c] > 1e-12 ? scaler.stddev[c] : 1.0;
                m(r, c) = (m(r, c) - scaler.mean[c]) / s;
            }
    }
}

void save_scaler_json(const FeatureScaler& scaler, SystemKind system, Task task,
                      const std::string& path) {
    json j;
    j["system"] = system_name(system);
    j["task"] = task_name(task);
    j["mean"] = scaler.mean;
    j["stddev"] = scaler.stddev;
    std::ofstream out(path);
    if (!out.good()) throw DataError("cannot write " + path);
    out << j.dump(1) << "\n";
}

FeatureScaler load_scaler_json(const std::string& path, SystemKind expected_system,
                               Task expected_task) {
    std::ifstream in(path);
    if (!in.good()) throw DataError("cannot open " + path);
    try {
        json j;
        in >> j;
        if (j.at("system").get<std::string>() != system_name(expected_system))
            throw DataError(path + ": scaler was fitted for system " +
                            j.at("system").get<std::string>());
        if (j.at("task").get<std::string>() != task_name(expected_task))
            throw DataError(path + ": scaler was fitted for task " +
                            j.at("task").get<std::string>());
        FeatureScaler sc;
        sc.mean = j.at("mean").get<std::vector<double>>();
        sc.stddev = j.at("stddev").get<std::vector<double>>();
        if (sc.mean.size() != sc.stddev.size())
            throw DataError(path + ": mean/stddev lengths differ");
        return sc;
    } catch (const json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
}

namespace {

LabeledSet subset(const std::vector<Mat>& tokens, const std::vector<int>& labels,
                  const std::vector<size_t>& idx) {
    LabeledSet set;
    set.records.reserve(idx.size());
    set.labels.reserve(idx.size());
    for (size_t i : idx) {
        set.records.push_back(tokens.at(i));
        set.labels.push_back(labels.at(i));
    }
    return set;
}

Classifier make_system_model(SystemKind system, size_t in_dim, size_t max_tokens,
                             int n_classes, const PipelineConfig& cfg, uint64_t seed) {
    if (system == SystemKind::RnnRaw) {
        RnnConfig rc;
        rc.hidden = cfg.rnn_hidden;
        rc.n_classes = n_classes;
        rc.in_dim = 1;
        return make_rnn(rc, seed);
    }
    TransformerConfig tc;
    tc.layers = cfg.layers;
    tc.heads = cfg.heads;
    tc.emb_dim = cfg.emb_dim;
    tc.ff_dim = cfg.ff_dim;
    tc.dropout = cfg.dropout;
    tc.n_classes = n_classes;
    tc.max_tokens = static_cast<int>(max_tokens);
    tc.in_dim = static_cast<int>(in_dim);
    return make_transformer(tc, seed);
}

RunResult one_run(SystemKind system, const std::vector<Mat>& tokens,
                  const PreparedData& data, const PipelineConfig& cfg, uint64_t seed) {
    const double t0 = now_seconds();
    const LabeledSet train_set = subset(tokens, data.labels, data.split.train);
    const LabeledSet val_set = subset(tokens, data.labels, data.split.val);
    const LabeledSet test_set = subset(tokens, data.labels, data.split.test);

    Classifier model = make_system_model(system, tokens.front().cols,
                                         tokens.front().rows, data.n_classes(), cfg, seed);
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    train_classifier(model, train_set, val_set, tc);
    const Metrics m = evaluate_classifier(model, test_set);

    RunResult run;
    run.seed = seed;
    run.macro_f1 = m.macro_f1;
    run.f1_per_class = m.f1;
    run.wall_clock_s = now_seconds() - t0;
    return run;
}

void finish_report(ExperimentReport& rep) {
    const size_t n = rep.runs.size();
    const size_t nc = rep.runs.front().f1_per_class.size();
    rep.mean_f1_per_class.assign(nc, 0.0);
    rep.mean_macro_f1 = 0.0;
    for (const RunResult& r : rep.runs) {
        rep.mean_macro_f1 += r.macro_f1;
        for (size_t c = 0; c < nc; ++c) rep.mean_f1_per_class[c] += r.f1_per_class[c];
    }
    rep.mean_macro_f1 /= static_cast<double>(n);
    for (double& v : rep.mean_f1_per_class) v /= static_cast<double>(n);
    double ss = 0.0;
    for (const RunResult& r : rep.runs) {
        const double d = r.macro_f1 - rep.mean_macro_f1;
        ss += d * d;
    }
    rep.std_macro_f1 = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
}

constexpr uint64_t kRunSeeds[5] = {42, 43, 44, 45, 46};

}  // namespace

TrainValView trainval_view(const PreparedData& data) {
    TrainValView view;
    view.data = &data;
    view.train = data.split.train;
    view.val = data.split.val;
    return view;
}

AblationResult run_ablation(const TrainValView& view, const PipelineConfig& cfg) {
    const PreparedData& data = *view.data;
    const int delays[3] = {4, 8, 16};
    const int centers[4] = {0, 10, 25, 50};
    const double sigmas[3] = {0.1, 0.3, 1.0};
    const int ranks[3] = {8, 16, 32};

    // Record order: training rows first, then validation.
    std::vector<size_t> rec_idx = view.train;
    rec_idx.insert(rec_idx.end(), view.val.begin(), view.val.end());
    std::vector<int> local_labels;
    local_labels.reserve(rec_idx.size());
    for (size_t gi : rec_idx) local_labels.push_back(data.labels.at(gi));
    std::vector<size_t> local_train(view.train.size()), local_val(view.val.size());
    for (size_t i = 0; i < local_train.size(); ++i) local_train[i] = i;
    for (size_t i = 0; i < local_val.size(); ++i) local_val[i] = local_train.size() + i;

    // val macro-F1 per (delay, centers, sigma, rank); sigma collapses to one
    // slot when there are no RBF observables, so those cells are trained once.
    double scores[3][4][3][3];
    for (auto& a : scores)
        for (auto& b : a)
            for (auto& c : b)
                for (double& v : c) v = std::numeric_limits<double>::quiet_NaN();

    int dict_no = 0;
    for (int di = 0; di < 3; ++di)
        for (int ci = 0; ci < 4; ++ci) {
            const int n_sigmas = centers[ci] == 0 ? 1 : 3;
            for (int si = 0; si < n_sigmas; ++si) {
                DictionaryConfig dict = cfg.dict;
                dict.delay = delays[di];
                dict.rbf_centers = centers[ci];
                dict.rbf_sigma = sigmas[si];
                ++dict_no;
                std::fprintf(stderr,
                             "[ablation] dictionary %d/30 (delay %d, centers %d, sigma %g)\n",
                             dict_no, dict.delay, dict.rbf_centers, dict.rbf_sigma);

                // One Gram pass per window serves all three ranks.
                std::vector<std::vector<Mat>> feats(3);
                bool feats_ok = true;
                try {
                    for (auto& f : feats) f.reserve(rec_idx.size());
                    for (size_t gi : rec_idx) {
                        const WindowSet ws = segment(data.signals.at(gi),
                                                     cfg.window_seconds, cfg.stride_seconds);
                        std::vector<std::vector<std::vector<double>>> rows(3);
                        for (const auto& w : ws.windows) {
                            const EdmdGram gram = edmd_gram(w, data.fs, dict);
                            for (int ri = 0; ri < 3; ++ri)
                                rows[static_cast<size_t>(ri)].push_back(features_from_eigvals(
                                    edmd_eigvals(gram, ranks[ri], cfg.ridge), gram.dt,
                                    cfg.top_k));
                        }
                        for (int ri = 0; ri < 3; ++ri)
                            feats[static_cast<size_t>(ri)].push_back(
                                rows_to_mat(rows[static_cast<size_t>(ri)]));
                    }
                } catch (const std::exception& e) {
                    std::fprintf(stderr, "[ablation] dictionary failed: %s\n", e.what());
                    feats_ok = false;
                }
                if (!feats_ok) continue;  // all ranks of this dictionary stay NaN

                for (int ri = 0; ri < 3; ++ri) {
                    try {
                        std::vector<Mat> tokens = feats[static_cast<size_t>(ri)];
                        const FeatureScaler sc = fit_scaler(tokens, local_train);
                        apply_scaler(tokens, sc);
                        const LabeledSet train_set = subset(tokens, local_labels, local_train);
                        const LabeledSet val_set = subset(tokens, local_labels, local_val);
                        Classifier model = make_system_model(
                            SystemKind::KoopmanTx, tokens.front().cols,
                            tokens.front().rows, data.n_classes(), cfg, kRunSeeds[0]);
                        TrainConfig tc = cfg.train;
                        tc.seed = kRunSeeds[0];
                        tc.max_epochs = cfg.ablation_max_epochs;
                        tc.patience = cfg.ablation_patience;
                        train_classifier(model, train_set, val_set, tc);
                        const Metrics m = evaluate_classifier(model, val_set);
                        scores[di][ci][si][ri] = m.macro_f1;
                    } catch (const std::exception& e) {
                        std::fprintf(stderr, "[ablation] cell failed (rank %d): %s\n",
                                     ranks[ri], e.what());
                    }
                }
            }
        }

    AblationResult result;
    bool have_winner = false;
    for (int di = 0; di < 3; ++di)
        for (int ci = 0; ci < 4; ++ci)
            for (int si = 0; si < 3; ++si)
                for (int ri = 0; ri < 3; ++ri) {
                    AblationCell cell;
                    cell.delay = delays[di];
                    cell.rbf_centers = centers[ci];
                    cell.rbf_sigma = sigmas[si];
                    cell.svd_rank = ranks[ri];
                    cell.val_macro_f1 = scores[di][ci][centers[ci] == 0 ? 0 : si][ri];
                    result.cells.push_back(cell);
                    if (std::isnan(cell.val_macro_f1)) continue;
                    // Argmax on validation F1; ties prefer the smaller
                    // (delay, rbf_centers, svd_rank), then first enumerated.
                    const AblationCell& w = result.winner;
                    const bool better =
                        !have_winner || cell.val_macro_f1 > w.val_macro_f1 ||
                        (cell.val_macro_f1 == w.val_macro_f1 &&
                         std::array<int, 3>{cell.delay, cell.rbf_centers, cell.svd_rank} <
                             std::array<int, 3>{w.delay, w.rbf_centers, w.svd_rank});
                    if (better) {
                        result.winner = cell;
                        have_winner = true;
                    }
                }
    if (!have_winner) throw DataError("run_ablation: every grid cell failed");
    return result;
}

void write_winner_json(const std::string& path, const AblationCell& winner) {
    json j;
    j["delay"] = winner.delay;
    j["rbf_centers"] = winner.rbf_centers;
    j["rbf_sigma"] = winner.rbf_sigma;
    j["svd_rank"] = winner.svd_rank;
    j["val_macro_f1"] = winner.val_macro_f1;
    std::ofstream out(path);
    if (!out.good()) throw DataError("cannot write " + path);
    out << j.dump(1) << "\n";
}

void write_ablation_csv(const std::string& path, const AblationResult& result) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw DataError("cannot write " + path);
    std::fputs("delay, rbf_centers, rbf_sigma, svd_rank, val_macro_f1\n", f);
    for (const AblationCell& c : result.cells)
        std::fprintf(f, "%d, %d, %.17g, %d, %.17g\n", c.delay, c.rbf_centers,
                     c.rbf_sigma, c.svd_rank, c.val_macro_f1);
    std::fclose(f);
}

ExperimentReport run_system(SystemKind system, const PreparedData& data,
                            const PipelineConfig& cfg, const std::string& out_dir) {
    ExperimentReport rep;
    rep.system = system;
    rep.task = data.task;

    std::vector<Mat> tokens;
    if (system == SystemKind::KoopmanTxAblated) {
        const AblationResult ab = run_ablation(trainval_view(data), cfg);
        std::fprintf(stderr,
                     "[ablation] winner: delay %d, centers %d, sigma %g, rank %d "
                     "(val macro-F1 %.4f)\n",
                     ab.winner.delay, ab.winner.rbf_centers, ab.winner.rbf_sigma,
                     ab.winner.svd_rank, ab.winner.val_macro_f1);
        if (!out_dir.empty()) {
            write_ablation_csv(out_dir + "/ablation.csv", ab);
            write_winner_json(out_dir + "/winner.json", ab.winner);
        }
        DictionaryConfig dict = cfg.dict;
        dict.delay = ab.winner.delay;
        dict.rbf_centers = ab.winner.rbf_centers;
        dict.rbf_sigma = ab.winner.rbf_sigma;
        tokens = build_koopman_tokens(data, cfg, dict, ab.winner.svd_rank);
    } else {
        tokens = build_tokens(data, system, cfg);
    }

    if (system != SystemKind::RnnRaw) {
        const FeatureScaler sc = fit_scaler(tokens, data.split.train);
        apply_scaler(tokens, sc);
    }

    for (uint64_t seed : kRunSeeds) {
        try {
            rep.runs.push_back(one_run(system, tokens, data, cfg, seed));
        } catch (const std::exception& e) {
            throw std::runtime_error("system " + system_name(system) + ", run seed " +
                                     std::to_string(seed) + ": " + e.what());
        }
        std::fprintf(stderr, "[%s] seed %llu: test macro-F1 %.4f (%.1f s)\n",
                     system_name(system).c_str(),
                     static_cast<unsigned long long>(seed), rep.runs.back().macro_f1,
                     rep.runs.back().wall_clock_s);
    }
    finish_report(rep);
    return rep;
}

void write_report_csv(const std::string& path,
                      const std::vector<ExperimentReport>& reports) {
    if (reports.empty()) throw DataError("write_report_csv: no reports");
    const size_t nc = reports.front().mean_f1_per_class.size();
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw DataError("cannot write " + path);
    std::fputs("system, task, run_seed, macro_f1", f);
    for (size_t c = 0; c < nc; ++c) std::fprintf(f, ", f1_class_%zu", c);
    std::fputs(", wall_clock_s\n", f);
    for (const ExperimentReport& rep : reports)
        for (const RunResult& run : rep.runs) {
            std::fprintf(f, "%s, %s, %llu, %.17g", system_name(rep.system).c_str(),
                         task_name(rep.task).c_str(),
                         static_cast<unsigned long long>(run.seed), run.macro_f1);
            for (size_t c = 0; c < nc; ++c)
                std::fprintf(f, ", %.17g", run.f1_per_class.at(c));
            std::fprintf(f, ", %.3f\n", run.wall_clock_s);
        }
    std::fclose(f);
}

void write_summary_csv(const std::string& path,
                       const std::vector<ExperimentReport>& reports) {
    if (reports.empty()) throw DataError("write_summary_csv: no reports");
    const size_t nc = reports.front().mean_f1_per_class.size();
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw DataError("cannot write " + path);
    std::fputs("system, task, mean_macro_f1, std_macro_f1", f);
    for (size_t c = 0; c < nc; ++c) std::fprintf(f, ", mean_f1_class_%zu", c);
    std::fputs("\n", f);
    for (const ExperimentReport& rep : reports) {
        std::fprintf(f, "%s, %s, %.17g, %.17g", system_name(rep.system).c_str(),
                     task_name(rep.task).c_str(), rep.mean_macro_f1, rep.std_macro_f1);
        for (size_t c = 0; c < nc; ++c)
            std::fprintf(f, ", %.17g", rep.mean_f1_per_class.at(c));
        std::fputs("\n", f);
    }
    std::fclose(f);
}

std::vector<ExperimentReport> run_compare(const std::vector<RawRecord>& records,
                                          Task task, const PipelineConfig& cfg,
                                          const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const PreparedData data = prepare_data(records, task, cfg);
    std::fprintf(stderr, "[compare] %zu records kept (%zu train / %zu val / %zu test)\n",
                 data.signals.size(), data.split.train.size(), data.split.val.size(),
                 data.split.test.size());

    std::vector<ExperimentReport> reports;
    for (SystemKind system : kAllSystems) {
        std::fprintf(stderr, "[compare] running %s\n", system_name(system).c_str());
        reports.push_back(run_system(system, data, cfg, out_dir));
    }
    write_report_csv(out_dir + "/report.csv", reports);
    write_summary_csv(out_dir + "/summary.csv", reports);

    // Published full-scale F1 for each system (binary, four-class), printed
    // as context only: desk-scale synthetic runs are not comparable to them.
    static const double kReferenceF1[5][2] = {{0.750, 0.700},
                                              {0.697, 0.771},
                                              {0.677, 0.533},
                                              {0.786, 0.764},
                                              {0.782, 0.700}};
    std::printf("%-18s %-7s %-24s %s\n", "system", "task", "macro-F1 (mean +/- std)",
                "full-scale reference");
    for (size_t i = 0; i < reports.size(); ++i) {
        const ExperimentReport& rep = reports[i];
        std::printf("%-18s %-7s %.4f +/- %.4f         %.3f\n",
                    system_name(rep.system).c_str(), task_name(rep.task).c_str(),
                    rep.mean_macro_f1, rep.std_macro_f1,
                    kReferenceF1[i][task == Task::Binary ? 0 : 1]);
    }
    return reports;
}

void run_train(const std::vector<RawRecord>& records, Task task,
               const PipelineConfig& cfg, const std::string& out_dir) {
    const SystemKind system = system_from_config_name(cfg.system);
    if (system == SystemKind::KoopmanTxAblated)
        throw ConfigError(
            "train operates on a fixed configuration; run `ablate` first and set "
            "delay/rbf_centers/rbf_sigma/svd_rank to the winner, with system koopman_tx");
    std::filesystem::create_directories(out_dir);
    const PreparedData data = prepare_data(records, task, cfg);

    std::vector<Mat> tokens = build_tokens(data, system, cfg);
    FeatureScaler sc;
    if (system != SystemKind::RnnRaw) {
        sc = fit_scaler(tokens, data.split.train);
        apply_scaler(tokens, sc);
    }
    save_scaler_json(sc, system, task, out_dir + "/scaler.json");

    const LabeledSet train_set = subset(tokens, data.labels, data.split.train);
    const LabeledSet val_set = subset(tokens, data.labels, data.split.val);
    Classifier model = make_system_model(system, tokens.front().cols,
                                         tokens.front().rows, data.n_classes(), cfg,
                                         cfg.train.seed);
    const TrainResult res = train_classifier(model, train_set, val_set, cfg.train);
    write_history_csv(out_dir + "/history.csv", res.history);
    save_checkpoint(model, out_dir + "/model");
    std::printf("trained %s: best epoch %d, val loss %.6g\n",
                system_name(system).c_str(), res.best_epoch, res.best_val_loss);
}

Metrics run_eval(const std::vector<RawRecord>& records, Task task,
                 const PipelineConfig& cfg, const std::string& out_dir) {
    const SystemKind system = system_from_config_name(cfg.system);
    const PreparedData data = prepare_data(records, task, cfg);

    std::vector<Mat> tokens = build_tokens(data, system, cfg);
    const FeatureScaler sc = load_scaler_json(out_dir + "/scaler.json", system, task);
    if (system != SystemKind::RnnRaw) apply_scaler(tokens, sc);

    const Classifier model = load_checkpoint(out_dir + "/model");
    if (model.n_classes() != data.n_classes())
        throw DataError("checkpoint has " + std::to_string(model.n_classes()) +
                        " classes but the task needs " +
                        std::to_string(data.n_classes()));

    const LabeledSet test_set = subset(tokens, data.labels, data.split.test);
    const Metrics m = evaluate_classifier(model, test_set);

    json j;
    j["system"] = system_name(system);
    j["task"] = task_name(task);
    j["macro_f1"] = m.macro_f1;
    j["accuracy"] = m.accuracy;
    j["f1_per_class"] = m.f1;
    std::ofstream out(out_dir + "/eval.json");
    if (!out.good()) throw DataError("cannot write " + out_dir + "/eval.json");
    out << j.dump(1) << "\n";

    std::printf("%s test macro-F1 %.4f (accuracy %.4f)\n", system_name(system).c_str(),
                m.macro_f1, m.accuracy);
    return m;
}

}  // namespace kooptx
