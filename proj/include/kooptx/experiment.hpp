#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kooptx/dataset.hpp"
#include "kooptx/dictionary.hpp"
#include "kooptx/labels.hpp"
#include "kooptx/mat.hpp"
#include "kooptx/signal.hpp"
#include "kooptx/train.hpp"
#include "kooptx/wavelet.hpp"

namespace kooptx {

// Every pipeline hyperparameter in one document. The defaults are the
// reference configuration; a JSON config file may override any subset and
// unknown keys are rejected.
struct PipelineConfig {
    // Data shape and synthesis.
    double fs = 125.0;
    double record_seconds = 10.0;
    double window_seconds = 2.0;
    double stride_seconds = 1.0;
    int records_per_class = 50;
    uint64_t base_seed = 42;

    // Koopman dictionary and solve.
    DictionaryConfig dict;  // delay 8, poly degree 2, no RBFs, sigma 0.3
    int svd_rank = 16;
    double ridge = 1e-4;
    int top_k = 8;

    // Wavelet features.
    WaveletSpec wavelet;  // DB4, 4 levels

    // Classifiers.
    int layers = 4;
    int heads = 8;
    int emb_dim = 128;
    int ff_dim = 256;
    double dropout = 0.1;
    int rnn_hidden = 64;

    // Optimization (shared by every system).
    TrainConfig train;

    // Reduced budget for ablation grid cells; the winner is retrained with
    // the full protocol above.
    int ablation_max_epochs = 12;
    int ablation_patience = 3;

    // Splitting.
    double train_ratio = 0.70;
    double val_ratio = 0.15;
    double test_ratio = 0.15;
    uint64_t split_seed = 42;

    // System operated on by the single-model train/eval entry points.
    std::string system = "koopman_tx";
};

PipelineConfig load_pipeline_config(const std::string& path);
void validate_pipeline_config(const PipelineConfig& cfg);

enum class SystemKind { WaveletTx, KoopmanTx, HybridTx, KoopmanTxAblated, RnnRaw };
extern const SystemKind kAllSystems[5];
std::string system_name(SystemKind s);                  // report row identity
SystemKind system_from_config_name(const std::string&);  // snake_case config value

// Labeled, z-scored, fixed-length records with their split.
struct PreparedData {
    std::vector<Signal> signals;  // kept records, truncated + z-scored
    std::vector<int> labels;
    Task task = Task::Binary;
    DatasetSplit split;
    size_t excluded = 0;
    double fs = 0.0;
    int n_classes() const { return task_n_classes(task); }
};

PreparedData prepare_data(const std::vector<RawRecord>& records, Task task,
                          const PipelineConfig& cfg);

// Per-record token matrices (rows = tokens, cols = feature dim).
std::vector<Mat> build_tokens(const PreparedData& data, SystemKind system,
                              const PipelineConfig& cfg);
std::vector<Mat> build_koopman_tokens(const PreparedData& data,
                                      const PipelineConfig& cfg,
                                      const DictionaryConfig& dict, int svd_rank);

// Column-wise standardization fitted on the training rows only.
struct FeatureScaler {
    std::vector<double> mean, stddev;
};
FeatureScaler fit_scaler(const std::vector<Mat>& tokens,
                         const std::vector<size_t>& train_idx);
void apply_scaler(std::vector<Mat>& tokens, const FeatureScaler& scaler);
void save_scaler_json(const FeatureScaler& scaler, SystemKind system, Task task,
                      const std::string& path);
FeatureScaler load_scaler_json(const std::string& path, SystemKind expected_system,
                               Task expected_task);

struct RunResult {
    uint64_t seed = 0;
    double macro_f1 = 0.0;
    std::vector<double> f1_per_class;
    double wall_clock_s = 0.0;
};

struct ExperimentReport {
    SystemKind system = SystemKind::WaveletTx;
    Task task = Task::Binary;
    std::vector<RunResult> runs;  // seeds 42..46 in order
    double mean_macro_f1 = 0.0;
    double std_macro_f1 = 0.0;  // sample standard deviation over the runs
    std::vector<double> mean_f1_per_class;
};

struct AblationCell {
    int delay = 0;
    int rbf_centers = 0;
    double rbf_sigma = 0.0;
    int svd_rank = 0;
    double val_macro_f1 = 0.0;  // NaN marks a failed cell
};

struct AblationResult {
    std::vector<AblationCell> cells;  // delay -> centers -> sigma -> rank order
    AblationCell winner;
};

// Train/validation-only view handed to the ablation: the type carries no
// test indices, so grid selection cannot touch the test split.
struct TrainValView {
    const PreparedData* data = nullptr;
    std::vector<size_t> train, val;
};
TrainValView trainval_view(const PreparedData& data);

AblationResult run_ablation(const TrainValView& view, const PipelineConfig& cfg);
void write_ablation_csv(const std::string& path, const AblationResult& result);
void write_winner_json(const std::string& path, const AblationCell& winner);

// One Table-1 row: 5 seeded runs of the named pipeline, test-split scores.
// KoopmanTxAblated resolves the grid on validation first; when out_dir is
// non-empty it writes ablation.csv and winner.json there.
ExperimentReport run_system(SystemKind system, const PreparedData& data,
                            const PipelineConfig& cfg, const std::string& out_dir);

void write_report_csv(const std::string& path,
                      const std::vector<ExperimentReport>& reports);
void write_summary_csv(const std::string& path,
                       const std::vector<ExperimentReport>& reports);

// All five systems -> report.csv, summary.csv, ablation.csv under out_dir.
std::vector<ExperimentReport> run_compare(const std::vector<RawRecord>& records,
                                          Task task, const PipelineConfig& cfg,
                                          const std::string& out_dir);

// Single-system entry points behind the train/eval subcommands. Training
// writes model.json/model.bin, scaler.json and history.csv under out_dir;
// evaluation reloads them and scores the test split.
void run_train(const std::vector<RawRecord>& records, Task task,
               const PipelineConfig& cfg, const std::string& out_dir);
Metrics run_eval(const std::vector<RawRecord>& records, Task task,
                 const PipelineConfig& cfg, const std::string& out_dir);

}  // namespace kooptx
