#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kooptx/metrics.hpp"
#include "kooptx/models.hpp"

namespace kooptx {

struct TrainConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double weight_decay = 0.01;
    int batch = 32;
    int max_epochs = 100;
    int patience = 10;
    uint64_t seed = 42;
};

struct LabeledSet {
    std::vector<Mat> records;  // rows = tokens or timesteps, cols = in_dim
    std::vector<int> labels;
    size_t size() const { return records.size(); }
};

struct HistoryRow {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_macro_f1 = 0.0;
};

struct TrainResult {
    std::vector<HistoryRow> history;
    int best_epoch = 0;
    double best_val_loss = 0.0;
};

// Epoch loop with seeded shuffling and AdamW. Stops once validation loss has
// not improved by more than 1e-6 for `patience` consecutive epochs, and
// leaves the model at its best-validation-epoch weights. A non-finite loss
// aborts with diagnostics.
TrainResult train_classifier(Classifier& model, const LabeledSet& train_set,
                             const LabeledSet& val_set, const TrainConfig& cfg);

// Mean cross-entropy over a set, dropout off.
double mean_loss(const Classifier& model, const LabeledSet& set);

// Argmax predictions scored against the labels.
Metrics evaluate_classifier(const Classifier& model, const LabeledSet& set);

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& rows);

// Checkpoint = <prefix>.json manifest (kind, config, tensor offset table)
// plus <prefix>.bin, the flat parameter vector as little-endian 64-bit
// floats.
void save_checkpoint(const Classifier& model, const std::string& prefix);
Classifier load_checkpoint(const std::string& prefix);

}  // namespace kooptx
