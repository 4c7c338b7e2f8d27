#include "kooptx/train.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <limits>

#include "kooptx/errors.hpp"
#include "kooptx/optim.hpp"
#include "kooptx/rng.hpp"

namespace kooptx {

namespace {

void check_set(const LabeledSet& set, const char* which) {
    if (set.records.empty())
        throw DataError(std::string("train: empty ") + which + " set");
    if (set.records.size() != set.labels.size())
        throw DataError(std::string("train: ") + which +
                        " set has mismatched record/label counts");
}

int argmax(const std::vector<double>& v) {
    int best = 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[static_cast<size_t>(best)]) best = static_cast<int>(i);
    return best;
}

}  // namespace

double mean_loss(const Classifier& model, const LabeledSet& set) {
    check_set(set, "evaluation");
    double total = 0.0;
    for (size_t i = 0; i < set.size(); ++i)
        total += cross_entropy(classifier_logits(model, set.records[i]), set.labels[i]);
    return total / static_cast<double>(set.size());
}

Metrics evaluate_classifier(const Classifier& model, const LabeledSet& set) {
    check_set(set, "evaluation");
    std::vector<int> pred(set.size());
    for (size_t i = 0; i < set.size(); ++i)
        pred[i] = argmax(classifier_logits(model, set.records[i]));
    return evaluate_predictions(set.labels, pred, model.n_classes());
}

TrainResult train_classifier(Classifier& model, const LabeledSet& train_set,
                             const LabeledSet& val_set, const TrainConfig& cfg) {
    if (!(cfg.lr > 0.0)) throw ConfigError("train: lr must be positive");
    if (cfg.patience < 1) throw ConfigError("train: patience must be >= 1");
    if (cfg.batch < 1) throw ConfigError("train: batch must be >= 1");
    if (cfg.max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
    check_set(train_set, "training");
    check_set(val_set, "validation");

    AdamW opt;
    opt.lr = cfg.lr;
    opt.beta1 = cfg.beta1;
    opt.beta2 = cfg.beta2;
    opt.weight_decay = cfg.weight_decay;

    Rng shuffle_rng(cfg.seed);
    std::vector<size_t> order(train_set.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainResult result;
    std::vector<double> best_params = model.params;
    double best_val = std::numeric_limits<double>::infinity();
    int since_improve = 0;
    uint64_t global_step = 0;
    std::vector<double> grads;

    const bool wants_dropout =
        model.kind == ModelKind::Transformer && model.tf.dropout > 0.0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (size_t b0 = 0; b0 < order.size(); b0 += static_cast<size_t>(cfg.batch)) {
            const size_t b1 =
                std::min(order.size(), b0 + static_cast<size_t>(cfg.batch));
            std::vector<const Mat*> records;
            std::vector<int> labels;
            records.reserve(b1 - b0);
            for (size_t i = b0; i < b1; ++i) {
                records.push_back(&train_set.records[order[i]]);
                labels.push_back(train_set.labels[order[i]]);
            }
            DropoutCtx drop;
            drop.active = wants_dropout;
            drop.seed = cfg.seed;
            drop.step = ++global_step;
            const double loss = classifier_batch_grad(model, records, labels, drop, grads);
            if (!std::isfinite(loss))
                throw NumericError("train: loss diverged to " + std::to_string(loss) +
                                   " at epoch " + std::to_string(epoch) + ", step " +
                                   std::to_string(global_step));
            opt.step(model.params, grads);
            epoch_loss += loss * static_cast<double>(b1 - b0);
        }
        epoch_loss /= static_cast<double>(train_set.size());

        const double val_loss = mean_loss(model, val_set);
        if (!std::isfinite(val_loss))
            throw NumericError("train: validation loss diverged at epoch " +
                               std::to_string(epoch));
        const double val_f1 = evaluate_classifier(model, val_set).macro_f1;
        result.history.push_back({epoch, epoch_loss, val_loss, val_f1});

        if (best_val - val_loss > 1e-6) {
            best_val = val_loss;
            best_params = model.params;
            result.best_epoch = epoch;
            since_improve = 0;
        } else if (++since_improve >= cfg.patience) {
            break;
        }
    }

    model.params = std::move(best_params);
    result.best_val_loss = best_val;
    return result;
}

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& rows) {
    FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw DataError("cannot write " + path);
    std::fprintf(f, "epoch, train_loss, val_loss, val_macro_f1\n");
    for (const auto& r : rows)
        std::fprintf(f, "%d, %.17g, %.17g, %.17g\n", r.epoch, r.train_loss, r.val_loss,
                     r.val_macro_f1);
    std::fclose(f);
}

namespace {

// Parameters are stored little-endian regardless of host order.
void byteswap_if_needed(std::vector<double>& values) {
    if constexpr (std::endian::native == std::endian::little) return;
    for (double& d : values) {
        uint64_t u;
        std::memcpy(&u, &d, 8);
        u = __builtin_bswap64(u);
        std::memcpy(&d, &u, 8);
    }
}

}  // namespace

void save_checkpoint(const Classifier& model, const std::string& prefix) {
    using nlohmann::json;
    json j;
    j["kind"] = model.kind == ModelKind::Transformer ? "transformer" : "rnn";
    if (model.kind == ModelKind::Transformer) {
        j["config"] = {{"layers", model.tf.layers},       {"heads", model.tf.heads},
                       {"emb_dim", model.tf.emb_dim},     {"ff_dim", model.tf.ff_dim},
                       {"dropout", model.tf.dropout},     {"n_classes", model.tf.n_classes},
                       {"max_tokens", model.tf.max_tokens}, {"in_dim", model.tf.in_dim}};
    } else {
        j["config"] = {{"hidden", model.rnn.hidden},
                       {"n_classes", model.rnn.n_classes},
                       {"in_dim", model.rnn.in_dim}};
    }
    j["total"] = model.params.size();
    json tensors = json::array();
    for (const auto& v : model.views)
        tensors.push_back({{"name", v.name}, {"offset", v.offset}, {"shape", v.shape}});
    j["tensors"] = tensors;

    std::ofstream mf(prefix + ".json");
    if (!mf) throw DataError("cannot write " + prefix + ".json");
    mf << j.dump(1) << "\n";

    std::vector<double> out = model.params;
    byteswap_if_needed(out);
    std::ofstream bf(prefix + ".bin", std::ios::binary);
    if (!bf) throw DataError("cannot write " + prefix + ".bin");
    bf.write(reinterpret_cast<const char*>(out.data()),
             static_cast<std::streamsize>(out.size() * sizeof(double)));
}

Classifier load_checkpoint(const std::string& prefix) {
    using nlohmann::json;
    std::ifstream mf(prefix + ".json");
    if (!mf) throw DataError("cannot open " + prefix + ".json");
    json j;
    try {
        mf >> j;
    } catch (const json::exception& e) {
        throw DataError(prefix + ".json: " + e.what());
    }

    try {
        Classifier model;
        const std::string kind = j.at("kind").get<std::string>();
        const auto& c = j.at("config");
        if (kind == "transformer") {
            TransformerConfig cfg;
            cfg.layers = c.at("layers").get<int>();
            cfg.heads = c.at("heads").get<int>();
            cfg.emb_dim = c.at("emb_dim").get<int>();
            cfg.ff_dim = c.at("ff_dim").get<int>();
            cfg.dropout = c.at("dropout").get<double>();
            cfg.n_classes = c.at("n_classes").get<int>();
            cfg.max_tokens = c.at("max_tokens").get<int>();
            cfg.in_dim = c.at("in_dim").get<int>();
            model = make_transformer(cfg, 0);
        } else if (kind == "rnn") {
            RnnConfig cfg;
            cfg.hidden = c.at("hidden").get<int>();
            cfg.n_classes = c.at("n_classes").get<int>();
            cfg.in_dim = c.at("in_dim").get<int>();
            model = make_rnn(cfg, 0);
        } else {
            throw DataError(prefix + ".json: unknown model kind '" + kind + "'");
        }

        const auto total = j.at("total").get<size_t>();
        if (total != model.params.size())
            throw DataError(prefix + ".json: parameter count " + std::to_string(total) +
                            " does not match the declared config");

        std::ifstream bf(prefix + ".bin", std::ios::binary);
        if (!bf) throw DataError("cannot open " + prefix + ".bin");
        bf.read(reinterpret_cast<char*>(model.params.data()),
                static_cast<std::streamsize>(total * sizeof(double)));
        if (static_cast<size_t>(bf.gcount()) != total * sizeof(double))
            throw DataError(prefix + ".bin: truncated parameter file");
        byteswap_if_needed(model.params);
        return model;
    } catch (const json::exception& e) {
        throw DataError(prefix + ".json: " + e.what());
    }
}

}  // namespace kooptx
