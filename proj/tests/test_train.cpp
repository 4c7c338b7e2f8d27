#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "kooptx/errors.hpp"
#include "kooptx/models.hpp"
#include "kooptx/rng.hpp"
#include "kooptx/train.hpp"

using namespace kooptx;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Two well-separated clusters of constant short sequences.
LabeledSet blob_set(size_t per_class, uint64_t seed, size_t steps = 3) {
    Rng rng(seed);
    LabeledSet set;
    for (size_t i = 0; i < 2 * per_class; ++i) {
        const int label = i < per_class ? 0 : 1;
        const double cx = label == 0 ? 2.0 : -2.0;
        Mat rec(steps, 2);
        for (size_t t = 0; t < steps; ++t) {
            rec(t, 0) = cx + 0.3 * rng.normal();
            rec(t, 1) = cx + 0.3 * rng.normal();
        }
        set.records.push_back(std::move(rec));
        set.labels.push_back(label);
    }
    return set;
}

Classifier small_rnn(uint64_t seed, int n_classes = 2) {
    RnnConfig cfg;
    cfg.hidden = 8;
    cfg.in_dim = 2;
    cfg.n_classes = n_classes;
    return make_rnn(cfg, seed);
}

}  // namespace

TEST_CASE("patience-one early stopping restores the best epoch") {
    // Train and validation share one record but disagree on its label, so
    // every step that improves training strictly worsens validation.
    Classifier model = small_rnn(5);
    Mat rec(4, 2);
    for (size_t t = 0; t < 4; ++t) {
        rec(t, 0) = 1.0;
        rec(t, 1) = -0.5;
    }
    LabeledSet train;
    train.records.push_back(rec);
    train.labels.push_back(0);
    LabeledSet val;
    val.records.push_back(rec);
    val.labels.push_back(1);

    TrainConfig cfg;
    cfg.lr = 1e-2;
    cfg.weight_decay = 0.0;
    cfg.batch = 1;
    cfg.max_epochs = 50;
    cfg.patience = 1;
    const TrainResult res = train_classifier(model, train, val, cfg);

    // Epoch 1 sets the best; epoch 2 fails to improve; stop.
    REQUIRE(res.history.size() == 2);
    CHECK(res.best_epoch == 1);
    CHECK(res.history[0].epoch == 1);
    CHECK(res.history[1].epoch == 2);
    CHECK(res.history[1].val_loss > res.history[0].val_loss);
    CHECK(res.best_val_loss == res.history[0].val_loss);

    // The returned weights are the epoch-1 snapshot: re-evaluating
    // validation loss reproduces the recorded best exactly.
    CHECK(mean_loss(model, val) == res.best_val_loss);
}

TEST_CASE("rnn separates two blobs") {
    const LabeledSet train = blob_set(20, 101);
    const LabeledSet val = blob_set(5, 202);
    Classifier model = small_rnn(7);

    TrainConfig cfg;
    cfg.lr = 1e-2;
    cfg.batch = 8;
    cfg.max_epochs = 60;
    cfg.patience = 10;
    const TrainResult res = train_classifier(model, train, val, cfg);
    REQUIRE(!res.history.empty());

    const Metrics m = evaluate_classifier(model, train);
    CHECK(m.accuracy >= 0.99);
    CHECK(m.macro_f1 >= 0.99);
    CHECK(evaluate_classifier(model, val).accuracy >= 0.99);
}

TEST_CASE("transformer trains deterministically with dropout active") {
    const LabeledSet train = blob_set(12, 303);
    const LabeledSet val = blob_set(4, 404);

    TransformerConfig tcfg;
    tcfg.layers = 1;
    tcfg.heads = 2;
    tcfg.emb_dim = 8;
    tcfg.ff_dim = 16;
    tcfg.in_dim = 2;
    tcfg.max_tokens = 3;
    tcfg.dropout = 0.1;

    TrainConfig cfg;
    cfg.lr = 3e-3;
    cfg.batch = 8;
    cfg.max_epochs = 40;
    cfg.patience = 8;
    cfg.seed = 42;

    Classifier a = make_transformer(tcfg, 15);
    const TrainResult ra = train_classifier(a, train, val, cfg);
    Classifier b = make_transformer(tcfg, 15);
    const TrainResult rb = train_classifier(b, train, val, cfg);

    // Same seeds, same data: bit-identical histories and final weights.
    REQUIRE(ra.history.size() == rb.history.size());
    for (size_t i = 0; i < ra.history.size(); ++i) {
        CHECK(ra.history[i].train_loss == rb.history[i].train_loss);
        CHECK(ra.history[i].val_loss == rb.history[i].val_loss);
        CHECK(ra.history[i].val_macro_f1 == rb.history[i].val_macro_f1);
    }
    CHECK(a.params == b.params);
    CHECK(ra.best_epoch == rb.best_epoch);

    // A different shuffle seed takes a different path.
    TrainConfig cfg2 = cfg;
    cfg2.seed = 43;
    Classifier c = make_transformer(tcfg, 15);
    const TrainResult rc = train_classifier(c, train, val, cfg2);
    CHECK(rc.history[0].train_loss != ra.history[0].train_loss);

    CHECK(evaluate_classifier(a, train).accuracy >= 0.95);
}

TEST_CASE("non-finite losses abort with a numeric error") {
    Classifier model = small_rnn(9);
    model.params[0] = std::nan("");
    const LabeledSet train = blob_set(4, 11);
    const LabeledSet val = blob_set(2, 12);
    TrainConfig cfg;
    cfg.max_epochs = 3;
    CHECK_THROWS_AS(train_classifier(model, train, val, cfg), NumericError);
}

TEST_CASE("training input validation") {
    Classifier model = small_rnn(3);
    const LabeledSet ok = blob_set(3, 21);
    LabeledSet empty;
    LabeledSet mismatched = ok;
    mismatched.labels.pop_back();
    LabeledSet bad_label = ok;
    bad_label.labels[0] = 2;  // out of range for two classes

    TrainConfig cfg;
    CHECK_THROWS_AS(train_classifier(model, empty, ok, cfg), DataError);
    CHECK_THROWS_AS(train_classifier(model, ok, empty, cfg), DataError);
    CHECK_THROWS_AS(train_classifier(model, mismatched, ok, cfg), DataError);
    CHECK_THROWS_AS(train_classifier(model, bad_label, ok, cfg), DataError);

    TrainConfig bad = cfg;
    bad.batch = 0;
    CHECK_THROWS_AS(train_classifier(model, ok, ok, bad), ConfigError);
    bad = cfg;
    bad.patience = 0;
    CHECK_THROWS_AS(train_classifier(model, ok, ok, bad), ConfigError);
    bad = cfg;
    bad.lr = -1.0;
    CHECK_THROWS_AS(train_classifier(model, ok, ok, bad), ConfigError);
}

TEST_CASE("history csv layout") {
    std::vector<HistoryRow> rows;
    rows.push_back({1, 0.5, 0.25, 1.0});
    rows.push_back({2, 0.125, 0.0625, 0.875});
    const std::string path = "/tmp/kooptx_history_test.csv";
    write_history_csv(path, rows);
    const std::string text = slurp(path);

    std::string expected = "epoch, train_loss, val_loss, val_macro_f1\n";
    for (const auto& r : rows) {
        char line[160];
        std::snprintf(line, sizeof line, "%d, %.17g, %.17g, %.17g\n", r.epoch,
                      r.train_loss, r.val_loss, r.val_macro_f1);
        expected += line;
    }
    CHECK(text == expected);
    CHECK(text.substr(0, text.find('\n')) == "epoch, train_loss, val_loss, val_macro_f1");
    std::remove(path.c_str());
}

TEST_CASE("checkpoints round-trip bit-exactly") {
    TransformerConfig tcfg;
    tcfg.layers = 1;
    tcfg.heads = 2;
    tcfg.emb_dim = 8;
    tcfg.ff_dim = 16;
    tcfg.in_dim = 3;
    tcfg.max_tokens = 4;
    tcfg.n_classes = 4;
    const Classifier model = make_transformer(tcfg, 55);

    const std::string p1 = "/tmp/kooptx_ckpt_a";
    const std::string p2 = "/tmp/kooptx_ckpt_b";
    save_checkpoint(model, p1);
    const Classifier loaded = load_checkpoint(p1);
    save_checkpoint(loaded, p2);

    CHECK(slurp(p1 + ".json") == slurp(p2 + ".json"));
    CHECK(slurp(p1 + ".bin") == slurp(p2 + ".bin"));
    CHECK(loaded.kind == ModelKind::Transformer);
    CHECK(loaded.params == model.params);

    Rng rng(77);
    Mat rec(3, 3);
    for (double& v : rec.data) v = rng.normal();
    const auto la = classifier_logits(model, rec);
    const auto lb = classifier_logits(loaded, rec);
    REQUIRE(la.size() == lb.size());
    for (size_t i = 0; i < la.size(); ++i) CHECK(la[i] == lb[i]);

    // Same for the recurrent model.
    const Classifier rnn = small_rnn(66, 3);
    const std::string p3 = "/tmp/kooptx_ckpt_r";
    save_checkpoint(rnn, p3);
    const Classifier rload = load_checkpoint(p3);
    CHECK(rload.kind == ModelKind::Rnn);
    CHECK(rload.params == rnn.params);
    Mat seq(5, 2);
    for (double& v : seq.data) v = rng.normal();
    const auto ra = classifier_logits(rnn, seq);
    const auto rb = classifier_logits(rload, seq);
    for (size_t i = 0; i < ra.size(); ++i) CHECK(ra[i] == rb[i]);

    CHECK_THROWS_AS(load_checkpoint("/tmp/kooptx_ckpt_missing"), DataError);
    {
        std::ofstream bad("/tmp/kooptx_ckpt_bad.json");
        bad << "{ not json";
    }
    CHECK_THROWS_AS(load_checkpoint("/tmp/kooptx_ckpt_bad"), DataError);

    for (const std::string& p : {p1, p2, p3}) {
        std::remove((p + ".json").c_str());
        std::remove((p + ".bin").c_str());
    }
    std::remove("/tmp/kooptx_ckpt_bad.json");
}
