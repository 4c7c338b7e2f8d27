#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kooptx/mat.hpp"

namespace kooptx {

enum class ModelKind { Transformer, Rnn };

struct TransformerConfig {
    int layers = 4;
    int heads = 8;
    int emb_dim = 128;
    int ff_dim = 256;
    double dropout = 0.1;
    int n_classes = 2;
    int max_tokens = 9;
    int in_dim = 0;  // feature dimension of each token, set from the data
};

struct RnnConfig {
    int hidden = 64;
    int n_classes = 2;
    int in_dim = 1;  // raw samples arrive one per timestep
};

// A named slice of the flat parameter vector. Keeping every tensor in one
// contiguous buffer lets the optimizer run fused updates and makes the
// checkpoint's offset table trivial.
struct ParamView {
    std::string name;
    size_t offset = 0;
    std::vector<size_t> shape;
    size_t size = 0;
};

struct Classifier {
    ModelKind kind = ModelKind::Transformer;
    TransformerConfig tf;  // meaningful when kind == Transformer
    RnnConfig rnn;         // meaningful when kind == Rnn
    std::vector<double> params;
    std::vector<ParamView> views;

    int n_classes() const {
        return kind == ModelKind::Transformer ? tf.n_classes : rnn.n_classes;
    }
};

// Deterministic Xavier-uniform initialization from the seed; biases and
// layer-norm shifts start at zero, layer-norm gains at one.
Classifier make_transformer(const TransformerConfig& cfg, uint64_t seed);
Classifier make_rnn(const RnnConfig& cfg, uint64_t seed);

// Dropout is realized as a counter-based mask: keep/drop of element `idx` at
// site `tag` is a pure function of (seed, step, tag, idx), so training is
// bit-reproducible and inference (active = false) touches no RNG state.
struct DropoutCtx {
    bool active = false;
    uint64_t seed = 0;
    uint64_t step = 0;
};

// Affine projection of per-token features plus sinusoidal positional
// encoding (channel 2i: sin(p/10000^{2i/emb}), channel 2i+1: cos).
Mat embed_tokens(const Mat& features, const Mat& w, const std::vector<double>& b);

// Scaled dot-product attention softmax(Q Kᵀ/√d_k) V with row-max
// stabilization; d_k is the column count of K.
Mat attention(const Mat& q, const Mat& k, const Mat& v);

// −log softmax(logits)[label] with log-sum-exp stabilization.
double cross_entropy(const std::vector<double>& logits, int label);

// Forward one record (rows = tokens or timesteps, cols = in_dim) to logits.
std::vector<double> classifier_logits(const Classifier& model, const Mat& record,
                                      const DropoutCtx& drop = {});

// Mean cross-entropy over the batch plus its exact gradient w.r.t. every
// parameter (written into grads, which is resized and zeroed). Records may
// differ in length; the transformer attends within each record only.
double classifier_batch_grad(const Classifier& model,
                             const std::vector<const Mat*>& records,
                             const std::vector<int>& labels, const DropoutCtx& drop,
                             std::vector<double>& grads);

}  // namespace kooptx
