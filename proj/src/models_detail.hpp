#pragma once

// Internal helpers shared by the transformer and RNN translation units:
// parameter-table construction, Xavier init, and the small nonlinearities.

#include <cmath>
#include <cstdint>
#include <vector>

#include "kooptx/models.hpp"
#include "kooptx/rng.hpp"

namespace kooptx::detail {

// Appends a named tensor to the layout and returns its offset.
inline size_t add_view(std::vector<ParamView>& views, size_t& total,
                       const std::string& name, std::vector<size_t> shape) {
    ParamView v;
    v.name = name;
    v.offset = total;
    v.shape = std::move(shape);
    v.size = 1;
    for (size_t d : v.shape) v.size *= d;
    total += v.size;
    views.push_back(std::move(v));
    return views.back().offset;
}

inline void xavier_fill(Rng& rng, double* w, size_t fan_in, size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (size_t i = 0; i < fan_in * fan_out; ++i) w[i] = rng.uniform(-limit, limit);
}

inline double gelu(double x) {
    return 0.5 * x * (1.0 + std::erf(x * 0.7071067811865476));
}

// d/dx gelu = Φ(x) + x·φ(x)
inline double gelu_grad(double x) {
    const double phi_big = 0.5 * (1.0 + std::erf(x * 0.7071067811865476));
    const double phi_small = 0.3989422804014327 * std::exp(-0.5 * x * x);
    return phi_big + x * phi_small;
}

// Inverted dropout shared by forward and backward: element idx at site tag
// is kept iff its counter-based uniform clears p, and kept values are scaled
// by 1/(1-p). Applying the same function to gradients is exactly the mask's
// adjoint.
inline void apply_dropout(double* x, size_t n, double p, const DropoutCtx& ctx,
                          uint64_t tag) {
    if (!ctx.active || p <= 0.0) return;
    const double keep_scale = 1.0 / (1.0 - p);
    for (size_t i = 0; i < n; ++i) {
        if (hash_uniform(ctx.seed, ctx.step, tag, i) < p)
            x[i] = 0.0;
        else
            x[i] *= keep_scale;
    }
}

// Kind-specific implementations behind the classifier_* dispatchers.
std::vector<double> tf_logits(const Classifier& model, const Mat& record,
                              const DropoutCtx& drop);
double tf_batch_grad(const Classifier& model, const std::vector<const Mat*>& records,
                     const std::vector<int>& labels, const DropoutCtx& drop,
                     std::vector<double>& grads);
std::vector<double> rnn_logits(const Classifier& model, const Mat& record);
double rnn_batch_grad(const Classifier& model, const std::vector<const Mat*>& records,
                      const std::vector<int>& labels, std::vector<double>& grads);

}  // namespace kooptx::detail
