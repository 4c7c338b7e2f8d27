#pragma once

#include <cstdint>
#include <vector>

namespace kooptx {

// AdamW with bias correction and decoupled weight decay (decay scales the
// parameter directly, outside the moment estimates), eps = 1e-8.
struct AdamW {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;

    int64_t t = 0;  // completed steps
    std::vector<double> m, v;

    // One update over the full parameter vector. Moments are allocated on
    // first use. Non-finite gradients abort the step without touching
    // parameters or moments.
    void step(std::vector<double>& params, const std::vector<double>& grads);
};

}  // namespace kooptx
