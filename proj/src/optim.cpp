#include "kooptx/optim.hpp"

#include <cmath>
#include <string>

#include "kooptx/errors.hpp"
#include "kooptx/kernels.hpp"

namespace kooptx {

void AdamW::step(std::vector<double>& params, const std::vector<double>& grads) {
    if (grads.size() != params.size())
        throw ConfigError("adamw: gradient size " + std::to_string(grads.size()) +
                          " does not match parameter size " +
                          std::to_string(params.size()));
    if (m.empty()) {
        m.assign(params.size(), 0.0);
        v.assign(params.size(), 0.0);
    } else if (m.size() != params.size()) {
        throw ConfigError("adamw: optimizer state belongs to a different model");
    }

    for (double g : grads)
        if (!std::isfinite(g))
            throw NumericError("adamw: non-finite gradient at step " +
                               std::to_string(t + 1) + "; step aborted");

    ++t;
    const double bias1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bias2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    kernels::active().adamw_update(params.data(), grads.data(), m.data(), v.data(),
                                   params.size(), lr, beta1, beta2, eps, weight_decay,
                                   bias1, bias2);
}

}  // namespace kooptx
