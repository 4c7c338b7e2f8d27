#include "kooptx/metrics.hpp"

#include <string>

#include "kooptx/errors.hpp"

namespace kooptx {

Metrics evaluate_predictions(const std::vector<int>& truth,
                             const std::vector<int>& predicted, int n_classes) {
    if (n_classes < 2) throw ConfigError("evaluate: need at least 2 classes");
    if (truth.empty()) throw DataError("evaluate: empty prediction set");
    if (truth.size() != predicted.size())
        throw DataError("evaluate: " + std::to_string(truth.size()) + " truths vs " +
                        std::to_string(predicted.size()) + " predictions");

    const size_t c = static_cast<size_t>(n_classes);
    Metrics m;
    m.confusion = Mat(c, c);
    for (size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= n_classes || predicted[i] < 0 ||
            predicted[i] >= n_classes)
            throw DataError("evaluate: class index out of range at record " +
                            std::to_string(i));
        m.confusion(truth[i], predicted[i]) += 1.0;
    }

    m.precision.resize(c);
    m.recall.resize(c);
    m.f1.resize(c);
    double correct = 0.0;
    for (size_t k = 0; k < c; ++k) {
        const double tp = m.confusion(k, k);
        double support = 0.0, claimed = 0.0;
        for (size_t j = 0; j < c; ++j) {
            support += m.confusion(k, j);
            claimed += m.confusion(j, k);
        }
        m.precision[k] = claimed > 0.0 ? tp / claimed : 0.0;
        m.recall[k] = support > 0.0 ? tp / support : 0.0;
        const double pr = m.precision[k] + m.recall[k];
        m.f1[k] = pr > 0.0 ? 2.0 * m.precision[k] * m.recall[k] / pr : 0.0;
        m.macro_f1 += m.f1[k];
        correct += tp;
    }
    m.macro_f1 /= static_cast<double>(c);
    m.accuracy = correct / static_cast<double>(truth.size());
    return m;
}

}  // namespace kooptx
