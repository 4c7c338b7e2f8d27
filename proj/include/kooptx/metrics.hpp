#pragma once

#include <vector>

#include "kooptx/mat.hpp"

namespace kooptx {

// Classification quality summary. The confusion matrix is counts with
// truth on rows and prediction on columns, so row sums equal class
// supports. Undefined rates (0/0) are reported as 0.
struct Metrics {
    Mat confusion;
    std::vector<double> precision;
    std::vector<double> recall;
    std::vector<double> f1;
    double macro_f1 = 0.0;
    double accuracy = 0.0;
};

Metrics evaluate_predictions(const std::vector<int>& truth,
                             const std::vector<int>& predicted, int n_classes);

}  // namespace kooptx
