#pragma once

#include <cstddef>
#include <vector>

namespace kooptx {

// Dense row-major matrix. Deliberately small: storage, indexing, and the
// handful of products the pipeline needs, all routed through the active
// kernel set.
struct Mat {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(size_t i, size_t j) { return data[i * cols + j]; }
    double operator()(size_t i, size_t j) const { return data[i * cols + j]; }

    double* row(size_t i) { return data.data() + i * cols; }
    const double* row(size_t i) const { return data.data() + i * cols; }

    size_t size() const { return rows * cols; }
    void fill(double v) { data.assign(rows * cols, v); }
};

Mat matmul(const Mat& a, const Mat& b);     // a * b
Mat matmul_nt(const Mat& a, const Mat& b);  // a * b^T
Mat matmul_tn(const Mat& a, const Mat& b);  // a^T * b
Mat transpose(const Mat& a);

// out-of-place: a + b, a - b (shape-checked)
Mat add(const Mat& a, const Mat& b);
Mat sub(const Mat& a, const Mat& b);

}  // namespace kooptx
