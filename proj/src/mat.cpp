#include "kooptx/mat.hpp"

#include "kooptx/errors.hpp"
#include "kooptx/kernels.hpp"

namespace kooptx {

Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols != b.rows) throw NumericError("matmul: inner dimensions differ");
    Mat c(a.rows, b.cols);
    kernels::active().gemm_nn(a.data.data(), b.data.data(), c.data.data(), a.rows,
                              a.cols, b.cols, false);
    return c;
}

Mat matmul_nt(const Mat& a, const Mat& b) {
    if (a.cols != b.cols) throw NumericError("matmul_nt: inner dimensions differ");
    Mat c(a.rows, b.rows);
    kernels::active().gemm_nt(a.data.data(), b.data.data(), c.data.data(), a.rows,
                              a.cols, b.rows, false);
    return c;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
    if (a.rows != b.rows) throw NumericError("matmul_tn: inner dimensions differ");
    Mat c(a.cols, b.cols);
    kernels::active().gemm_tn(a.data.data(), b.data.data(), c.data.data(), a.cols,
                              a.rows, b.cols, false);
    return c;
}

Mat transpose(const Mat& a) {
    Mat t(a.cols, a.rows);
    for (size_t i = 0; i < a.rows; ++i)
        for (size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

Mat add(const Mat& a, const Mat& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw NumericError("add: shape mismatch");
    Mat c(a.rows, a.cols);
    kernels::active().vadd(a.data.data(), b.data.data(), c.data.data(), a.size());
    return c;
}

Mat sub(const Mat& a, const Mat& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw NumericError("sub: shape mismatch");
    Mat c(a.rows, a.cols);
    for (size_t i = 0; i < a.size(); ++i) c.data[i] = a.data[i] - b.data[i];
    return c;
}

}  // namespace kooptx
