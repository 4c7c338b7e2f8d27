#include <cmath>
#include <cstddef>

#include "kooptx/kernels.hpp"

// Reference implementations. Deliberately straightforward: these define the
// numerical ground truth the SIMD variants are tested against.
namespace kooptx::kernels {
namespace {

double dot_s(const double* a, const double* b, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_s(double alpha, const double* x, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_s(double alpha, double* x, size_t n) {
    for (size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void vadd_s(const double* a, const double* b, double* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void vmul_s(const double* a, const double* b, double* out, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

double sum_s(const double* x, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double sumsq_s(const double* x, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

double max_abs_s(const double* x, size_t n) {
    double m = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double a = std::fabs(x[i]);
        if (a > m) m = a;
    }
    return m;
}

double sq_dist_s(const double* a, const double* b, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void gemm_nn_s(const double* A, const double* B, double* C, size_t m, size_t k,
               size_t n, bool accumulate) {
    for (size_t i = 0; i < m; ++i) {
        double* crow = C + i * n;
        if (!accumulate)
            for (size_t j = 0; j < n; ++j) crow[j] = 0.0;
        for (size_t p = 0; p < k; ++p) {
            const double a = A[i * k + p];
            const double* brow = B + p * n;
            for (size_t j = 0; j < n; ++j) crow[j] += a * brow[j];
        }
    }
}

void gemm_nt_s(const double* A, const double* B, double* C, size_t m, size_t k,
               size_t n, bool accumulate) {
    for (size_t i = 0; i < m; ++i) {
        const double* arow = A + i * k;
        double* crow = C + i * n;
        for (size_t j = 0; j < n; ++j) {
            double acc = accumulate ? crow[j] : 0.0;
            const double* brow = B + j * k;
            for (size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] = acc;
        }
    }
}

void gemm_tn_s(const double* A, const double* B, double* C, size_t m, size_t k,
               size_t n, bool accumulate) {
    if (!accumulate)
        for (size_t i = 0; i < m * n; ++i) C[i] = 0.0;
    for (size_t p = 0; p < k; ++p) {
        const double* arow = A + p * m;
        const double* brow = B + p * n;
        for (size_t i = 0; i < m; ++i) {
            const double a = arow[i];
            double* crow = C + i * n;
            for (size_t j = 0; j < n; ++j) crow[j] += a * brow[j];
        }
    }
}

void adamw_s(double* p, const double* g, double* m, double* v, size_t n, double lr,
             double beta1, double beta2, double eps, double wd, double bias1,
             double bias2) {
    const double inv_b1 = 1.0 / bias1;
    const double inv_b2 = 1.0 / bias2;
    for (size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        const double mhat = m[i] * inv_b1;
        const double vhat = v[i] * inv_b2;
        p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * p[i]);
    }
}

}  // namespace

const Ops scalar_ops = {dot_s,     axpy_s,    scale_s,   vadd_s,    vmul_s,
                        sum_s,     sumsq_s,   max_abs_s, sq_dist_s, gemm_nn_s,
                        gemm_nt_s, gemm_tn_s, adamw_s};

}  // namespace kooptx::kernels
