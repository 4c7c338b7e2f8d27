#include "kooptx/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define KOOPTX_HAVE_AVX512_TU 1
#include <immintrin.h>

#include <cmath>
#include <cstddef>

namespace kooptx::kernels {
namespace {

double dot_v(const double* a, const double* b, size_t n) {
    __m512d acc0 = _mm512_setzero_pd();
    __m512d acc1 = _mm512_setzero_pd();
    size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm512_fmadd_pd(_mm512_loadu_pd(a + i), _mm512_loadu_pd(b + i), acc0);
        acc1 = _mm512_fmadd_pd(_mm512_loadu_pd(a + i + 8), _mm512_loadu_pd(b + i + 8), acc1);
    }
    for (; i + 8 <= n; i += 8)
        acc0 = _mm512_fmadd_pd(_mm512_loadu_pd(a + i), _mm512_loadu_pd(b + i), acc0);
    double acc = _mm512_reduce_add_pd(_mm512_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_v(double alpha, const double* x, double* y, size_t n) {
    const __m512d va = _mm512_set1_pd(alpha);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m512d vy = _mm512_loadu_pd(y + i);
        vy = _mm512_fmadd_pd(va, _mm512_loadu_pd(x + i), vy);
        _mm512_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_v(double alpha, double* x, size_t n) {
    const __m512d va = _mm512_set1_pd(alpha);
    size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm512_storeu_pd(x + i, _mm512_mul_pd(va, _mm512_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= alpha;
}

void vadd_v(const double* a, const double* b, double* out, size_t n) {
    size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm512_storeu_pd(out + i, _mm512_add_pd(_mm512_loadu_pd(a + i), _mm512_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void vmul_v(const double* a, const double* b, double* out, size_t n) {
    size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm512_storeu_pd(out + i, _mm512_mul_pd(_mm512_loadu_pd(a + i), _mm512_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

double sum_v(const double* x, size_t n) {
    __m512d acc = _mm512_setzero_pd();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) acc = _mm512_add_pd(acc, _mm512_loadu_pd(x + i));
    double s = _mm512_reduce_add_pd(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

double sumsq_v(const double* x, size_t n) {
    __m512d acc = _mm512_setzero_pd();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m512d v = _mm512_loadu_pd(x + i);
        acc = _mm512_fmadd_pd(v, v, acc);
    }
    double s = _mm512_reduce_add_pd(acc);
    for (; i < n; ++i) s += x[i] * x[i];
    return s;
}

double max_abs_v(const double* x, size_t n) {
    const __m512d zero = _mm512_setzero_pd();
    __m512d vm = zero;
    size_t i = 0;
    for (; i + 8 <= n; i += 8)
        vm = _mm512_max_pd(vm, _mm512_abs_pd(_mm512_loadu_pd(x + i)));
    double m = _mm512_reduce_max_pd(vm);
    for (; i < n; ++i) {
        const double a = std::fabs(x[i]);
        if (a > m) m = a;
    }
    return m;
}

double sq_dist_v(const double* a, const double* b, size_t n) {
    __m512d acc = _mm512_setzero_pd();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m512d d = _mm512_sub_pd(_mm512_loadu_pd(a + i), _mm512_loadu_pd(b + i));
        acc = _mm512_fmadd_pd(d, d, acc);
    }
    double s = _mm512_reduce_add_pd(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void gemm_nn_v(const double* A, const double* B, double* C, size_t m, size_t k,
               size_t n, bool accumulate) {
    for (size_t i = 0; i < m; ++i) {
        double* crow = C + i * n;
        if (!accumulate)
            for (size_t j = 0; j < n; ++j) crow[j] = 0.0;
        size_t p = 0;
        for (; p + 4 <= k; p += 4) {
            const __m512d a0 = _mm512_set1_pd(A[i * k + p]);
            const __m512d a1 = _mm512_set1_pd(A[i * k + p + 1]);
            const __m512d a2 = _mm512_set1_pd(A[i * k + p + 2]);
            const __m512d a3 = _mm512_set1_pd(A[i * k + p + 3]);
            const double* b0 = B + p * n;
            const double* b1 = b0 + n;
            const double* b2 = b1 + n;
            const double* b3 = b2 + n;
            size_t j = 0;
            for (; j + 8 <= n; j += 8) {
                __m512d c = _mm512_loadu_pd(crow + j);
                c = _mm512_fmadd_pd(a0, _mm512_loadu_pd(b0 + j), c);
                c = _mm512_fmadd_pd(a1, _mm512_loadu_pd(b1 + j), c);
                c = _mm512_fmadd_pd(a2, _mm512_loadu_pd(b2 + j), c);
                c = _mm512_fmadd_pd(a3, _mm512_loadu_pd(b3 + j), c);
                _mm512_storeu_pd(crow + j, c);
            }
            for (; j < n; ++j)
                crow[j] += A[i * k + p] * b0[j] + A[i * k + p + 1] * b1[j] +
                           A[i * k + p + 2] * b2[j] + A[i * k + p + 3] * b3[j];
        }
        for (; p < k; ++p) {
            const __m512d a0 = _mm512_set1_pd(A[i * k + p]);
            const double* b0 = B + p * n;
            size_t j = 0;
            for (; j + 8 <= n; j += 8) {
                __m512d c = _mm512_loadu_pd(crow + j);
                c = _mm512_fmadd_pd(a0, _mm512_loadu_pd(b0 + j), c);
                _mm512_storeu_pd(crow + j, c);
            }
            for (; j < n; ++j) crow[j] += A[i * k + p] * b0[j];
        }
    }
}

void gemm_nt_v(const double* A, const double* B, double* C, size_t m, size_t k,
               size_t n, bool accumulate) {
    for (size_t i = 0; i < m; ++i) {
        const double* arow = A + i * k;
        double* crow = C + i * n;
        for (size_t j = 0; j < n; ++j) {
            const double d = dot_v(arow, B + j * k, k);
            crow[j] = accumulate ? crow[j] + d : d;
        }
    }
}

void gemm_tn_v(const double* A, const double* B, double* C, size_t m, size_t k,
               size_t n, bool accumulate) {
    if (!accumulate)
        for (size_t i = 0; i < m * n; ++i) C[i] = 0.0;
    for (size_t p = 0; p < k; ++p) {
        const double* arow = A + p * m;
        const double* brow = B + p * n;
        for (size_t i = 0; i < m; ++i) {
            const __m512d a = _mm512_set1_pd(arow[i]);
            double* crow = C + i * n;
            size_t j = 0;
            for (; j + 8 <= n; j += 8) {
                __m512d c = _mm512_loadu_pd(crow + j);
                c = _mm512_fmadd_pd(a, _mm512_loadu_pd(brow + j), c);
                _mm512_storeu_pd(crow + j, c);
            }
            for (; j < n; ++j) crow[j] += arow[i] * brow[j];
        }
    }
}

void adamw_v(double* p, const double* g, double* m, double* v, size_t n, double lr,
             double beta1, double beta2, double eps, double wd, double bias1,
             double bias2) {
    const __m512d vb1 = _mm512_set1_pd(beta1);
    const __m512d vb2 = _mm512_set1_pd(beta2);
    const __m512d vcb1 = _mm512_set1_pd(1.0 - beta1);
    const __m512d vcb2 = _mm512_set1_pd(1.0 - beta2);
    const __m512d vib1 = _mm512_set1_pd(1.0 / bias1);
    const __m512d vib2 = _mm512_set1_pd(1.0 / bias2);
    const __m512d veps = _mm512_set1_pd(eps);
    const __m512d vlr = _mm512_set1_pd(lr);
    const __m512d vwd = _mm512_set1_pd(wd);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m512d gg = _mm512_loadu_pd(g + i);
        __m512d mm = _mm512_loadu_pd(m + i);
        __m512d vv = _mm512_loadu_pd(v + i);
        mm = _mm512_fmadd_pd(vcb1, gg, _mm512_mul_pd(vb1, mm));
        vv = _mm512_fmadd_pd(vcb2, _mm512_mul_pd(gg, gg), _mm512_mul_pd(vb2, vv));
        _mm512_storeu_pd(m + i, mm);
        _mm512_storeu_pd(v + i, vv);
        const __m512d mhat = _mm512_mul_pd(mm, vib1);
        const __m512d vhat = _mm512_mul_pd(vv, vib2);
        const __m512d denom = _mm512_add_pd(_mm512_sqrt_pd(vhat), veps);
        __m512d pp = _mm512_loadu_pd(p + i);
        const __m512d step =
            _mm512_add_pd(_mm512_div_pd(mhat, denom), _mm512_mul_pd(vwd, pp));
        pp = _mm512_fnmadd_pd(vlr, step, pp);
        _mm512_storeu_pd(p + i, pp);
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        const double mhat = m[i] / bias1;
        const double vhat = v[i] / bias2;
        p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * p[i]);
    }
}

}  // namespace

const Ops avx512_ops = {dot_v,     axpy_v,    scale_v,   vadd_v,    vmul_v,
                        sum_v,     sumsq_v,   max_abs_v, sq_dist_v, gemm_nn_v,
                        gemm_nt_v, gemm_tn_v, adamw_v};

}  // namespace kooptx::kernels

#else

namespace kooptx::kernels {
const Ops avx512_ops = {};
}

#endif
