#include "kooptx/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define KOOPTX_HAVE_AVX2_TU 1
#include <immintrin.h>

#include <cmath>
#include <cstddef>

namespace kooptx::kernels {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_v(const double* a, const double* b, size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_v(double alpha, const double* x, double* y, size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_v(double alpha, double* x, size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= alpha;
}

void vadd_v(const double* a, const double* b, double* out, size_t n) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void vmul_v(const double* a, const double* b, double* out, size_t n) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

double sum_v(const double* x, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

double sumsq_v(const double* x, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i] * x[i];
    return s;
}

double max_abs_v(const double* x, size_t n) {
    const __m256d absmask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    __m256d vm = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        vm = _mm256_max_pd(vm, _mm256_and_pd(absmask, _mm256_loadu_pd(x + i)));
    double m = 0.0;
    alignas(32) double tmp[4];
    _mm256_store_pd(tmp, vm);
    for (double t : tmp)
        if (t > m) m = t;
    for (; i < n; ++i) {
        const double a = std::fabs(x[i]);
        if (a > m) m = a;
    }
    return m;
}

double sq_dist_v(const double* a, const double* b, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// C row block accumulation: for each (i,p), C[i,:] += A[i,p] * B[p,:].
void gemm_nn_v(const double* A, const double* B, double* C, size_t m, size_t k,
               size_t n, bool accumulate) {
    for (size_t i = 0; i < m; ++i) {
        double* crow = C + i * n;
        if (!accumulate)
            for (size_t j = 0; j < n; ++j) crow[j] = 0.0;
        size_t p = 0;
        // Two k-steps per pass halves the number of C row traversals.
        for (; p + 2 <= k; p += 2) {
            const __m256d a0 = _mm256_set1_pd(A[i * k + p]);
            const __m256d a1 = _mm256_set1_pd(A[i * k + p + 1]);
            const double* b0 = B + p * n;
            const double* b1 = B + (p + 1) * n;
            size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                __m256d c = _mm256_loadu_pd(crow + j);
                c = _mm256_fmadd_pd(a0, _mm256_loadu_pd(b0 + j), c);
                c = _mm256_fmadd_pd(a1, _mm256_loadu_pd(b1 + j), c);
                _mm256_storeu_pd(crow + j, c);
            }
            for (; j < n; ++j) crow[j] += A[i * k + p] * b0[j] + A[i * k + p + 1] * b1[j];
        }
        for (; p < k; ++p) {
            const __m256d a0 = _mm256_set1_pd(A[i * k + p]);
            const double* b0 = B + p * n;
            size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                __m256d c = _mm256_loadu_pd(crow + j);
                c = _mm256_fmadd_pd(a0, _mm256_loadu_pd(b0 + j), c);
                _mm256_storeu_pd(crow + j, c);
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
            const __m256d a = _mm256_set1_pd(arow[i]);
            double* crow = C + i * n;
            size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                __m256d c = _mm256_loadu_pd(crow + j);
                c = _mm256_fmadd_pd(a, _mm256_loadu_pd(brow + j), c);
                _mm256_storeu_pd(crow + j, c);
            }
            for (; j < n; ++j) crow[j] += arow[i] * brow[j];
        }
    }
}

void adamw_v(double* p, const double* g, double* m, double* v, size_t n, double lr,
             double beta1, double beta2, double eps, double wd, double bias1,
             double bias2) {
    const __m256d vb1 = _mm256_set1_pd(beta1);
    const __m256d vb2 = _mm256_set1_pd(beta2);
    const __m256d vcb1 = _mm256_set1_pd(1.0 - beta1);
    const __m256d vcb2 = _mm256_set1_pd(1.0 - beta2);
    const __m256d vib1 = _mm256_set1_pd(1.0 / bias1);
    const __m256d vib2 = _mm256_set1_pd(1.0 / bias2);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d vwd = _mm256_set1_pd(wd);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d gg = _mm256_loadu_pd(g + i);
        __m256d mm = _mm256_loadu_pd(m + i);
        __m256d vv = _mm256_loadu_pd(v + i);
        mm = _mm256_fmadd_pd(vcb1, gg, _mm256_mul_pd(vb1, mm));
        vv = _mm256_fmadd_pd(vcb2, _mm256_mul_pd(gg, gg), _mm256_mul_pd(vb2, vv));
        _mm256_storeu_pd(m + i, mm);
        _mm256_storeu_pd(v + i, vv);
        const __m256d mhat = _mm256_mul_pd(mm, vib1);
        const __m256d vhat = _mm256_mul_pd(vv, vib2);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
        __m256d pp = _mm256_loadu_pd(p + i);
        const __m256d step =
            _mm256_add_pd(_mm256_div_pd(mhat, denom), _mm256_mul_pd(vwd, pp));
        pp = _mm256_fnmadd_pd(vlr, step, pp);
        _mm256_storeu_pd(p + i, pp);
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

const Ops avx2_ops = {dot_v,     axpy_v,    scale_v,   vadd_v,    vmul_v,
                      sum_v,     sumsq_v,   max_abs_v, sq_dist_v, gemm_nn_v,
                      gemm_nt_v, gemm_tn_v, adamw_v};

}  // namespace kooptx::kernels

#else

namespace kooptx::kernels {
const Ops avx2_ops = {};
}

#endif
