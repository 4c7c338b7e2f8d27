#pragma once

#include <cstddef>
#include <string>

// Low-level numeric kernels behind the matrix and model code. Every kernel
// has a scalar reference implementation plus AVX2/FMA and AVX-512F variants;
// the active set is chosen once at startup from CPUID and can be overridden
// (mainly so the equivalence tests can pin each variant).
namespace kooptx::kernels {

struct Ops {
    // BLAS-1 style.
    double (*dot)(const double* a, const double* b, size_t n);
    void (*axpy)(double alpha, const double* x, double* y, size_t n);  // y += alpha*x
    void (*scale)(double alpha, double* x, size_t n);                  // x *= alpha
    void (*vadd)(const double* a, const double* b, double* out, size_t n);
    void (*vmul)(const double* a, const double* b, double* out, size_t n);
    double (*sum)(const double* x, size_t n);
    double (*sumsq)(const double* x, size_t n);
    double (*max_abs)(const double* x, size_t n);
    double (*sq_dist)(const double* a, const double* b, size_t n);  // ||a-b||^2

    // Row-major GEMM, C = A*B (+ C when accumulate).
    //   nn: A is m×k, B is k×n
    //   nt: A is m×k, B is n×k (B used transposed)
    //   tn: A is k×m (A used transposed), B is k×n
    void (*gemm_nn)(const double* A, const double* B, double* C, size_t m, size_t k,
                    size_t n, bool accumulate);
    void (*gemm_nt)(const double* A, const double* B, double* C, size_t m, size_t k,
                    size_t n, bool accumulate);
    void (*gemm_tn)(const double* A, const double* B, double* C, size_t m, size_t k,
                    size_t n, bool accumulate);

    // Fused AdamW update over a contiguous parameter block.
    //   m = b1*m + (1-b1)*g ; v = b2*v + (1-b2)*g^2
    //   p -= lr * ( mhat/(sqrt(vhat)+eps) + wd*p )   with bias-corrected hats.
    void (*adamw_update)(double* p, const double* g, double* m, double* v, size_t n,
                         double lr, double beta1, double beta2, double eps, double wd,
                         double bias1, double bias2);  // bias_i = 1 - beta_i^t
};

enum class Variant { Scalar, Avx2, Avx512 };

extern const Ops scalar_ops;
extern const Ops avx2_ops;    // null-filled when not compiled in
extern const Ops avx512_ops;  // null-filled when not compiled in

// Active kernel set (dispatch happens once, at first use or set_variant).
const Ops& active();

// Best variant this CPU supports.
Variant detect();

// Force a specific variant; throws ConfigError if it is unavailable on this
// CPU/build. Intended for tests.
void set_variant(Variant v);

Variant current_variant();
std::string variant_name(Variant v);

}  // namespace kooptx::kernels
