#include "kooptx/kernels.hpp"

#include "kooptx/errors.hpp"

namespace kooptx::kernels {

namespace {

bool table_present(const Ops& t) { return t.dot != nullptr; }

Variant detect_impl() {
#if defined(__x86_64__) || defined(_M_X64)
    if (__builtin_cpu_supports("avx512f") && table_present(avx512_ops))
        return Variant::Avx512;
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma") &&
        table_present(avx2_ops))
        return Variant::Avx2;
#endif
    return Variant::Scalar;
}

const Ops& table_for(Variant v) {
    switch (v) {
        case Variant::Avx512: return avx512_ops;
        case Variant::Avx2: return avx2_ops;
        default: return scalar_ops;
    }
}

Variant g_variant = detect_impl();

}  // namespace

Variant detect() { return detect_impl(); }

Variant current_variant() { return g_variant; }

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::Avx512: return "avx512";
        case Variant::Avx2: return "avx2";
        default: return "scalar";
    }
}

void set_variant(Variant v) {
    if (!table_present(table_for(v)))
        throw ConfigError("kernel variant not available on this build: " +
                          variant_name(v));
    if (v != Variant::Scalar) {
#if defined(__x86_64__) || defined(_M_X64)
        const bool ok = (v == Variant::Avx512)
                            ? __builtin_cpu_supports("avx512f") != 0
                            : (__builtin_cpu_supports("avx2") &&
                               __builtin_cpu_supports("fma"));
        if (!ok)
            throw ConfigError("kernel variant not supported by this CPU: " +
                              variant_name(v));
#else
        throw ConfigError("kernel variant not supported by this CPU: " +
                          variant_name(v));
#endif
    }
    g_variant = v;
}

const Ops& active() { return table_for(g_variant); }

}  // namespace kooptx::kernels
