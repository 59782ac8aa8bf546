#include <atomic>
#include <cstdlib>
#include <string>

#include "kernel_variants.hpp"
#include "satloc/common.hpp"

namespace satloc::simd {
namespace {

bool cpu_supports_avx2()
{
#if defined(SATLOC_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma") &&
           __builtin_cpu_supports("f16c");
#else
    return false;
#endif
}

Isa best_available()
{
    if (isa_available(Isa::Avx2)) return Isa::Avx2;
    if (isa_available(Isa::Neon)) return Isa::Neon;
    return Isa::Scalar;
}

Isa initial_isa()
{
    if (const char* env = std::getenv("SATLOC_ISA")) {
        const std::string want(env);
        for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
            if (want == isa_name(isa) && isa_available(isa)) return isa;
        }
    }
    return best_available();
}

std::atomic<Isa>& current()
{
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

}  // namespace

std::string_view isa_name(Isa isa)
{
    switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
    }
    return "unknown";
}

bool isa_available(Isa isa)
{
    switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2: {
        static const bool ok = cpu_supports_avx2();
        return ok;
    }
    case Isa::Neon:
#if defined(SATLOC_HAVE_NEON_TU)
        return true;
#else
        return false;
#endif
    }
    return false;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_isa(Isa isa)
{
    if (!isa_available(isa)) {
        throw InvalidArgument("SIMD variant not available on this CPU: " + std::string(isa_name(isa)));
    }
    current().store(isa, std::memory_order_relaxed);
}

const KernelTable& kernels(Isa isa)
{
    if (!isa_available(isa)) {
        throw InvalidArgument("SIMD variant not available on this CPU: " + std::string(isa_name(isa)));
    }
    switch (isa) {
#if defined(SATLOC_HAVE_AVX2_TU)
    case Isa::Avx2: return detail::avx2_table();
#endif
#if defined(SATLOC_HAVE_NEON_TU)
    case Isa::Neon: return detail::neon_table();
#endif
    default: return detail::scalar_table();
    }
}

const KernelTable& kernels() { return kernels(active_isa()); }

}  // namespace satloc::simd
