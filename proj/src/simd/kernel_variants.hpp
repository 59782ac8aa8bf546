#pragma once
// Per-ISA kernel tables. Only the variants compiled for the host architecture
// are linked; dispatch.cpp decides which of them may run.

#include "satloc/simd/kernels.hpp"

namespace satloc::simd::detail {

const KernelTable& scalar_table();
#if defined(SATLOC_HAVE_AVX2_TU)
const KernelTable& avx2_table();
#endif
#if defined(SATLOC_HAVE_NEON_TU)
const KernelTable& neon_table();
#endif

}  // namespace satloc::simd::detail
