#pragma once
// Data-parallel inner loops used by the encoder, codebook and localizer.
//
// Every kernel has a scalar reference implementation. AVX2 (x86-64) and NEON
// (aarch64) variants are compiled in separate translation units with their own
// target flags and chosen at runtime. The variants are required to agree with
// the scalar reference: bit-exactly for conversions and element-wise ops, and
// to within floating-point reassociation error for reductions.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace satloc::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

/// True when the variant was compiled in and the running CPU supports it.
bool isa_available(Isa isa);

/// Best available variant, unless overridden by set_isa() or the
/// SATLOC_ISA environment variable ("scalar", "avx2", "neon").
Isa active_isa();

/// Force a variant. Throws InvalidArgument if it is not available.
void set_isa(Isa isa);

struct KernelTable {
    Isa isa;

    /// sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);

    /// out[j] = <matrix[:, cols[j]], x> for a column-major matrix with
    /// `dim` rows. Columns are gathered by index so windows need not be
    /// contiguous.
    void (*gather_dot)(const double* matrix, std::size_t dim, const std::size_t* cols,
                       std::size_t ncols, const double* x, double* out);

    /// y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);

    /// out[i] = double(img[i]) - mean[i]
    void (*center)(const float* img, const double* mean, double* out, std::size_t n);

    /// IEEE binary16 -> binary64, exact.
    void (*half_to_double)(const std::uint16_t* in, double* out, std::size_t n);
};

const KernelTable& kernels();
const KernelTable& kernels(Isa isa);

// Convenience wrappers over the active table.
inline double dot(std::span<const double> a, std::span<const double> b)
{
    return kernels().dot(a.data(), b.data(), a.size() < b.size() ? a.size() : b.size());
}

}  // namespace satloc::simd
