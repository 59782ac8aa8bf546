// Scalar reference kernels. These define the semantics the SIMD variants are
// tested against; keep them simple sequential loops.

#include "kernel_variants.hpp"
#include "satloc/half.hpp"

namespace satloc::simd::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

void gather_dot_scalar(const double* matrix, std::size_t dim, const std::size_t* cols,
                       std::size_t ncols, const double* x, double* out)
{
    for (std::size_t j = 0; j < ncols; ++j) {
        out[j] = dot_scalar(matrix + cols[j] * dim, x, dim);
    }
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void center_scalar(const float* img, const double* mean, double* out, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(img[i]) - mean[i];
}

void half_to_double_scalar(const std::uint16_t* in, double* out, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) out[i] = satloc::half_to_double(in[i]);
}

}  // namespace

const KernelTable& scalar_table()
{
    static const KernelTable table{Isa::Scalar,         dot_scalar,    gather_dot_scalar,
                                   axpy_scalar,         center_scalar, half_to_double_scalar};
    return table;
}

}  // namespace satloc::simd::detail
