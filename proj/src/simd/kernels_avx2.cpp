// AVX2 + FMA + F16C kernels. Compiled with -mavx2 -mfma -mf16c; only entered
// after dispatch.cpp has confirmed CPU support.

#include <immintrin.h>

#include "kernel_variants.hpp"

namespace satloc::simd::detail {
namespace {

inline double hsum(__m256d v)
{
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n)
{
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
        acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
        acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double sum = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

void gather_dot_avx2(const double* matrix, std::size_t dim, const std::size_t* cols,
                     std::size_t ncols, const double* x, double* out)
{
    std::size_t j = 0;
    // Four columns per pass so each load of x feeds four FMAs.
    for (; j + 4 <= ncols; j += 4) {
        const double* c0 = matrix + cols[j] * dim;
        const double* c1 = matrix + cols[j + 1] * dim;
        const double* c2 = matrix + cols[j + 2] * dim;
        const double* c3 = matrix + cols[j + 3] * dim;
        __m256d s0 = _mm256_setzero_pd();
        __m256d s1 = _mm256_setzero_pd();
        __m256d s2 = _mm256_setzero_pd();
        __m256d s3 = _mm256_setzero_pd();
        std::size_t i = 0;
        for (; i + 4 <= dim; i += 4) {
            const __m256d xv = _mm256_loadu_pd(x + i);
            s0 = _mm256_fmadd_pd(_mm256_loadu_pd(c0 + i), xv, s0);
            s1 = _mm256_fmadd_pd(_mm256_loadu_pd(c1 + i), xv, s1);
            s2 = _mm256_fmadd_pd(_mm256_loadu_pd(c2 + i), xv, s2);
            s3 = _mm256_fmadd_pd(_mm256_loadu_pd(c3 + i), xv, s3);
        }
        double r0 = hsum(s0), r1 = hsum(s1), r2 = hsum(s2), r3 = hsum(s3);
        for (; i < dim; ++i) {
            r0 += c0[i] * x[i];
            r1 += c1[i] * x[i];
            r2 += c2[i] * x[i];
            r3 += c3[i] * x[i];
        }
        out[j] = r0;
        out[j + 1] = r1;
        out[j + 2] = r2;
        out[j + 3] = r3;
    }
    for (; j < ncols; ++j) out[j] = dot_avx2(matrix + cols[j] * dim, x, dim);
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n)
{
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        // mul + add rather than fma so results match the scalar loop exactly.
        const __m256d prod = _mm256_mul_pd(av, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void center_avx2(const float* img, const double* mean, double* out, std::size_t n)
{
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_cvtps_pd(_mm_loadu_ps(img + i));
        _mm256_storeu_pd(out + i, _mm256_sub_pd(v, _mm256_loadu_pd(mean + i)));
    }
    for (; i < n; ++i) out[i] = static_cast<double>(img[i]) - mean[i];
}

void half_to_double_avx2(const std::uint16_t* in, double* out, std::size_t n)
{
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m128i h = _mm_loadu_si128(reinterpret_cast<const __m128i*>(in + i));
        const __m256 f = _mm256_cvtph_ps(h);
        _mm256_storeu_pd(out + i, _mm256_cvtps_pd(_mm256_castps256_ps128(f)));
        _mm256_storeu_pd(out + i + 4, _mm256_cvtps_pd(_mm256_extractf128_ps(f, 1)));
    }
    for (; i < n; ++i) {
        const __m128 f = _mm_cvtph_ps(_mm_cvtsi32_si128(in[i]));
        out[i] = static_cast<double>(_mm_cvtss_f32(f));
    }
}

}  // namespace

const KernelTable& avx2_table()
{
    static const KernelTable table{Isa::Avx2,  dot_avx2,    gather_dot_avx2,
                                   axpy_avx2,  center_avx2, half_to_double_avx2};
    return table;
}

}  // namespace satloc::simd::detail
