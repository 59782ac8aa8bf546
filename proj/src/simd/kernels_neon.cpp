// AArch64 Advanced SIMD kernels. NEON is architecturally guaranteed on
// aarch64, so no runtime feature probe is needed.

#include <arm_neon.h>

#include "kernel_variants.hpp"

namespace satloc::simd::detail {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n)
{
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    float64x2_t acc2 = vdupq_n_f64(0.0);
    float64x2_t acc3 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
        acc2 = vfmaq_f64(acc2, vld1q_f64(a + i + 4), vld1q_f64(b + i + 4));
        acc3 = vfmaq_f64(acc3, vld1q_f64(a + i + 6), vld1q_f64(b + i + 6));
    }
    for (; i + 2 <= n; i += 2) acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    double sum = vaddvq_f64(vaddq_f64(vaddq_f64(acc0, acc1), vaddq_f64(acc2, acc3)));
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

void gather_dot_neon(const double* matrix, std::size_t dim, const std::size_t* cols,
                     std::size_t ncols, const double* x, double* out)
{
    std::size_t j = 0;
    for (; j + 2 <= ncols; j += 2) {
        const double* c0 = matrix + cols[j] * dim;
        const double* c1 = matrix + cols[j + 1] * dim;
        float64x2_t s0 = vdupq_n_f64(0.0);
        float64x2_t s1 = vdupq_n_f64(0.0);
        std::size_t i = 0;
        for (; i + 2 <= dim; i += 2) {
            const float64x2_t xv = vld1q_f64(x + i);
            s0 = vfmaq_f64(s0, vld1q_f64(c0 + i), xv);
            s1 = vfmaq_f64(s1, vld1q_f64(c1 + i), xv);
        }
        double r0 = vaddvq_f64(s0), r1 = vaddvq_f64(s1);
        for (; i < dim; ++i) {
            r0 += c0[i] * x[i];
            r1 += c1[i] * x[i];
        }
        out[j] = r0;
        out[j + 1] = r1;
    }
    for (; j < ncols; ++j) out[j] = dot_neon(matrix + cols[j] * dim, x, dim);
}

void axpy_neon(double a, const double* x, double* y, std::size_t n)
{
    const float64x2_t av = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(av, vld1q_f64(x + i))));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void center_neon(const float* img, const double* mean, double* out, std::size_t n)
{
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t v = vcvt_f64_f32(vld1_f32(img + i));
        vst1q_f64(out + i, vsubq_f64(v, vld1q_f64(mean + i)));
    }
    for (; i < n; ++i) out[i] = static_cast<double>(img[i]) - mean[i];
}

void half_to_double_neon(const std::uint16_t* in, double* out, std::size_t n)
{
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float32x4_t f = vcvt_f32_f16(vreinterpret_f16_u16(vld1_u16(in + i)));
        vst1q_f64(out + i, vcvt_f64_f32(vget_low_f32(f)));
        vst1q_f64(out + i + 2, vcvt_high_f64_f32(f));
    }
    for (; i < n; ++i) {
        const std::uint16_t v[4] = {in[i], 0, 0, 0};
        const float32x4_t f = vcvt_f32_f16(vreinterpret_f16_u16(vld1_u16(v)));
        out[i] = static_cast<double>(vgetq_lane_f32(f, 0));
    }
}

}  // namespace

const KernelTable& neon_table()
{
    static const KernelTable table{Isa::Neon,  dot_neon,    gather_dot_neon,
                                   axpy_neon,  center_neon, half_to_double_neon};
    return table;
}

}  // namespace satloc::simd::detail
