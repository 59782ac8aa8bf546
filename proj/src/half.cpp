#include "satloc/half.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "satloc/common.hpp"
#include "satloc/simd/kernels.hpp"

namespace satloc {

std::uint16_t double_to_half(double value)
{
    const auto bits = std::bit_cast<std::uint64_t>(value);
    const auto sign = static_cast<std::uint16_t>((bits >> 48) & 0x8000u);
    const int exp_field = static_cast<int>((bits >> 52) & 0x7FF);
    const std::uint64_t mantissa = bits & ((std::uint64_t{1} << 52) - 1);

    if (exp_field == 0x7FF) {
        return mantissa != 0 ? static_cast<std::uint16_t>(sign | 0x7E00u)
                             : static_cast<std::uint16_t>(sign | 0x7C00u);
    }
    // Double subnormals are far below half resolution.
    if (exp_field == 0) return sign;

    const int exponent = exp_field - 1023;
    const std::uint64_t significand = mantissa | (std::uint64_t{1} << 52);

    // Quantum of the destination: 2^(exponent-10) for half normals,
    // 2^-24 for half subnormals.
    int shift = exponent >= -14 ? 42 : 28 - exponent;
    if (shift > 63) return sign;

    std::uint64_t rounded = significand >> shift;
    const std::uint64_t rem = significand & ((std::uint64_t{1} << shift) - 1);
    const std::uint64_t halfway = std::uint64_t{1} << (shift - 1);
    if (rem > halfway || (rem == halfway && (rounded & 1u))) ++rounded;

    if (exponent < -14) {
        // Subnormal; a carry into bit 10 lands exactly on the smallest normal.
        return static_cast<std::uint16_t>(sign | rounded);
    }
    int biased = exponent + 15;
    if (rounded == (std::uint64_t{1} << 11)) {
        rounded >>= 1;
        ++biased;
    }
    if (biased >= 31) return static_cast<std::uint16_t>(sign | 0x7C00u);
    return static_cast<std::uint16_t>(sign | (biased << 10) | (rounded & 0x3FFu));
}

double half_to_double(std::uint16_t bits)
{
    const bool negative = (bits & 0x8000u) != 0;
    const int exp_field = (bits >> 10) & 0x1F;
    const int mantissa = bits & 0x3FF;
    double v;
    if (exp_field == 0) {
        v = std::ldexp(static_cast<double>(mantissa), -24);
    } else if (exp_field == 31) {
        v = mantissa != 0 ? std::numeric_limits<double>::quiet_NaN()
                          : std::numeric_limits<double>::infinity();
    } else {
        v = std::ldexp(static_cast<double>(1024 + mantissa), exp_field - 25);
    }
    return negative ? -v : v;
}

void encode_half(std::span<const double> in, std::span<std::uint16_t> out)
{
    if (in.size() != out.size()) throw InvalidArgument("encode_half: size mismatch");
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = double_to_half(in[i]);
}

void decode_half(std::span<const std::uint16_t> in, std::span<double> out)
{
    if (in.size() != out.size()) throw InvalidArgument("decode_half: size mismatch");
    simd::kernels().half_to_double(in.data(), out.data(), in.size());
}

}  // namespace satloc
