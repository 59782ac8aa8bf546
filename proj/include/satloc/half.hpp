#pragma once
// IEEE 754 binary16 storage conversions.

#include <cstdint>
#include <span>
#include <vector>

namespace satloc {

/// Round-to-nearest-even conversion straight from binary64 (no intermediate
/// binary32 rounding). Overflow saturates to +-inf, NaN maps to a quiet NaN.
std::uint16_t double_to_half(double value);

/// Exact widening conversion.
double half_to_double(std::uint16_t bits);

/// Value after one storage round trip.
inline double quantize_half(double value) { return half_to_double(double_to_half(value)); }

void encode_half(std::span<const double> in, std::span<std::uint16_t> out);

/// Bulk decode through the active SIMD kernel table.
void decode_half(std::span<const std::uint16_t> in, std::span<double> out);

}  // namespace satloc
