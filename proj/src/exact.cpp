#include "fraudlens/exact.hpp"

#include <bit>
#include <cmath>
#include <cstdint>

#include "fraudlens/error.hpp"

namespace fraudlens {

namespace {

int bit_width(u128 v) {
  const auto hi = static_cast<std::uint64_t>(v >> 64);
  if (hi != 0) return 64 + std::bit_width(hi);
  return std::bit_width(static_cast<std::uint64_t>(v));
}

}  // namespace

double ratio_to_double(u128 num, u128 den) {
  if (den == 0 || (den >> 127) != 0) {
    throw Error(ErrorKind::InvalidParams, "ratio_to_double: denominator out of range");
  }
  if (num == 0) return 0.0;

  // Build a 64-bit significand `sig` and exponent so that
  // num/den = (sig + fraction) * 2^exp, with `sticky` recording any fraction.
  u128 sig = num / den;
  u128 rem = num % den;
  int exp = 0;
  bool sticky = false;
  if (const int width = bit_width(sig); width > 64) {
    const int shift = width - 64;
    sticky = (sig & ((u128{1} << shift) - 1)) != 0 || rem != 0;
    sig >>= shift;
    exp = shift;
  } else {
    while (sig < (u128{1} << 63)) {
      rem <<= 1;
      sig <<= 1;
      if (rem >= den) {
        rem -= den;
        sig |= 1;
      }
      --exp;
    }
    sticky = rem != 0;
  }

  constexpr std::uint64_t kHalf = 1u << 10;
  const auto low = static_cast<std::uint64_t>(sig & 0x7FF);
  auto mantissa = static_cast<std::uint64_t>(sig >> 11);
  if (low > kHalf || (low == kHalf && (sticky || (mantissa & 1)))) ++mantissa;
  return std::ldexp(static_cast<double>(mantissa), exp + 11);
}

}  // namespace fraudlens
