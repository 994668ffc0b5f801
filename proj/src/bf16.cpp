#include "camformer/bf16.hpp"

#include <bit>
#include <cmath>

namespace camformer {

float BF16::to_float() const {
  // bf16 is the top half of an IEEE float; widening is exact, including
  // subnormals, infinities and NaN.
  return std::bit_cast<float>(static_cast<std::uint32_t>(bits) << 16);
}

BF16 bf16_round(double x) {
  const std::uint64_t raw = std::bit_cast<std::uint64_t>(x);
  const std::uint16_t sign = static_cast<std::uint16_t>((raw >> 48) & 0x8000u);
  const int biased = static_cast<int>((raw >> 52) & 0x7FF);
  const std::uint64_t mant = raw & ((std::uint64_t{1} << 52) - 1);

  if (biased == 0x7FF) {
    if (mant != 0) return BF16::from_bits(0x7FC0);  // canonical quiet NaN
    return BF16::from_bits(static_cast<std::uint16_t>(sign | 0x7F80));
  }
  // Double subnormals sit far below the bf16 subnormal range; they and
  // signed zeros round to signed zero.
  if (biased == 0) return BF16::from_bits(sign);

  int e = biased - 1023;                       // value = 1.mant * 2^e
  std::uint64_t sig = (std::uint64_t{1} << 52) | mant;

  // Keep an 8-bit significand; push further right in the subnormal range.
  int drop = 45;
  if (e < -126) drop += (-126 - e);
  if (drop >= 64) return BF16::from_bits(sign);

  std::uint64_t keep = sig >> drop;
  const std::uint64_t rem = sig & ((std::uint64_t{1} << drop) - 1);
  const std::uint64_t half = std::uint64_t{1} << (drop - 1);
  if (rem > half || (rem == half && (keep & 1)))
    ++keep;

  if (e < -126) {
    // Subnormal encoding: exponent field 0; keep == 0x80 lands exactly on
    // the smallest normal and the carry into the exponent LSB encodes it.
    return BF16::from_bits(static_cast<std::uint16_t>(sign | keep));
  }
  if (keep == 0x100) {  // significand carry
    keep = 0x80;
    ++e;
  }
  if (e > 127)
    return BF16::from_bits(static_cast<std::uint16_t>(sign | 0x7F80));  // overflow -> inf
  const std::uint16_t exp_field = static_cast<std::uint16_t>(e + 127);
  return BF16::from_bits(
      static_cast<std::uint16_t>(sign | (exp_field << 7) | (keep & 0x7F)));
}

BF16 bf16_add(BF16 a, BF16 b) { return bf16_round(a.to_double() + b.to_double()); }
BF16 bf16_mul(BF16 a, BF16 b) { return bf16_round(a.to_double() * b.to_double()); }
BF16 bf16_div(BF16 a, BF16 b) { return bf16_round(a.to_double() / b.to_double()); }

BF16 bf16_fma(BF16 acc, BF16 a, BF16 b) {
  // The 8x8-bit product and the aligned sum both fit in a double's 53-bit
  // significand, so one bf16 rounding at the end gives FMA semantics.
  return bf16_round(acc.to_double() + a.to_double() * b.to_double());
}

}  // namespace camformer
