#pragma once

#include <cstdint>

namespace camformer {

// bfloat16: 1 sign / 8 exponent / 7 mantissa bits. Conversions round to
// nearest, ties to even; arithmetic computes in double and rounds the
// result once (double carries enough precision that add/mul/fma are exact
// and div is safely single-rounded at 8-bit significands).
struct BF16 {
  std::uint16_t bits = 0;

  static BF16 from_bits(std::uint16_t b) { return BF16{b}; }
  float to_float() const;
  double to_double() const { return static_cast<double>(to_float()); }

  friend bool operator==(BF16, BF16) = default;
};

BF16 bf16_round(double x);
BF16 bf16_add(BF16 a, BF16 b);
BF16 bf16_mul(BF16 a, BF16 b);
BF16 bf16_div(BF16 a, BF16 b);
// round(acc + a*b) with a single rounding, i.e. fused multiply-add.
BF16 bf16_fma(BF16 acc, BF16 a, BF16 b);

}  // namespace camformer
