#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "camformer/bacam.hpp"
#include "camformer/bitcore.hpp"

namespace camformer {

// How a full q * K^T decomposes onto cam_h x cam_w tiles.
struct TilePlan {
  int h_tiles = 0;   // along the key axis
  int v_tiles = 0;   // along the feature axis
  int pad_rows = 0;  // padded key rows in the last horizontal tile
  int pad_cols = 0;  // padded feature columns in the last vertical tile

  static TilePlan make(int n_keys, int d_k, const CamGeometry& g);
  int tile_index(int h, int v) const { return h * v_tiles + v; }
};

// Per-key scores after tiled search. Entries cover only the real keys;
// padded rows are reported as full mismatch internally and dropped here.
// adc_codes, when requested, holds one code per (key, vertical tile).
struct ScoreVector {
  std::vector<int> scores;
  std::vector<std::vector<int>> adc_codes;

  bool operator==(const ScoreVector&) const = default;
};

// Tiled binary vector-matrix multiply through the CAM model. Horizontal
// tiles concatenate; vertical tiles accumulate digitized per-tile scores
// into an exact integer register. Padded key rows are all-zero bits; the
// always-matching padded columns of the last vertical tile are subtracted
// analytically so padding is score-neutral. Every (h,v) tile draws from
// substream seed XOR tile_index, which makes the result independent of
// tile evaluation order and identical between the serial and OpenMP paths.
ScoreVector bimv_tiled(const BitVector& query, const BitMatrix& keys, const CamGeometry& g,
                       const NoiseModel& noise, bool with_provenance = false);
ScoreVector bimv_tiled_serial(const BitVector& query, const BitMatrix& keys,
                              const CamGeometry& g, const NoiseModel& noise,
                              bool with_provenance = false);

enum class MatmulMode { BitSliced, Direct };

// Sparse-weighted rows of an integer matrix: sum_w weight * values[index].
// Bit-sliced mode applies the weights per binary slice and recombines with
// the slice weights (MSB negative when signed); it equals the direct
// integer product exactly.
std::vector<std::int64_t> binary_integer_matmul(
    std::span<const std::pair<int, std::int64_t>> weights, const SlicedIntMatrix& values,
    MatmulMode mode);
std::vector<std::int64_t> binary_integer_matmul(
    std::span<const std::pair<int, std::int64_t>> weights, const IntMatrix& values);

}  // namespace camformer
