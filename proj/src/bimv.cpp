#include "camformer/bimv.hpp"

#include <stdexcept>
#include <string>

namespace camformer {

TilePlan TilePlan::make(int n_keys, int d_k, const CamGeometry& g) {
  g.validate();
  if (n_keys < 1 || d_k < 1) throw std::invalid_argument("tile plan: empty tensor");
  TilePlan p;
  p.h_tiles = (n_keys + g.cam_h - 1) / g.cam_h;
  p.v_tiles = (d_k + g.cam_w - 1) / g.cam_w;
  p.pad_rows = p.h_tiles * g.cam_h - n_keys;
  p.pad_cols = p.v_tiles * g.cam_w - d_k;
  return p;
}

namespace {

// Copies the (h,v) tile of K^T into a cam-sized buffer, zero-filling the
// padded feature columns. Only valid rows are materialized.
BitMatrix extract_tile(const BitMatrix& keys, const CamGeometry& g, int h, int v,
                       int valid_rows) {
  BitMatrix tile(valid_rows, g.cam_w);
  const int col0 = v * g.cam_w;
  for (int r = 0; r < valid_rows; ++r) {
    const int key = h * g.cam_h + r;
    for (int c = 0; c < g.cam_w; ++c) {
      const int src = col0 + c;
      if (src < keys.cols() && keys.get(key, src)) tile.set(r, c, true);
    }
  }
  return tile;
}

BitVector extract_query_segment(const BitVector& query, const CamGeometry& g, int v) {
  BitVector seg(g.cam_w);
  const int col0 = v * g.cam_w;
  for (int c = 0; c < g.cam_w; ++c) {
    const int src = col0 + c;
    if (src < query.size() && query.get(src)) seg.set(c, true);
  }
  return seg;
}

// Searches one horizontal strip (all vertical tiles) and writes the
// accumulated scores for its keys.
void score_strip(const BitVector& query, const BitMatrix& keys, const CamGeometry& g,
                 const NoiseModel& noise, const TilePlan& plan, int h, ScoreVector& out,
                 bool with_provenance) {
  const int first_key = h * g.cam_h;
  const int valid_rows = std::min(g.cam_h, keys.rows() - first_key);
  for (int v = 0; v < plan.v_tiles; ++v) {
    BitMatrix tile = extract_tile(keys, g, h, v, valid_rows);
    BitVector seg = extract_query_segment(query, g, v);
    NoiseModel stream = noise.substream(static_cast<std::uint64_t>(plan.tile_index(h, v)));
    const auto readings = search_tile(tile, seg, g, stream);
    // In the last vertical tile, each padded column holds zero bits in both
    // operands and always matches; its +1 contribution to the score is
    // removed here.
    const int pad_correction = (v == plan.v_tiles - 1) ? plan.pad_cols : 0;
    for (int r = 0; r < valid_rows; ++r) {
      out.scores[first_key + r] += readings[r].score - pad_correction;
      if (with_provenance) out.adc_codes[first_key + r][v] = readings[r].code;
    }
  }
}

ScoreVector bimv_impl(const BitVector& query, const BitMatrix& keys, const CamGeometry& g,
                      const NoiseModel& noise, bool with_provenance, bool parallel) {
  if (query.size() != keys.cols())
    throw std::invalid_argument("bimv: query width " + std::to_string(query.size()) +
                                " != key width " + std::to_string(keys.cols()));
  const TilePlan plan = TilePlan::make(keys.rows(), keys.cols(), g);
  ScoreVector out;
  out.scores.assign(keys.rows(), 0);
  if (with_provenance)
    out.adc_codes.assign(keys.rows(), std::vector<int>(plan.v_tiles, 0));

  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int h = 0; h < plan.h_tiles; ++h)
      score_strip(query, keys, g, noise, plan, h, out, with_provenance);
  } else {
    for (int h = 0; h < plan.h_tiles; ++h)
      score_strip(query, keys, g, noise, plan, h, out, with_provenance);
  }
  return out;
}

}  // namespace

ScoreVector bimv_tiled(const BitVector& query, const BitMatrix& keys, const CamGeometry& g,
                       const NoiseModel& noise, bool with_provenance) {
  return bimv_impl(query, keys, g, noise, with_provenance, true);
}

ScoreVector bimv_tiled_serial(const BitVector& query, const BitMatrix& keys,
                              const CamGeometry& g, const NoiseModel& noise,
                              bool with_provenance) {
  return bimv_impl(query, keys, g, noise, with_provenance, false);
}

namespace {

void check_weight_indices(std::span<const std::pair<int, std::int64_t>> weights, int rows) {
  for (const auto& [idx, w] : weights)
    if (idx < 0 || idx >= rows)
      throw std::out_of_range("binary_integer_matmul: row index " + std::to_string(idx) +
                              " out of range [0," + std::to_string(rows) + ")");
}

}  // namespace

std::vector<std::int64_t> binary_integer_matmul(
    std::span<const std::pair<int, std::int64_t>> weights, const IntMatrix& values) {
  check_weight_indices(weights, values.rows);
  std::vector<std::int64_t> out(static_cast<size_t>(values.cols), 0);
  for (const auto& [idx, w] : weights)
    for (int c = 0; c < values.cols; ++c) out[c] += w * values.at(idx, c);
  return out;
}

std::vector<std::int64_t> binary_integer_matmul(
    std::span<const std::pair<int, std::int64_t>> weights, const SlicedIntMatrix& values,
    MatmulMode mode) {
  if (mode == MatmulMode::Direct) return binary_integer_matmul(weights, values.reconstruct());

  check_weight_indices(weights, values.rows());
  const auto slice_weights = values.slice_weights();
  std::vector<std::int64_t> out(static_cast<size_t>(values.cols()), 0);
  for (int s = 0; s < values.bit_width; ++s) {
    const BitMatrix& slice = values.slices[s];
    std::vector<std::int64_t> partial(out.size(), 0);
    for (const auto& [idx, w] : weights)
      for (int c = 0; c < slice.cols(); ++c)
        if (slice.get(idx, c)) partial[c] += w;
    for (size_t c = 0; c < out.size(); ++c) out[c] += slice_weights[s] * partial[c];
  }
  return out;
}

}  // namespace camformer
