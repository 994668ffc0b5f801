#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "camformer/bacam.hpp"
#include "camformer/bf16.hpp"
#include "camformer/bimv.hpp"
#include "camformer/bitcore.hpp"

#include "json.hpp"

namespace camformer {

struct SparsityConfig {
  int k1 = 2;           // stage-1 survivors per tile
  int group_tiles = 16; // tiles per streaming batch
  int k = 32;           // final candidate count

  void validate(const CamGeometry& g) const;
};

struct Candidate {
  int index = 0;
  int score = 0;

  // Total order used by every selection stage: higher score first, ties
  // broken by lower index. Consistent tie-breaking is what makes batched
  // top-k equal offline top-k.
  friend bool candidate_before(const Candidate& a, const Candidate& b) {
    return a.score > b.score || (a.score == b.score && a.index < b.index);
  }
  bool operator==(const Candidate&) const = default;
};

struct CandidateSet {
  std::vector<Candidate> items;  // sorted by candidate_before
  bool short_set = false;        // fewer than k candidates existed
  int merge_passes = 0;          // selection network invocations
};

// 256-entry exp(s / sqrt(d_k)) table in bf16, indexed by the signed 8-bit
// score; 512 bytes total, monotone non-decreasing in s.
class ExpLut {
 public:
  explicit ExpLut(int d_k);
  int d_k() const { return d_k_; }
  BF16 at(int score) const;  // score clamped to [-128,127]
  static constexpr int byte_size() { return 512; }

 private:
  int d_k_ = 64;
  std::array<BF16, 256> entries_{};
};

// Top-k1 of one tile's scores with global key indices attached.
std::vector<Candidate> stage1_select(std::span<const int> tile_scores, int base_index, int k1);

// Streaming refinement over per-tile candidate lists in tile order. A
// 2k-input selection runs whenever running + pending candidates fill it,
// mirroring the 64-input module refined per tile group; the result always
// equals the offline top-k of everything streamed.
CandidateSet streaming_topk(const std::vector<std::vector<Candidate>>& per_tile,
                            const SparsityConfig& cfg);

struct AttentionWeights {
  std::vector<int> indices;
  std::vector<BF16> probs;
};

// LUT softmax over at most k candidates: the bf16 denominator accumulates
// in candidate order, then one bf16 division per element. Scores outside
// the 8-bit range (vertical tiling) clamp at the LUT boundary.
AttentionWeights softmax32(const CandidateSet& candidates, const ExpLut& lut);

// Value operand for contextualization: bf16 or integer payload behind one
// wide-precision element accessor.
struct ValueMatrix {
  enum class Kind { Bf16, Int };
  Kind kind = Kind::Int;
  std::vector<BF16> bf16_data;
  IntMatrix int_data;
  int rows = 0;
  int cols = 0;

  static ValueMatrix from_bf16(int rows, int cols, std::vector<BF16> data);
  static ValueMatrix from_int(IntMatrix m);
  double at(int r, int c) const;
};

// out = sum_i w_i * V[idx_i], bf16 fused multiply-add per step in
// candidate order. MAC parallelism affects timing only, never the value.
std::vector<BF16> contextualize(const AttentionWeights& weights, const ValueMatrix& values);

// Per-stage record of one attention invocation, consumed by the
// performance model and serializable for debugging.
struct ExecutionTrace {
  std::vector<int> scores;
  std::vector<std::vector<Candidate>> stage1;
  CandidateSet final_candidates;
  AttentionWeights weights;

  std::int64_t cam_searches = 0;
  std::int64_t adc_conversions = 0;
  std::int64_t top2_ops = 0;
  std::int64_t merge_ops = 0;
  std::int64_t lut_lookups = 0;
  std::int64_t div_ops = 0;
  std::int64_t mac_ops = 0;
  std::int64_t value_rows_fetched = 0;

  nlohmann::json to_json() const;
};

struct AttentionResult {
  std::vector<BF16> output;
  ExecutionTrace trace;
};

// Full pipeline for one query over the first valid_length keys (causal
// prefix): tiled CAM scoring, per-tile top-k1, streaming top-k, LUT
// softmax, sparse bf16 contextualization.
AttentionResult camformer_attention(const BitVector& query, const BitMatrix& keys,
                                    const ValueMatrix& values, const CamGeometry& g,
                                    const NoiseModel& noise, const SparsityConfig& sparsity,
                                    int valid_length, const ExpLut& lut);

// Hoeffding-style bound k(N-k)exp(-2m delta^2); intentionally not clamped
// to 1.
double recall_bound(int k, int n, int m, double delta_min);

// True iff the exact top-k margin s_(k) - s_(k+1) exceeds 2*epsilon, which
// certifies that any perturbation bounded by epsilon preserves the top-k
// index set. Throws if the perturbation bound is violated.
bool margin_guarantee(std::span<const double> exact_scores,
                      std::span<const double> perturbed_scores, int k, double epsilon);

// Wide-precision reference path used by reports and equivalence checks:
// exact bipolar dots, optional top-k restriction, double softmax and
// matmul. top_k < 0 means dense.
std::vector<double> reference_dense_attention(const BitVector& query, const BitMatrix& keys,
                                              const ValueMatrix& values, int valid_length,
                                              int top_k = -1);

// Exact score helpers shared by oracles.
std::vector<int> exact_bipolar_scores(const BitVector& query, const BitMatrix& keys,
                                      int valid_length);
std::vector<int> topk_indices_by_order(std::span<const int> scores, int k);

}  // namespace camformer
