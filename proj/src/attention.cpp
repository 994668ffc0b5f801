#include "camformer/attention.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace camformer {

void SparsityConfig::validate(const CamGeometry& g) const {
  if (k1 < 1) throw std::invalid_argument("sparsity: k1 must be >= 1");
  if (group_tiles < 1) throw std::invalid_argument("sparsity: group_tiles must be >= 1");
  if (k < 1) throw std::invalid_argument("sparsity: k must be >= 1");
  if (k1 > g.cam_h) throw std::invalid_argument("sparsity: k1 must be <= cam_h");
  if (static_cast<std::int64_t>(k1) * group_tiles < k)
    throw std::invalid_argument("sparsity: k1 * group_tiles must cover k");
}

ExpLut::ExpLut(int d_k) : d_k_(d_k) {
  if (d_k < 1) throw std::invalid_argument("exp lut: d_k must be >= 1");
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_k));
  for (int s = -128; s <= 127; ++s)
    entries_[static_cast<size_t>(s + 128)] = bf16_round(std::exp(s * scale));
}

BF16 ExpLut::at(int score) const {
  const int s = std::clamp(score, -128, 127);
  return entries_[static_cast<size_t>(s + 128)];
}

std::vector<Candidate> stage1_select(std::span<const int> tile_scores, int base_index, int k1) {
  if (k1 < 1) throw std::invalid_argument("stage1_select: k1 must be >= 1");
  if (static_cast<size_t>(k1) > tile_scores.size())
    throw std::invalid_argument("stage1_select: k1 " + std::to_string(k1) +
                                " exceeds tile size " + std::to_string(tile_scores.size()));
  std::vector<Candidate> all(tile_scores.size());
  for (size_t i = 0; i < tile_scores.size(); ++i)
    all[i] = {base_index + static_cast<int>(i), tile_scores[i]};
  std::partial_sort(all.begin(), all.begin() + k1, all.end(), candidate_before);
  all.resize(static_cast<size_t>(k1));
  return all;
}

namespace {

// Keeps the best k of running + pending, like one pass through the
// fixed-width selection network.
void merge_select(std::vector<Candidate>& running, std::vector<Candidate>& pending, int k,
                  int& passes) {
  running.insert(running.end(), pending.begin(), pending.end());
  pending.clear();
  std::sort(running.begin(), running.end(), candidate_before);
  if (static_cast<int>(running.size()) > k) running.resize(static_cast<size_t>(k));
  ++passes;
}

}  // namespace

CandidateSet streaming_topk(const std::vector<std::vector<Candidate>>& per_tile,
                            const SparsityConfig& cfg) {
  const int capacity = 2 * cfg.k;
  CandidateSet out;
  std::vector<Candidate> running;
  std::vector<Candidate> pending;
  std::int64_t streamed = 0;
  for (const auto& tile : per_tile) {
    for (const Candidate& c : tile) {
      pending.push_back(c);
      ++streamed;
      if (static_cast<int>(running.size() + pending.size()) == capacity)
        merge_select(running, pending, cfg.k, out.merge_passes);
    }
  }
  if (!pending.empty() || out.merge_passes == 0)
    merge_select(running, pending, cfg.k, out.merge_passes);
  out.items = std::move(running);
  out.short_set = streamed < cfg.k;
  return out;
}

AttentionWeights softmax32(const CandidateSet& candidates, const ExpLut& lut) {
  if (candidates.items.empty()) throw std::invalid_argument("softmax32: empty candidate set");
  AttentionWeights w;
  w.indices.reserve(candidates.items.size());
  w.probs.reserve(candidates.items.size());

  BF16 denom = bf16_round(0.0);
  for (const Candidate& c : candidates.items) denom = bf16_add(denom, lut.at(c.score));
  for (const Candidate& c : candidates.items) {
    w.indices.push_back(c.index);
    w.probs.push_back(bf16_div(lut.at(c.score), denom));
  }
  return w;
}

ValueMatrix ValueMatrix::from_bf16(int rows, int cols, std::vector<BF16> data) {
  if (data.size() != static_cast<size_t>(rows) * cols)
    throw std::invalid_argument("value matrix: bf16 payload size mismatch");
  ValueMatrix v;
  v.kind = Kind::Bf16;
  v.bf16_data = std::move(data);
  v.rows = rows;
  v.cols = cols;
  return v;
}

ValueMatrix ValueMatrix::from_int(IntMatrix m) {
  ValueMatrix v;
  v.kind = Kind::Int;
  v.rows = m.rows;
  v.cols = m.cols;
  v.int_data = std::move(m);
  return v;
}

double ValueMatrix::at(int r, int c) const {
  if (r < 0 || r >= rows || c < 0 || c >= cols)
    throw std::out_of_range("value matrix index (" + std::to_string(r) + "," +
                            std::to_string(c) + ")");
  if (kind == Kind::Bf16) return bf16_data[static_cast<size_t>(r) * cols + c].to_double();
  return static_cast<double>(int_data.at(r, c));
}

std::vector<BF16> contextualize(const AttentionWeights& weights, const ValueMatrix& values) {
  for (int idx : weights.indices)
    if (idx < 0 || idx >= values.rows)
      throw std::out_of_range("contextualize: value row " + std::to_string(idx) +
                              " out of range [0," + std::to_string(values.rows) + ")");
  std::vector<BF16> out(static_cast<size_t>(values.cols), bf16_round(0.0));
  for (size_t i = 0; i < weights.indices.size(); ++i) {
    const int row = weights.indices[i];
    const BF16 w = weights.probs[i];
    for (int c = 0; c < values.cols; ++c)
      out[static_cast<size_t>(c)] =
          bf16_round(out[static_cast<size_t>(c)].to_double() + w.to_double() * values.at(row, c));
  }
  return out;
}

nlohmann::json ExecutionTrace::to_json() const {
  nlohmann::json j;
  j["scores"] = scores;
  nlohmann::json tiles = nlohmann::json::array();
  for (const auto& tile : stage1) {
    nlohmann::json t = nlohmann::json::array();
    for (const auto& c : tile) t.push_back({{"index", c.index}, {"score", c.score}});
    tiles.push_back(std::move(t));
  }
  j["stage1"] = std::move(tiles);
  nlohmann::json finals = nlohmann::json::array();
  for (const auto& c : final_candidates.items)
    finals.push_back({{"index", c.index}, {"score", c.score}});
  j["final"] = std::move(finals);
  j["short_set"] = final_candidates.short_set;
  j["merge_passes"] = final_candidates.merge_passes;
  nlohmann::json w = nlohmann::json::array();
  for (size_t i = 0; i < weights.indices.size(); ++i)
    w.push_back({{"index", weights.indices[i]},
                 {"bits", weights.probs[i].bits},
                 {"value", weights.probs[i].to_double()}});
  j["weights"] = std::move(w);
  j["counts"] = {{"cam_searches", cam_searches},   {"adc_conversions", adc_conversions},
                 {"top2_ops", top2_ops},           {"merge_ops", merge_ops},
                 {"lut_lookups", lut_lookups},     {"div_ops", div_ops},
                 {"mac_ops", mac_ops},             {"value_rows_fetched", value_rows_fetched}};
  return j;
}

AttentionResult camformer_attention(const BitVector& query, const BitMatrix& keys,
                                    const ValueMatrix& values, const CamGeometry& g,
                                    const NoiseModel& noise, const SparsityConfig& sparsity,
                                    int valid_length, const ExpLut& lut) {
  sparsity.validate(g);
  if (valid_length < 1 || valid_length > keys.rows())
    throw std::invalid_argument("attention: valid_length " + std::to_string(valid_length) +
                                " outside [1," + std::to_string(keys.rows()) + "]");
  if (values.rows < keys.rows())
    throw std::invalid_argument("attention: value matrix has fewer rows than keys");
  if (lut.d_k() != keys.cols())
    throw std::invalid_argument("attention: lut d_k " + std::to_string(lut.d_k()) +
                                " != key width " + std::to_string(keys.cols()));

  AttentionResult res;
  ExecutionTrace& trace = res.trace;

  // Causal prefix: only the first valid_length keys are searchable.
  const BitMatrix prefix = keys.top_rows(valid_length);

  const TilePlan plan = TilePlan::make(valid_length, keys.cols(), g);
  ScoreVector sv = bimv_tiled(query, prefix, g, noise);
  trace.scores = sv.scores;
  trace.cam_searches = static_cast<std::int64_t>(plan.h_tiles) * plan.v_tiles;
  trace.adc_conversions = trace.cam_searches * g.cam_h;

  trace.stage1.reserve(static_cast<size_t>(plan.h_tiles));
  for (int h = 0; h < plan.h_tiles; ++h) {
    const int base = h * g.cam_h;
    const int rows = std::min(g.cam_h, valid_length - base);
    // Short causal tiles keep whatever they have when k1 exceeds them.
    const int k1 = std::min(sparsity.k1, rows);
    trace.stage1.push_back(
        stage1_select(std::span<const int>(sv.scores.data() + base, static_cast<size_t>(rows)),
                      base, k1));
    ++trace.top2_ops;
    trace.value_rows_fetched += k1;
  }

  trace.final_candidates = streaming_topk(trace.stage1, sparsity);
  trace.merge_ops = trace.final_candidates.merge_passes;

  trace.weights = softmax32(trace.final_candidates, lut);
  trace.lut_lookups = static_cast<std::int64_t>(trace.final_candidates.items.size());
  trace.div_ops = trace.lut_lookups;

  res.output = contextualize(trace.weights, values);
  trace.mac_ops = static_cast<std::int64_t>(trace.weights.indices.size()) * values.cols;
  return res;
}

double recall_bound(int k, int n, int m, double delta_min) {
  if (k < 0 || n < 0 || k > n) throw std::invalid_argument("recall_bound: need 0 <= k <= N");
  if (m < 1) throw std::invalid_argument("recall_bound: m must be >= 1");
  if (delta_min < 0) throw std::invalid_argument("recall_bound: delta_min must be >= 0");
  return static_cast<double>(k) * static_cast<double>(n - k) *
         std::exp(-2.0 * m * delta_min * delta_min);
}

namespace {

std::vector<int> topk_index_set(std::span<const double> scores, int k) {
  std::vector<int> order(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) order[i] = static_cast<int>(i);
  std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
    return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)] ||
           (scores[static_cast<size_t>(a)] == scores[static_cast<size_t>(b)] && a < b);
  });
  order.resize(static_cast<size_t>(k));
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace

bool margin_guarantee(std::span<const double> exact_scores,
                      std::span<const double> perturbed_scores, int k, double epsilon) {
  if (k < 1) throw std::invalid_argument("margin_guarantee: k must be >= 1");
  if (exact_scores.size() != perturbed_scores.size())
    throw std::invalid_argument("margin_guarantee: score vectors differ in length");
  if (exact_scores.size() < static_cast<size_t>(k) + 1)
    throw std::invalid_argument("margin_guarantee: need at least k+1 scores");
  if (epsilon < 0) throw std::invalid_argument("margin_guarantee: epsilon must be >= 0");
  for (size_t i = 0; i < exact_scores.size(); ++i)
    if (std::abs(perturbed_scores[i] - exact_scores[i]) > epsilon)
      throw std::invalid_argument("margin_guarantee: perturbation at " + std::to_string(i) +
                                  " exceeds epsilon");

  std::vector<double> sorted(exact_scores.begin(), exact_scores.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double margin = sorted[static_cast<size_t>(k - 1)] - sorted[static_cast<size_t>(k)];
  return margin > 2.0 * epsilon;
}

std::vector<int> exact_bipolar_scores(const BitVector& query, const BitMatrix& keys,
                                      int valid_length) {
  if (valid_length < 1 || valid_length > keys.rows())
    throw std::invalid_argument("exact scores: bad valid_length");
  std::vector<int> scores(static_cast<size_t>(valid_length));
  for (int r = 0; r < valid_length; ++r)
    scores[static_cast<size_t>(r)] =
        2 * hamming_matches_words(keys.row_words(r), query.words(), keys.cols()) - keys.cols();
  return scores;
}

std::vector<int> topk_indices_by_order(std::span<const int> scores, int k) {
  std::vector<int> order(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) order[i] = static_cast<int>(i);
  const size_t take = std::min(static_cast<size_t>(k), order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                    order.end(), [&](int a, int b) {
                      return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)] ||
                             (scores[static_cast<size_t>(a)] == scores[static_cast<size_t>(b)] &&
                              a < b);
                    });
  order.resize(take);
  return order;
}

std::vector<double> reference_dense_attention(const BitVector& query, const BitMatrix& keys,
                                              const ValueMatrix& values, int valid_length,
                                              int top_k) {
  const std::vector<int> scores = exact_bipolar_scores(query, keys, valid_length);
  std::vector<int> active;
  if (top_k < 0 || top_k >= valid_length) {
    active.resize(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) active[i] = static_cast<int>(i);
  } else {
    active = topk_indices_by_order(scores, top_k);
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(keys.cols()));
  double denom = 0.0;
  std::vector<double> expw(active.size());
  for (size_t i = 0; i < active.size(); ++i) {
    expw[i] = std::exp(scores[static_cast<size_t>(active[i])] * scale);
    denom += expw[i];
  }
  std::vector<double> out(static_cast<size_t>(values.cols), 0.0);
  for (size_t i = 0; i < active.size(); ++i) {
    const double w = expw[i] / denom;
    for (int c = 0; c < values.cols; ++c)
      out[static_cast<size_t>(c)] += w * values.at(active[i], c);
  }
  return out;
}

}  // namespace camformer
