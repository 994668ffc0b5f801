#include "camformer/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "camformer/tensor_io.hpp"

namespace camformer {

namespace fs = std::filesystem;

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot write output file: " + path);
  out << text;
  if (!out) throw io_error("short write to output file: " + path);
}

nlohmann::json report_envelope(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["schema"] = 1;
  j["experiment"] = to_string(cfg.kind);
  j["config_hash"] = config_hash_hex(cfg.canonical);
  if (cfg.needs_seed()) j["seed"] = cfg.effective_seed();
  return j;
}

std::string csv_number(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

// Flips `flips` distinct bits of `base`, chosen by the rng.
BitVector flip_bits(const BitVector& base, int flips, std::mt19937_64& rng) {
  BitVector v = base;
  std::uniform_int_distribution<int> pick(0, base.size() - 1);
  std::vector<bool> used(static_cast<size_t>(base.size()), false);
  int done = 0;
  while (done < flips) {
    const int i = pick(rng);
    if (used[static_cast<size_t>(i)]) continue;
    used[static_cast<size_t>(i)] = true;
    v.set(i, !v.get(i));
    ++done;
  }
  return v;
}

}  // namespace

SyntheticFiles emit_synthetic(int n, int d_k, int d_v, std::uint64_t seed,
                              const std::string& distribution, const std::string& out_dir) {
  if (n < 1 || d_k < 1 || d_v < 1)
    throw std::invalid_argument("emit_synthetic: dimensions must be >= 1");
  fs::create_directories(out_dir);

  BitMatrix queries(n, d_k);
  BitMatrix keys(n, d_k);
  if (distribution == "uniform") {
    queries = random_bit_matrix(n, d_k, seed * 3 + 1);
    keys = random_bit_matrix(n, d_k, seed * 3 + 2);
  } else if (distribution == "adversarial-clustered") {
    // All queries sit one flip away from a base pattern; the first
    // min(32, n) keys sit three flips away and every other key 3/8 of the
    // width away, so the exact top-32 of any query lands in the leading
    // tiles.
    std::mt19937_64 rng(seed * 3 + 3);
    const BitVector base = random_bit_vector(d_k, seed * 3 + 4);
    const int near = std::min(32, n);
    const int near_flips = std::min(3, std::max(1, d_k / 8));
    const int far_flips = std::max(near_flips + 2, (3 * d_k) / 8);
    for (int r = 0; r < n; ++r) {
      queries.set_row(r, flip_bits(base, 1, rng));
      keys.set_row(r, flip_bits(base, r < near ? near_flips : std::min(far_flips, d_k), rng));
    }
  } else {
    throw std::invalid_argument("emit_synthetic: unknown distribution " + distribution);
  }
  IntMatrix values = random_int_matrix(n, d_v, 8, true, seed * 3 + 5);

  SyntheticFiles files;
  files.q_path = (fs::path(out_dir) / "q.bacam").string();
  files.k_path = (fs::path(out_dir) / "k.bacam").string();
  files.v_path = (fs::path(out_dir) / "v.baint").string();
  write_bacam1(files.q_path, queries);
  write_bacam1(files.k_path, keys);
  write_baint1(files.v_path, values, 8, true);
  return files;
}

namespace {

struct StepOutcome {
  double deviation_dense = 0.0;
  double deviation_topk = 0.0;
  double recall = 1.0;
};

StepOutcome run_step(int step, const BitMatrix& queries, const BitMatrix& keys,
                     const ValueMatrix& values, const CamGeometry& g, double sigma,
                     PvtCorner corner, const CornerTable& corners, std::uint64_t seed,
                     const SparsityConfig& sparsity, const ExpLut& lut) {
  const int valid = step + 1;
  const BitVector query = queries.row(step);
  // Per-step substream: the step index is folded into the high bits so it
  // cannot collide with the per-tile XOR inside bimv.
  NoiseModel noise(sigma, corner, seed ^ (static_cast<std::uint64_t>(step + 1) << 32), corners);
  const AttentionResult res =
      camformer_attention(query, keys, values, g, noise, sparsity, valid, lut);

  StepOutcome out;
  const auto dense = reference_dense_attention(query, keys, values, valid, -1);
  const auto topk = reference_dense_attention(query, keys, values, valid, sparsity.k);
  double scale = 0.0;
  for (double v : dense) scale = std::max(scale, std::abs(v));
  scale = std::max(scale, 1e-30);
  for (size_t c = 0; c < dense.size(); ++c) {
    out.deviation_dense =
        std::max(out.deviation_dense, std::abs(res.output[c].to_double() - dense[c]) / scale);
    out.deviation_topk =
        std::max(out.deviation_topk, std::abs(res.output[c].to_double() - topk[c]) / scale);
  }

  const auto exact = exact_bipolar_scores(query, keys, valid);
  const auto true_top = topk_indices_by_order(exact, std::min(sparsity.k, valid));
  std::vector<int> got;
  got.reserve(res.trace.final_candidates.items.size());
  for (const auto& c : res.trace.final_candidates.items) got.push_back(c.index);
  int hit = 0;
  for (int idx : true_top)
    if (std::find(got.begin(), got.end(), idx) != got.end()) ++hit;
  out.recall = true_top.empty() ? 1.0 : static_cast<double>(hit) / true_top.size();
  return out;
}

CausalSweepResult causal_impl(const BitMatrix& queries, const BitMatrix& keys,
                              const ValueMatrix& values, const CamGeometry& g, double sigma,
                              PvtCorner corner, const CornerTable& corners, std::uint64_t seed,
                              const SparsityConfig& sparsity, bool parallel) {
  if (queries.rows() != keys.rows() || queries.cols() != keys.cols())
    throw std::invalid_argument("causal sweep: query/key shape mismatch");
  const int n = keys.rows();
  const ExpLut lut(keys.cols());
  std::vector<StepOutcome> steps(static_cast<size_t>(n));
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < n; ++t)
      steps[static_cast<size_t>(t)] =
          run_step(t, queries, keys, values, g, sigma, corner, corners, seed, sparsity, lut);
  } else {
    for (int t = 0; t < n; ++t)
      steps[static_cast<size_t>(t)] =
          run_step(t, queries, keys, values, g, sigma, corner, corners, seed, sparsity, lut);
  }

  CausalSweepResult res;
  res.per_step_deviation_dense.reserve(steps.size());
  res.per_step_recall.reserve(steps.size());
  double recall_sum = 0.0;
  for (const auto& s : steps) {
    res.max_scaled_deviation_dense = std::max(res.max_scaled_deviation_dense, s.deviation_dense);
    res.max_scaled_deviation_topk = std::max(res.max_scaled_deviation_topk, s.deviation_topk);
    res.min_recall = std::min(res.min_recall, s.recall);
    recall_sum += s.recall;
    res.per_step_deviation_dense.push_back(s.deviation_dense);
    res.per_step_recall.push_back(s.recall);
  }
  res.mean_recall = steps.empty() ? 1.0 : recall_sum / static_cast<double>(steps.size());
  return res;
}

}  // namespace

CausalSweepResult causal_sweep(const BitMatrix& queries, const BitMatrix& keys,
                               const ValueMatrix& values, const CamGeometry& g, double sigma,
                               PvtCorner corner, const CornerTable& corners, std::uint64_t seed,
                               const SparsityConfig& sparsity) {
  return causal_impl(queries, keys, values, g, sigma, corner, corners, seed, sparsity, true);
}

CausalSweepResult causal_sweep_serial(const BitMatrix& queries, const BitMatrix& keys,
                                      const ValueMatrix& values, const CamGeometry& g,
                                      double sigma, PvtCorner corner, const CornerTable& corners,
                                      std::uint64_t seed, const SparsityConfig& sparsity) {
  return causal_impl(queries, keys, values, g, sigma, corner, corners, seed, sparsity, false);
}

namespace {

RunOutcome write_reports(const ExperimentConfig& cfg, nlohmann::json results,
                         const std::string& metrics_csv) {
  fs::create_directories(cfg.output_dir);
  nlohmann::json report = report_envelope(cfg);
  report["results"] = std::move(results);
  RunOutcome out;
  out.report_path = (fs::path(cfg.output_dir) / "report.json").string();
  out.metrics_path = (fs::path(cfg.output_dir) / "metrics.csv").string();
  write_text(out.report_path, report.dump(2) + "\n");
  write_text(out.metrics_path, metrics_csv);
  return out;
}

RunOutcome run_attn(const ExperimentConfig& cfg) {
  BitMatrix queries(1, 1), keys(1, 1);
  IntMatrix values_int;
  if (cfg.inputs) {
    queries = read_bacam1(cfg.inputs->q);
    keys = read_bacam1(cfg.inputs->k);
    values_int = read_baint1(cfg.inputs->v).matrix;
  } else {
    const auto& s = *cfg.synthetic;
    const SyntheticFiles files = emit_synthetic(s.n, s.d_k, s.d_v, cfg.effective_seed(),
                                                s.distribution, cfg.output_dir);
    queries = read_bacam1(files.q_path);
    keys = read_bacam1(files.k_path);
    values_int = read_baint1(files.v_path).matrix;
  }
  if (keys.rows() != values_int.rows)
    throw config_error("attn: key and value tensors disagree on row count");

  const ValueMatrix values = ValueMatrix::from_int(std::move(values_int));
  const CausalSweepResult sweep =
      causal_sweep(queries, keys, values, cfg.geometry, cfg.noise_sigma, cfg.noise_corner,
                   cfg.corners, cfg.effective_seed(), cfg.sparsity);

  nlohmann::json results;
  results["steps"] = keys.rows();
  results["max_scaled_deviation_dense"] = sweep.max_scaled_deviation_dense;
  results["max_scaled_deviation_topk"] = sweep.max_scaled_deviation_topk;
  results["mean_recall"] = sweep.mean_recall;
  results["min_recall"] = sweep.min_recall;
  results["per_step_deviation_dense"] = sweep.per_step_deviation_dense;
  results["per_step_recall"] = sweep.per_step_recall;

  std::ostringstream csv;
  csv << "steps,max_scaled_deviation_dense,max_scaled_deviation_topk,mean_recall,min_recall\n"
      << keys.rows() << ',' << csv_number(sweep.max_scaled_deviation_dense) << ','
      << csv_number(sweep.max_scaled_deviation_topk) << ',' << csv_number(sweep.mean_recall)
      << ',' << csv_number(sweep.min_recall) << '\n';
  return write_reports(cfg, std::move(results), csv.str());
}

RunOutcome run_noise_stats(const ExperimentConfig& cfg) {
  const NoiseModel noise(cfg.noise_sigma, cfg.noise_corner, cfg.effective_seed(), cfg.corners);
  const PvtStats stats = pvt_error_stats(cfg.geometry, noise, cfg.trials);
  const double expected_mean =
      noise.effective_sigma() * std::sqrt(2.0 / 3.14159265358979323846);

  nlohmann::json results;
  results["trials"] = cfg.trials;
  results["sigma"] = cfg.noise_sigma;
  results["mean_abs_error"] = stats.mean_abs_error;
  results["max_deviation"] = stats.max_deviation;
  results["half_normal_expected_mean"] = expected_mean;

  std::ostringstream csv;
  csv << "trials,sigma,mean_abs_error,max_deviation,half_normal_expected_mean\n"
      << cfg.trials << ',' << csv_number(cfg.noise_sigma) << ','
      << csv_number(stats.mean_abs_error) << ',' << csv_number(stats.max_deviation) << ','
      << csv_number(expected_mean) << '\n';
  return write_reports(cfg, std::move(results), csv.str());
}

RunOutcome run_recall(const ExperimentConfig& cfg) {
  std::mt19937_64 rng(cfg.effective_seed());
  const int n = cfg.workload.n;
  const int k = cfg.sparsity.k;
  std::int64_t certified = 0;
  std::int64_t violations = 0;
  double recall_sum = 0.0;
  double min_recall = 1.0;

  if (cfg.recall.mode == "perturbation") {
    std::normal_distribution<double> score_dist(0.0, 1.0);
    std::uniform_real_distribution<double> eps_dist(0.0, cfg.recall.epsilon);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (std::int64_t t = 0; t < cfg.recall.trials; ++t) {
      std::vector<double> exact(static_cast<size_t>(n));
      for (auto& v : exact) v = score_dist(rng);
      const double eps = eps_dist(rng);
      std::vector<double> noisy(exact);
      for (auto& v : noisy) v += eps * unit(rng);
      const bool cert = margin_guarantee(exact, noisy, k, eps);

      // recall of perturbed top-k vs exact top-k index sets
      std::vector<std::pair<double, int>> ex, no;
      for (int i = 0; i < n; ++i) {
        ex.emplace_back(exact[static_cast<size_t>(i)], i);
        no.emplace_back(noisy[static_cast<size_t>(i)], i);
      }
      auto top_set = [&](std::vector<std::pair<double, int>>& v) {
        std::partial_sort(v.begin(), v.begin() + k, v.end(), [](auto a, auto b) {
          return a.first > b.first || (a.first == b.first && a.second < b.second);
        });
        std::vector<int> s;
        for (int i = 0; i < k; ++i) s.push_back(v[static_cast<size_t>(i)].second);
        std::sort(s.begin(), s.end());
        return s;
      };
      const auto ts = top_set(ex);
      const auto ps = top_set(no);
      int hit = 0;
      for (int idx : ts)
        if (std::binary_search(ps.begin(), ps.end(), idx)) ++hit;
      const double recall = static_cast<double>(hit) / k;
      recall_sum += recall;
      min_recall = std::min(min_recall, recall);
      if (cert) {
        ++certified;
        if (recall < 1.0) ++violations;
      }
    }
  } else {  // cam: noisy CAM scores against exact bipolar dots
    for (std::int64_t t = 0; t < cfg.recall.trials; ++t) {
      const std::uint64_t s = rng();
      const BitVector query = random_bit_vector(cfg.workload.d_k, s + 1);
      const BitMatrix keys = random_bit_matrix(n, cfg.workload.d_k, s + 2);
      NoiseModel noise(cfg.noise_sigma, cfg.noise_corner, s + 3, cfg.corners);
      const ScoreVector sv = bimv_tiled_serial(query, keys, cfg.geometry, noise);
      const auto exact = exact_bipolar_scores(query, keys, n);

      std::vector<double> exact_d(exact.begin(), exact.end());
      std::vector<double> noisy_d(sv.scores.begin(), sv.scores.end());
      double eps = 0.0;
      for (size_t i = 0; i < exact_d.size(); ++i)
        eps = std::max(eps, std::abs(noisy_d[i] - exact_d[i]));
      const bool cert = margin_guarantee(exact_d, noisy_d, k, eps);

      const auto truth = topk_indices_by_order(exact, k);
      const auto got = topk_indices_by_order(sv.scores, k);
      std::vector<int> got_sorted(got);
      std::sort(got_sorted.begin(), got_sorted.end());
      int hit = 0;
      for (int idx : truth)
        if (std::binary_search(got_sorted.begin(), got_sorted.end(), idx)) ++hit;
      const double recall = static_cast<double>(hit) / k;
      recall_sum += recall;
      min_recall = std::min(min_recall, recall);
      if (cert) {
        ++certified;
        if (recall < 1.0) ++violations;
      }
    }
  }

  const double bound =
      recall_bound(k, n, cfg.workload.d_k, cfg.recall.delta_min);
  nlohmann::json results;
  results["mode"] = cfg.recall.mode;
  results["trials"] = cfg.recall.trials;
  results["certified_trials"] = certified;
  results["certificate_violations"] = violations;
  results["mean_recall"] = recall_sum / static_cast<double>(cfg.recall.trials);
  results["min_recall"] = min_recall;
  results["hoeffding_bound"] = bound;
  results["hoeffding_delta_min"] = cfg.recall.delta_min;

  std::ostringstream csv;
  csv << "mode,trials,certified_trials,certificate_violations,mean_recall,min_recall,"
         "hoeffding_bound\n"
      << cfg.recall.mode << ',' << cfg.recall.trials << ',' << certified << ',' << violations
      << ',' << csv_number(recall_sum / static_cast<double>(cfg.recall.trials)) << ','
      << csv_number(min_recall) << ',' << csv_number(bound) << '\n';
  return write_reports(cfg, std::move(results), csv.str());
}

RunOutcome run_perf(const ExperimentConfig& cfg) {
  const SimReport r = simulate_full(cfg.workload, cfg.timing, cfg.sparsity, cfg.geometry,
                                    cfg.dram, cfg.energy, cfg.area);
  std::ostringstream csv;
  csv << SimReport::csv_header() << '\n' << r.csv_row() << '\n';
  return write_reports(cfg, r.to_json(), csv.str());
}

RunOutcome run_dse(const ExperimentConfig& cfg) {
  const DseResult res = dse_sweep(cfg.workload, cfg.timing, cfg.sparsity, cfg.geometry,
                                  cfg.dram, cfg.energy, cfg.area, cfg.dse_grid);
  nlohmann::json results;
  results["points"] = nlohmann::json::array();
  for (const auto& p : res.points) results["points"].push_back(p.to_json());
  results["pareto_indices"] = res.pareto;

  std::ostringstream all_csv;
  all_csv << SimReport::csv_header() << '\n';
  for (const auto& p : res.points) all_csv << p.csv_row() << '\n';
  std::ostringstream pareto_csv;
  pareto_csv << SimReport::csv_header() << '\n';
  for (std::size_t i : res.pareto) pareto_csv << res.points[i].csv_row() << '\n';

  RunOutcome out = write_reports(cfg, std::move(results), all_csv.str());
  write_text((fs::path(cfg.output_dir) / "reports.csv").string(), all_csv.str());
  write_text((fs::path(cfg.output_dir) / "pareto.csv").string(), pareto_csv.str());
  return out;
}

RunOutcome run_dram(const ExperimentConfig& cfg) {
  double qps = cfg.queries_per_s;
  if (qps <= 0) {
    const SimReport r =
        simulate_query(cfg.workload, cfg.timing, cfg.sparsity, cfg.geometry, cfg.dram);
    qps = r.throughput_qry_per_ms * 1000.0;
  }
  const DramCheck c =
      dram_check(cfg.workload, cfg.sparsity, cfg.geometry, cfg.timing, cfg.dram, qps);

  nlohmann::json results;
  results["queries_per_s"] = qps;
  results["bytes_per_query"] = c.bytes_per_query;
  results["bandwidth_gbps"] = c.bandwidth_gbps;
  results["rows_per_page"] = c.rows_per_page;
  results["page_sets_per_query"] = c.page_sets_per_query;
  results["set_slot_ns"] = c.set_slot_ns;
  results["activation_ns_per_query"] = c.activation_ns_per_query;
  results["latency_hidden"] = c.latency_hidden;

  std::ostringstream csv;
  csv << "queries_per_s,bytes_per_query,bandwidth_gbps,rows_per_page,latency_hidden\n"
      << csv_number(qps) << ',' << c.bytes_per_query << ',' << csv_number(c.bandwidth_gbps)
      << ',' << c.rows_per_page << ',' << (c.latency_hidden ? 1 : 0) << '\n';
  return write_reports(cfg, std::move(results), csv.str());
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::Attn: return run_attn(cfg);
    case ExperimentKind::NoiseStats: return run_noise_stats(cfg);
    case ExperimentKind::Recall: return run_recall(cfg);
    case ExperimentKind::Perf: return run_perf(cfg);
    case ExperimentKind::Dse: return run_dse(cfg);
    case ExperimentKind::Dram: return run_dram(cfg);
  }
  throw std::logic_error("run_experiment: unhandled experiment kind");
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const config_error*>(&e)) return 1;
  if (dynamic_cast<const std::invalid_argument*>(&e)) return 1;
  if (dynamic_cast<const io_error*>(&e)) return 2;
  return 3;
}

}  // namespace camformer
