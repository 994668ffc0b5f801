#pragma once

#include <string>

#include "camformer/config.hpp"

namespace camformer {

struct SyntheticFiles {
  std::string q_path;
  std::string k_path;
  std::string v_path;
};

// Writes seeded q/k (BACAM1) and int8 v (BAINT1) tensors into out_dir.
// "uniform" draws every bit independently; "adversarial-clustered" plants
// the 32 strongest keys inside the first two tiles so two-stage selection
// can be stressed.
SyntheticFiles emit_synthetic(int n, int d_k, int d_v, std::uint64_t seed,
                              const std::string& distribution, const std::string& out_dir);

// Loads (or synthesizes) tensors, runs the configured experiment and writes
// report.json plus metrics.csv (dse additionally writes reports.csv and
// pareto.csv) into the output directory. Identical config and seed produce
// byte-identical files.
struct RunOutcome {
  std::string report_path;
  std::string metrics_path;
};
RunOutcome run_experiment(const ExperimentConfig& cfg);

// Exit-code policy shared by the CLI and tests: 1 invalid config, 2 missing
// or corrupt tensor file, 3 internal invariant violation.
int exit_code_for(const std::exception& e);

// Functional causal sweep used by the attn experiment: one attention call
// per step t with valid_length t. The parallel path fans steps across
// threads; per-step noise substreams make it equal to the serial path.
struct CausalSweepResult {
  double max_scaled_deviation_dense = 0.0;  // vs dense wide-precision oracle
  double max_scaled_deviation_topk = 0.0;   // vs exact-top-k wide-precision oracle
  double mean_recall = 1.0;                 // vs exact top-k index sets
  double min_recall = 1.0;
  std::vector<double> per_step_deviation_dense;
  std::vector<double> per_step_recall;
};
CausalSweepResult causal_sweep(const BitMatrix& queries, const BitMatrix& keys,
                               const ValueMatrix& values, const CamGeometry& g,
                               double sigma, PvtCorner corner, const CornerTable& corners,
                               std::uint64_t seed, const SparsityConfig& sparsity);
CausalSweepResult causal_sweep_serial(const BitMatrix& queries, const BitMatrix& keys,
                                      const ValueMatrix& values, const CamGeometry& g,
                                      double sigma, PvtCorner corner, const CornerTable& corners,
                                      std::uint64_t seed, const SparsityConfig& sparsity);

}  // namespace camformer
