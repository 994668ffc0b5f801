#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "camformer/perfmodel.hpp"

#include "json.hpp"

namespace camformer {

// Invalid experiment configuration; the CLI maps this to exit code 1.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { Attn, NoiseStats, Recall, Perf, Dse, Dram };

std::string to_string(ExperimentKind k);

struct SyntheticSpec {
  int n = 0;
  int d_k = 64;
  int d_v = 64;
  std::string distribution = "uniform";  // or "adversarial-clustered"
};

struct InputPaths {
  std::string q;
  std::string k;
  std::string v;
};

struct RecallSpec {
  std::string mode = "cam";  // "cam" or "perturbation"
  double epsilon = 0.5;
  double delta_min = 0.1;
  std::int64_t trials = 1000;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Perf;
  std::optional<std::uint64_t> seed;
  std::string output_dir = ".";

  CamGeometry geometry;
  double noise_sigma = 0.014;
  PvtCorner noise_corner = PvtCorner::TT;
  CornerTable corners;
  SparsityConfig sparsity;
  TimingConfig timing;
  EnergyConfig energy;
  AreaConfig area;
  DramConfig dram;
  Workload workload;

  std::optional<InputPaths> inputs;
  std::optional<SyntheticSpec> synthetic;
  std::int64_t trials = 100000;
  double queries_per_s = 0.0;  // dram experiment; 0 = derive from simulate_query
  RecallSpec recall;
  DseGrid dse_grid;

  // Canonical re-serialization of the validated config; hashed into every
  // report so reruns are attributable.
  nlohmann::json canonical;

  bool needs_seed() const;
  std::uint64_t effective_seed() const;  // env CAMFORMER_SEED wins over config
};

// Parses and validates a config document. Unknown keys anywhere are
// rejected by name; type mismatches and range violations name the key.
ExperimentConfig parse_experiment_config(const nlohmann::json& doc);
ExperimentConfig load_experiment_config(const std::string& path);

std::string config_hash_hex(const nlohmann::json& canonical);

}  // namespace camformer
