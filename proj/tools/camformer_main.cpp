#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "camformer/experiments.hpp"
#include "camformer/tensor_io.hpp"

namespace {

constexpr const char* kFormatsText = R"(Tensor and report formats
=========================

BACAM1  packed binary matrix (queries, keys)
  offset 0   magic "BACAM1" (6 bytes)
  offset 6   u32 LE  rows
  offset 10  u32 LE  bits per row
  offset 14  rows * ceil(bits/8) payload bytes, row-major.
             Within a byte, bit 0 is the lowest position; padding bits in
             the last byte of a row must be zero. Bit b encodes the bipolar
             value 2b-1.

BAINT1  integer matrix (values)
  offset 0   magic "BAINT1" (6 bytes)
  offset 6   u32 LE  rows
  offset 10  u32 LE  cols
  offset 14  u8      bit width (2, 4 or 8)
  offset 15  u8      signed flag (0/1)
  offset 16  row-major entries at the smallest whole-byte width,
             two's complement when signed.

report.json  { "schema": 1, "experiment": ..., "config_hash": ...,
               "seed": <when used>, "results": { ... } }
metrics.csv  flat single-table metrics; dse runs additionally write
             reports.csv (all points) and pareto.csv (non-dominated set).
)";

int parse_synthetic(const std::string& text, camformer::SyntheticSpec& spec) {
  int n = 0, dk = 0, dv = 0;
  if (std::sscanf(text.c_str(), "%d,%d,%d", &n, &dk, &dv) != 3 || n < 1 || dk < 1 || dv < 1)
    return -1;
  spec.n = n;
  spec.d_k = dk;
  spec.d_v = dv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CAMformer binary-attention accelerator simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::string synthetic_arg;
  auto* run = app.add_subcommand("run", "run an experiment described by a JSON config");
  run->add_option("config", config_path, "experiment config file")->required();
  run->add_option("--out", out_override, "override the config's output directory");
  run->add_option("--synthetic", synthetic_arg,
                  "generate tensors as n,d_k,d_v instead of reading input files");

  std::string val_path;
  auto* validate = app.add_subcommand("validate", "validate a config without running it");
  validate->add_option("config", val_path, "experiment config file")->required();

  int synth_n = 16, synth_dk = 64, synth_dv = 64;
  std::uint64_t synth_seed = 0;
  std::string synth_dist = "uniform";
  std::string synth_out = ".";
  auto* synth = app.add_subcommand("synth", "emit seeded synthetic tensor files");
  synth->add_option("--n", synth_n, "sequence length")->required();
  synth->add_option("--d-k", synth_dk, "key width in bits");
  synth->add_option("--d-v", synth_dv, "value width");
  auto* seed_opt = synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--dist", synth_dist, "uniform | adversarial-clustered");
  synth->add_option("--out", synth_out, "output directory");

  auto* formats = app.add_subcommand("formats", "describe the on-disk file formats");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      camformer::ExperimentConfig cfg = camformer::load_experiment_config(config_path);
      if (!out_override.empty()) cfg.output_dir = out_override;
      if (!synthetic_arg.empty()) {
        camformer::SyntheticSpec spec;
        if (parse_synthetic(synthetic_arg, spec) != 0)
          throw camformer::config_error("--synthetic expects n,d_k,d_v with positive values");
        cfg.synthetic = spec;
        cfg.inputs.reset();
      }
      const camformer::RunOutcome out = camformer::run_experiment(cfg);
      std::cout << "wrote " << out.report_path << " and " << out.metrics_path << "\n";
      return 0;
    }
    if (*validate) {
      camformer::load_experiment_config(val_path);
      std::cout << "config ok: " << val_path << "\n";
      return 0;
    }
    if (*synth) {
      if (!synth_seed_set && std::getenv("CAMFORMER_SEED") == nullptr)
        throw camformer::config_error("synth requires --seed (or CAMFORMER_SEED)");
      if (const char* env = std::getenv("CAMFORMER_SEED")) synth_seed = std::strtoull(env, nullptr, 10);
      const auto files = camformer::emit_synthetic(synth_n, synth_dk, synth_dv, synth_seed,
                                                   synth_dist, synth_out);
      std::cout << "wrote " << files.q_path << ", " << files.k_path << ", " << files.v_path
                << "\n";
      return 0;
    }
    if (*formats) {
      std::cout << kFormatsText;
      return 0;
    }
  } catch (const std::exception& e) {
    const int code = camformer::exit_code_for(e);
    std::cerr << (code == 1 ? "config error: " : code == 2 ? "tensor file error: "
                                                           : "internal error: ")
              << e.what() << "\n";
    return code;
  }
  return 0;
}
