#include "camformer/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

namespace camformer {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw config_error("'" + where + "' must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        ok = true;
        break;
      }
    if (!ok) throw config_error("unknown key '" + it.key() + "' in '" + where + "'");
  }
}

template <typename T>
T get_number(const json& obj, const std::string& where, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer())
      throw config_error("key '" + where + "." + key + "' must be an integer");
  } else {
    if (!v.is_number()) throw config_error("key '" + where + "." + key + "' must be a number");
  }
  return v.get<T>();
}

bool get_bool(const json& obj, const std::string& where, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) throw config_error("key '" + where + "." + key + "' must be a boolean");
  return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& where, const char* key,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) throw config_error("key '" + where + "." + key + "' must be a string");
  return v.get<std::string>();
}

CornerParams parse_corner(const json& obj, const std::string& where, CornerParams fallback) {
  check_keys(obj, where, {"sigma_mult", "offset"});
  CornerParams p = fallback;
  p.sigma_mult = get_number<double>(obj, where, "sigma_mult", p.sigma_mult);
  p.offset = get_number<double>(obj, where, "offset", p.offset);
  return p;
}

void apply_timing_preset(const json& obj, const std::string& where, TimingConfig& t) {
  const std::string preset = get_string(obj, where, "preset", "");
  if (preset.empty()) return;
  if (preset != "paper65nm")
    throw config_error("key '" + where + ".preset' names unknown preset '" + preset + "'");
  t = paper65nm_preset().timing;
}

}  // namespace

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Attn: return "attn";
    case ExperimentKind::NoiseStats: return "noise-stats";
    case ExperimentKind::Recall: return "recall";
    case ExperimentKind::Perf: return "perf";
    case ExperimentKind::Dse: return "dse";
    case ExperimentKind::Dram: return "dram";
  }
  return "?";
}

bool ExperimentConfig::needs_seed() const {
  return kind == ExperimentKind::Attn || kind == ExperimentKind::NoiseStats ||
         kind == ExperimentKind::Recall;
}

std::uint64_t ExperimentConfig::effective_seed() const {
  if (const char* env = std::getenv("CAMFORMER_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0')
      throw config_error("environment CAMFORMER_SEED is not an unsigned integer");
    return static_cast<std::uint64_t>(v);
  }
  return seed.value_or(0);
}

ExperimentConfig parse_experiment_config(const nlohmann::json& doc) {
  check_keys(doc, "config",
             {"experiment", "seed", "output_dir", "geometry", "noise", "sparsity", "timing",
              "energy", "area", "dram", "workload", "inputs", "synthetic", "trials",
              "queries_per_s", "recall", "dse_grid"});

  ExperimentConfig cfg;
  const std::string kind = get_string(doc, "config", "experiment", "");
  if (kind == "attn")
    cfg.kind = ExperimentKind::Attn;
  else if (kind == "noise-stats")
    cfg.kind = ExperimentKind::NoiseStats;
  else if (kind == "recall")
    cfg.kind = ExperimentKind::Recall;
  else if (kind == "perf")
    cfg.kind = ExperimentKind::Perf;
  else if (kind == "dse")
    cfg.kind = ExperimentKind::Dse;
  else if (kind == "dram")
    cfg.kind = ExperimentKind::Dram;
  else
    throw config_error("key 'experiment' must be one of attn, noise-stats, recall, perf, dse, "
                       "dram (got '" + kind + "')");

  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned() && !doc.at("seed").is_number_integer())
      throw config_error("key 'seed' must be an unsigned integer");
    const auto s = doc.at("seed").get<std::int64_t>();
    if (s < 0) throw config_error("key 'seed' must be an unsigned integer");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  cfg.output_dir = get_string(doc, "config", "output_dir", ".");

  if (doc.contains("geometry")) {
    const json& g = doc.at("geometry");
    check_keys(g, "geometry", {"cam_h", "cam_w", "adc_bits", "adc_ideal_full_scale"});
    cfg.geometry.cam_h = get_number<int>(g, "geometry", "cam_h", cfg.geometry.cam_h);
    cfg.geometry.cam_w = get_number<int>(g, "geometry", "cam_w", cfg.geometry.cam_w);
    cfg.geometry.adc_bits = get_number<int>(g, "geometry", "adc_bits", cfg.geometry.adc_bits);
    cfg.geometry.adc_ideal_full_scale =
        get_bool(g, "geometry", "adc_ideal_full_scale", cfg.geometry.adc_ideal_full_scale);
  }
  try {
    cfg.geometry.validate();
  } catch (const std::exception& e) {
    throw config_error(std::string("key 'geometry' invalid: ") + e.what());
  }

  if (doc.contains("noise")) {
    const json& n = doc.at("noise");
    check_keys(n, "noise", {"sigma", "corner", "corners"});
    cfg.noise_sigma = get_number<double>(n, "noise", "sigma", cfg.noise_sigma);
    if (cfg.noise_sigma < 0) throw config_error("key 'noise.sigma' must be >= 0");
    const std::string corner = get_string(n, "noise", "corner", "TT");
    if (corner == "TT")
      cfg.noise_corner = PvtCorner::TT;
    else if (corner == "SS")
      cfg.noise_corner = PvtCorner::SS;
    else if (corner == "FF")
      cfg.noise_corner = PvtCorner::FF;
    else
      throw config_error("key 'noise.corner' must be TT, SS or FF");
    if (n.contains("corners")) {
      const json& c = n.at("corners");
      check_keys(c, "noise.corners", {"tt", "ss", "ff"});
      if (c.contains("tt")) cfg.corners.tt = parse_corner(c.at("tt"), "noise.corners.tt", cfg.corners.tt);
      if (c.contains("ss")) cfg.corners.ss = parse_corner(c.at("ss"), "noise.corners.ss", cfg.corners.ss);
      if (c.contains("ff")) cfg.corners.ff = parse_corner(c.at("ff"), "noise.corners.ff", cfg.corners.ff);
    }
  }

  if (doc.contains("sparsity")) {
    const json& s = doc.at("sparsity");
    check_keys(s, "sparsity", {"k1", "group_tiles", "k"});
    cfg.sparsity.k1 = get_number<int>(s, "sparsity", "k1", cfg.sparsity.k1);
    cfg.sparsity.group_tiles = get_number<int>(s, "sparsity", "group_tiles", cfg.sparsity.group_tiles);
    cfg.sparsity.k = get_number<int>(s, "sparsity", "k", cfg.sparsity.k);
  }
  try {
    cfg.sparsity.validate(cfg.geometry);
  } catch (const std::exception& e) {
    throw config_error(std::string("key 'sparsity' invalid: ") + e.what());
  }

  if (doc.contains("timing")) {
    const json& t = doc.at("timing");
    check_keys(t, "timing",
               {"preset", "system_clock_ghz", "cam_clock_mhz", "cam_program", "cam_search",
                "adc", "top2_sorter", "top32_merge", "lut_lookup", "t_div", "t_mac", "n_mac",
                "cores"});
    apply_timing_preset(t, "timing", cfg.timing);
    cfg.timing.system_clock_ghz = get_number<double>(t, "timing", "system_clock_ghz", cfg.timing.system_clock_ghz);
    cfg.timing.cam_clock_mhz = get_number<double>(t, "timing", "cam_clock_mhz", cfg.timing.cam_clock_mhz);
    cfg.timing.cam_program = get_number<int>(t, "timing", "cam_program", cfg.timing.cam_program);
    cfg.timing.cam_search = get_number<int>(t, "timing", "cam_search", cfg.timing.cam_search);
    cfg.timing.adc = get_number<int>(t, "timing", "adc", cfg.timing.adc);
    cfg.timing.top2_sorter = get_number<int>(t, "timing", "top2_sorter", cfg.timing.top2_sorter);
    cfg.timing.top32_merge = get_number<int>(t, "timing", "top32_merge", cfg.timing.top32_merge);
    cfg.timing.lut_lookup = get_number<int>(t, "timing", "lut_lookup", cfg.timing.lut_lookup);
    cfg.timing.t_div = get_number<int>(t, "timing", "t_div", cfg.timing.t_div);
    cfg.timing.t_mac = get_number<int>(t, "timing", "t_mac", cfg.timing.t_mac);
    cfg.timing.n_mac = get_number<int>(t, "timing", "n_mac", cfg.timing.n_mac);
    cfg.timing.cores = get_number<int>(t, "timing", "cores", cfg.timing.cores);
  }
  try {
    cfg.timing.validate();
  } catch (const std::exception& e) {
    throw config_error(std::string("key 'timing' invalid: ") + e.what());
  }

  if (doc.contains("energy")) {
    const json& e = doc.at("energy");
    check_keys(e, "energy",
               {"preset", "cam_program_tile_pj", "cam_search_tile_pj", "adc_conversion_pj",
                "key_sram_row_pj", "value_sram_elem_pj", "mac_pj", "div_pj", "lut_pj",
                "top2_op_pj", "top32_merge_pj", "dram_per_bit_pj", "static_power_w"});
    const std::string preset = get_string(e, "energy", "preset", "");
    if (!preset.empty() && preset != "paper65nm")
      throw config_error("key 'energy.preset' names unknown preset '" + preset + "'");
    cfg.energy.cam_program_tile_pj = get_number<double>(e, "energy", "cam_program_tile_pj", cfg.energy.cam_program_tile_pj);
    cfg.energy.cam_search_tile_pj = get_number<double>(e, "energy", "cam_search_tile_pj", cfg.energy.cam_search_tile_pj);
    cfg.energy.adc_conversion_pj = get_number<double>(e, "energy", "adc_conversion_pj", cfg.energy.adc_conversion_pj);
    cfg.energy.key_sram_row_pj = get_number<double>(e, "energy", "key_sram_row_pj", cfg.energy.key_sram_row_pj);
    cfg.energy.value_sram_elem_pj = get_number<double>(e, "energy", "value_sram_elem_pj", cfg.energy.value_sram_elem_pj);
    cfg.energy.mac_pj = get_number<double>(e, "energy", "mac_pj", cfg.energy.mac_pj);
    cfg.energy.div_pj = get_number<double>(e, "energy", "div_pj", cfg.energy.div_pj);
    cfg.energy.lut_pj = get_number<double>(e, "energy", "lut_pj", cfg.energy.lut_pj);
    cfg.energy.top2_op_pj = get_number<double>(e, "energy", "top2_op_pj", cfg.energy.top2_op_pj);
    cfg.energy.top32_merge_pj = get_number<double>(e, "energy", "top32_merge_pj", cfg.energy.top32_merge_pj);
    cfg.energy.dram_per_bit_pj = get_number<double>(e, "energy", "dram_per_bit_pj", cfg.energy.dram_per_bit_pj);
    cfg.energy.static_power_w = get_number<double>(e, "energy", "static_power_w", cfg.energy.static_power_w);
    for (double v : {cfg.energy.cam_program_tile_pj, cfg.energy.cam_search_tile_pj,
                     cfg.energy.adc_conversion_pj, cfg.energy.key_sram_row_pj,
                     cfg.energy.value_sram_elem_pj, cfg.energy.mac_pj, cfg.energy.div_pj,
                     cfg.energy.lut_pj, cfg.energy.top2_op_pj, cfg.energy.top32_merge_pj,
                     cfg.energy.dram_per_bit_pj, cfg.energy.static_power_w})
      if (v < 0) throw config_error("key 'energy' fields must be >= 0");
  }

  if (doc.contains("area")) {
    const json& a = doc.at("area");
    check_keys(a, "area",
               {"preset", "key_sram_mm2", "value_sram_mm2", "bacam_mm2", "adc_mm2", "top2_mm2",
                "top32_mm2", "softmax_mm2", "mac_unit_mm2", "other_mm2"});
    const std::string preset = get_string(a, "area", "preset", "");
    if (!preset.empty() && preset != "paper65nm")
      throw config_error("key 'area.preset' names unknown preset '" + preset + "'");
    cfg.area.key_sram_mm2 = get_number<double>(a, "area", "key_sram_mm2", cfg.area.key_sram_mm2);
    cfg.area.value_sram_mm2 = get_number<double>(a, "area", "value_sram_mm2", cfg.area.value_sram_mm2);
    cfg.area.bacam_mm2 = get_number<double>(a, "area", "bacam_mm2", cfg.area.bacam_mm2);
    cfg.area.adc_mm2 = get_number<double>(a, "area", "adc_mm2", cfg.area.adc_mm2);
    cfg.area.top2_mm2 = get_number<double>(a, "area", "top2_mm2", cfg.area.top2_mm2);
    cfg.area.top32_mm2 = get_number<double>(a, "area", "top32_mm2", cfg.area.top32_mm2);
    cfg.area.softmax_mm2 = get_number<double>(a, "area", "softmax_mm2", cfg.area.softmax_mm2);
    cfg.area.mac_unit_mm2 = get_number<double>(a, "area", "mac_unit_mm2", cfg.area.mac_unit_mm2);
    cfg.area.other_mm2 = get_number<double>(a, "area", "other_mm2", cfg.area.other_mm2);
  }

  if (doc.contains("dram")) {
    const json& d = doc.at("dram");
    check_keys(d, "dram",
               {"t_rc_ns", "page_bytes", "row_bytes", "channel_gbps", "bank_overlap"});
    cfg.dram.t_rc_ns = get_number<double>(d, "dram", "t_rc_ns", cfg.dram.t_rc_ns);
    cfg.dram.page_bytes = get_number<int>(d, "dram", "page_bytes", cfg.dram.page_bytes);
    cfg.dram.row_bytes = get_number<int>(d, "dram", "row_bytes", cfg.dram.row_bytes);
    cfg.dram.channel_gbps = get_number<double>(d, "dram", "channel_gbps", cfg.dram.channel_gbps);
    cfg.dram.bank_overlap = get_number<int>(d, "dram", "bank_overlap", cfg.dram.bank_overlap);
  }
  try {
    cfg.dram.validate();
  } catch (const std::exception& e) {
    throw config_error(std::string("key 'dram' invalid: ") + e.what());
  }

  if (doc.contains("workload")) {
    const json& w = doc.at("workload");
    check_keys(w, "workload", {"n", "d_k", "d_v", "heads"});
    cfg.workload.n = get_number<int>(w, "workload", "n", cfg.workload.n);
    cfg.workload.d_k = get_number<int>(w, "workload", "d_k", cfg.workload.d_k);
    cfg.workload.d_v = get_number<int>(w, "workload", "d_v", cfg.workload.d_v);
    cfg.workload.heads = get_number<int>(w, "workload", "heads", cfg.workload.heads);
  }
  try {
    cfg.workload.validate();
  } catch (const std::exception& e) {
    throw config_error(std::string("key 'workload' invalid: ") + e.what());
  }

  if (doc.contains("inputs")) {
    const json& i = doc.at("inputs");
    check_keys(i, "inputs", {"q", "k", "v"});
    InputPaths paths;
    paths.q = get_string(i, "inputs", "q", "");
    paths.k = get_string(i, "inputs", "k", "");
    paths.v = get_string(i, "inputs", "v", "");
    if (paths.q.empty() || paths.k.empty() || paths.v.empty())
      throw config_error("key 'inputs' must name q, k and v tensor files");
    cfg.inputs = paths;
  }

  if (doc.contains("synthetic")) {
    const json& s = doc.at("synthetic");
    check_keys(s, "synthetic", {"n", "d_k", "d_v", "distribution"});
    SyntheticSpec spec;
    spec.n = get_number<int>(s, "synthetic", "n", cfg.workload.n);
    spec.d_k = get_number<int>(s, "synthetic", "d_k", cfg.workload.d_k);
    spec.d_v = get_number<int>(s, "synthetic", "d_v", cfg.workload.d_v);
    spec.distribution = get_string(s, "synthetic", "distribution", "uniform");
    if (spec.distribution != "uniform" && spec.distribution != "adversarial-clustered")
      throw config_error("key 'synthetic.distribution' must be uniform or adversarial-clustered");
    if (spec.n < 1 || spec.d_k < 1 || spec.d_v < 1)
      throw config_error("key 'synthetic' dimensions must be >= 1");
    cfg.synthetic = spec;
  }

  cfg.trials = get_number<std::int64_t>(doc, "config", "trials", cfg.trials);
  if (cfg.trials < 1) throw config_error("key 'trials' must be >= 1");
  cfg.queries_per_s = get_number<double>(doc, "config", "queries_per_s", cfg.queries_per_s);
  if (cfg.queries_per_s < 0) throw config_error("key 'queries_per_s' must be >= 0");

  if (doc.contains("recall")) {
    const json& r = doc.at("recall");
    check_keys(r, "recall", {"mode", "epsilon", "delta_min", "trials"});
    cfg.recall.mode = get_string(r, "recall", "mode", cfg.recall.mode);
    if (cfg.recall.mode != "cam" && cfg.recall.mode != "perturbation")
      throw config_error("key 'recall.mode' must be cam or perturbation");
    cfg.recall.epsilon = get_number<double>(r, "recall", "epsilon", cfg.recall.epsilon);
    cfg.recall.delta_min = get_number<double>(r, "recall", "delta_min", cfg.recall.delta_min);
    cfg.recall.trials = get_number<std::int64_t>(r, "recall", "trials", cfg.recall.trials);
    if (cfg.recall.epsilon < 0 || cfg.recall.delta_min < 0 || cfg.recall.trials < 1)
      throw config_error("key 'recall' fields out of range");
  }

  if (doc.contains("dse_grid")) {
    const json& g = doc.at("dse_grid");
    check_keys(g, "dse_grid", {"n_mac", "k", "cam_hw", "cam_clock_mhz"});
    auto read_int_list = [&](const char* key) {
      std::vector<int> out;
      if (!g.contains(key)) return out;
      if (!g.at(key).is_array())
        throw config_error(std::string("key 'dse_grid.") + key + "' must be an array");
      for (const auto& v : g.at(key)) {
        if (!v.is_number_integer())
          throw config_error(std::string("key 'dse_grid.") + key + "' must hold integers");
        out.push_back(v.get<int>());
      }
      return out;
    };
    cfg.dse_grid.n_mac = read_int_list("n_mac");
    cfg.dse_grid.k = read_int_list("k");
    if (g.contains("cam_hw")) {
      if (!g.at("cam_hw").is_array())
        throw config_error("key 'dse_grid.cam_hw' must be an array of [h,w] pairs");
      for (const auto& p : g.at("cam_hw")) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() ||
            !p[1].is_number_integer())
          throw config_error("key 'dse_grid.cam_hw' must be an array of [h,w] pairs");
        cfg.dse_grid.cam_hw.emplace_back(p[0].get<int>(), p[1].get<int>());
      }
    }
    if (g.contains("cam_clock_mhz")) {
      if (!g.at("cam_clock_mhz").is_array())
        throw config_error("key 'dse_grid.cam_clock_mhz' must be an array");
      for (const auto& v : g.at("cam_clock_mhz")) {
        if (!v.is_number()) throw config_error("key 'dse_grid.cam_clock_mhz' must hold numbers");
        cfg.dse_grid.cam_clock_mhz.push_back(v.get<double>());
      }
    }
  }

  if (cfg.needs_seed() && !cfg.seed.has_value() && std::getenv("CAMFORMER_SEED") == nullptr)
    throw config_error("key 'seed' is required for stochastic experiment '" + kind + "'");

  if (cfg.kind == ExperimentKind::Attn && !cfg.inputs && !cfg.synthetic)
    throw config_error("experiment 'attn' needs key 'inputs' or 'synthetic' tensors");

  cfg.canonical = doc;
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_experiment_config(doc);
}

std::string config_hash_hex(const nlohmann::json& canonical) {
  const std::string dump = canonical.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a 64
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace camformer
