#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "camformer/attention.hpp"
#include "camformer/bacam.hpp"

#include "json.hpp"

namespace camformer {

struct Workload {
  int n = 1024;
  int d_k = 64;
  int d_v = 64;
  int heads = 16;

  void validate() const;
};

// Per-op cycle counts are free calibration parameters; the paper pins only
// the clock frequencies and the end metrics. CAM-side counts run at the
// CAM clock, digital counts at the system clock.
struct TimingConfig {
  double system_clock_ghz = 1.0;
  double cam_clock_mhz = 500.0;
  int cam_program = 16;   // load one tile, one row per CAM cycle
  int cam_search = 2;     // four-phase search, tile issue interval
  int adc = 12;           // digitize a tile's matchlines
  int top2_sorter = 6;    // per-tile bitonic top-2 network
  int top32_merge = 21;   // one pass of the 2k-input selection network
  int lut_lookup = 1;
  int t_div = 10;         // bf16 divider end-to-end latency
  int t_mac = 1;
  int n_mac = 8;          // parallel bf16 MAC units
  int cores = 1;          // heads are split evenly across cores

  void validate() const;
  double cam_period_ns() const { return 1000.0 / cam_clock_mhz; }
  double system_period_ns() const { return 1.0 / system_clock_ghz; }
};

struct DramConfig {
  double t_rc_ns = 48.0;       // HBM3 row cycle
  int page_bytes = 8192;
  int row_bytes = 128;         // 64 lanes x 16 b value rows
  double channel_gbps = 51.2;  // one HBM3 channel
  int bank_overlap = 4;        // concurrent activations sustained per channel

  void validate() const;
  int rows_per_page() const { return page_bytes / row_bytes; }
};

// Per-event energies in pJ. The paper65nm preset is back-calibrated so the
// BERT-Large workload reproduces the published efficiency and breakdown
// shares; it is a calibration, not an ab-initio prediction.
struct EnergyConfig {
  double cam_program_tile_pj = 9.0;
  double cam_search_tile_pj = 3.956;
  double adc_conversion_pj = 0.5;
  double key_sram_row_pj = 1.3496;
  double value_sram_elem_pj = 0.2092;
  double mac_pj = 0.8772;
  double div_pj = 3.5;
  double lut_pj = 0.3;
  double top2_op_pj = 1.6;
  double top32_merge_pj = 8.0;
  double dram_per_bit_pj = 2330.0;  // 2.33 nJ/bit
  double static_power_w = 0.1487;   // per core; separate knob, see docs
};

// Block areas in mm^2 per core; mac_unit scales with n_mac.
struct AreaConfig {
  double key_sram_mm2 = 0.0420;
  double value_sram_mm2 = 0.0672;
  double bacam_mm2 = 0.0080;
  double adc_mm2 = 0.0160;
  double top2_mm2 = 0.0060;
  double top32_mm2 = 0.0676;
  double softmax_mm2 = 0.0120;
  double mac_unit_mm2 = 0.00375;
  double other_mm2 = 0.0112;
};

// Event counts for one whole query (all heads, all cores).
struct EventCounts {
  std::int64_t cam_program_tiles = 0;
  std::int64_t cam_searches = 0;
  std::int64_t adc_conversions = 0;
  std::int64_t key_sram_rows = 0;
  std::int64_t value_sram_elems = 0;
  std::int64_t macs = 0;
  std::int64_t divs = 0;
  std::int64_t luts = 0;
  std::int64_t top2_ops = 0;
  std::int64_t top32_merges = 0;
  std::int64_t dram_bits = 0;

  static EventCounts analytic(const Workload& w, const CamGeometry& g,
                              const SparsityConfig& s, const DramConfig& d);
  // Counts for `heads` repetitions of one traced head-query.
  static EventCounts from_trace(const ExecutionTrace& t, const CamGeometry& g, int d_v,
                                int heads, const DramConfig& d);
  EventCounts scaled(std::int64_t factor) const;
};

struct StageTiming {
  std::string name;
  double latency_ns = 0.0;
  double stall_ns = 0.0;
};

struct DramCheck {
  std::int64_t bytes_per_query = 0;
  double bandwidth_gbps = 0.0;
  int rows_per_page = 0;
  std::int64_t page_sets_per_query = 0;
  double set_slot_ns = 0.0;        // value-buffer drain slot per page set
  double activation_ns_per_query = 0.0;
  bool latency_hidden = false;
};

struct BreakdownEntry {
  std::string name;
  double value = 0.0;  // pJ or mm^2
  double percent = 0.0;
};

struct SimReport {
  // timing
  std::vector<StageTiming> stages;
  double period_ns = 0.0;
  double throughput_qry_per_ms = 0.0;
  // energy
  double energy_per_query_nj = 0.0;   // on-chip dynamic; DRAM reported apart
  double qry_per_mj = 0.0;
  double dram_energy_per_query_nj = 0.0;
  std::vector<BreakdownEntry> energy_components;
  std::vector<BreakdownEntry> energy_stages;
  // power
  double dynamic_power_w = 0.0;
  double static_power_w = 0.0;
  double total_power_w = 0.0;
  // area
  double area_mm2 = 0.0;
  std::vector<BreakdownEntry> area_blocks;
  double sram_area_percent = 0.0;
  double top32_area_percent = 0.0;
  // dram
  DramCheck dram;
  // configuration echo for sweeps
  int n_mac = 0;
  int k = 0;
  int cam_h = 0;
  int cam_w = 0;
  double cam_clock_mhz = 0.0;
  int cores = 1;

  nlohmann::json to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

// Softmax engine latency in cycles: serial k*t_div, pipelined (k-1)+t_div.
std::int64_t softmax_latency(int t_div, bool pipelined, int k = 32);

struct CoarseSchedule {
  double period = 0.0;
  std::vector<double> stalls;
};
// Longest stage sets the period; everything else stalls by the difference.
CoarseSchedule coarse_schedule(std::span<const double> stage_latencies);

// Number of selection-network passes the streaming top-k performs for
// `candidates` stage-1 survivors.
int topk_merge_passes(int candidates, int k);

// Cycle-approximate stage schedule for one query. Association streams
// ceil(n/cam_h)*v_tiles tiles per head through the CAM pipeline (fill, then
// one result per cam_search interval), refilling per head because the key
// set swaps; normalization runs the merge passes plus the pipelined
// softmax; contextualization waits one t_RC for the first value rows, then
// issues k*d_v MACs over n_mac units.
SimReport simulate_query(const Workload& w, const TimingConfig& t, const SparsityConfig& s,
                         const CamGeometry& g, const DramConfig& d);

DramCheck dram_check(const Workload& w, const SparsityConfig& s, const CamGeometry& g,
                     const TimingConfig& t, const DramConfig& d, double queries_per_s);

// Fills the energy/area/power sections of a report from event counts.
void energy_area_report(const EventCounts& counts, const EnergyConfig& e, const AreaConfig& a,
                        const TimingConfig& t, const SparsityConfig& s, const CamGeometry& g,
                        SimReport& report);

// Convenience: full report for one configuration.
SimReport simulate_full(const Workload& w, const TimingConfig& t, const SparsityConfig& s,
                        const CamGeometry& g, const DramConfig& d, const EnergyConfig& e,
                        const AreaConfig& a);

struct DseGrid {
  std::vector<int> n_mac;
  std::vector<int> k;
  std::vector<std::pair<int, int>> cam_hw;
  std::vector<double> cam_clock_mhz;
};

struct DseResult {
  std::vector<SimReport> points;     // grid order (row-major over the lists)
  std::vector<std::size_t> pareto;   // indices of non-dominated points, grid order
};

// One report per grid point; Pareto front by non-domination on
// (throughput up, power down, area down). Points are pure in their config,
// so the parallel path fans them out across threads.
DseResult dse_sweep(const Workload& w, const TimingConfig& base_t, const SparsityConfig& base_s,
                    const CamGeometry& base_g, const DramConfig& d, const EnergyConfig& e,
                    const AreaConfig& a, const DseGrid& grid);
DseResult dse_sweep_serial(const Workload& w, const TimingConfig& base_t,
                           const SparsityConfig& base_s, const CamGeometry& base_g,
                           const DramConfig& d, const EnergyConfig& e, const AreaConfig& a,
                           const DseGrid& grid);

// Calibration preset reproducing the published 65 nm design point.
struct Paper65nmPreset {
  TimingConfig timing;
  EnergyConfig energy;
  AreaConfig area;
  DramConfig dram;
  CamGeometry geometry;
  SparsityConfig sparsity;
  Workload workload;
};
Paper65nmPreset paper65nm_preset();

}  // namespace camformer
