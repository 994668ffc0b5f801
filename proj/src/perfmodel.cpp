#include "camformer/perfmodel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace camformer {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

}  // namespace

void Workload::validate() const {
  if (n < 1 || d_k < 1 || d_v < 1 || heads < 1)
    throw std::invalid_argument("workload: all dimensions must be >= 1");
}

void TimingConfig::validate() const {
  if (system_clock_ghz <= 0 || cam_clock_mhz <= 0)
    throw std::invalid_argument("timing: clocks must be > 0");
  for (int v : {cam_program, cam_search, adc, top2_sorter, top32_merge, lut_lookup, t_div,
                t_mac, n_mac, cores})
    if (v < 1) throw std::invalid_argument("timing: cycle counts and unit counts must be >= 1");
}

void DramConfig::validate() const {
  if (t_rc_ns <= 0 || page_bytes < 1 || row_bytes < 1 || channel_gbps <= 0 || bank_overlap < 1)
    throw std::invalid_argument("dram: invalid parameter");
  if (page_bytes % row_bytes != 0)
    throw std::invalid_argument("dram: page size must be a multiple of the row size");
}

EventCounts EventCounts::analytic(const Workload& w, const CamGeometry& g,
                                  const SparsityConfig& s, const DramConfig& d) {
  w.validate();
  g.validate();
  const std::int64_t h_tiles = ceil_div(w.n, g.cam_h);
  const std::int64_t v_tiles = ceil_div(w.d_k, g.cam_w);
  const std::int64_t tiles = h_tiles * v_tiles * w.heads;
  const std::int64_t kept = std::min<std::int64_t>(s.k, h_tiles * s.k1);

  EventCounts c;
  c.cam_program_tiles = tiles;
  c.cam_searches = tiles;
  c.adc_conversions = tiles * g.cam_h;
  c.key_sram_rows = tiles * g.cam_h;
  c.top2_ops = h_tiles * v_tiles * w.heads;
  c.top32_merges = static_cast<std::int64_t>(topk_merge_passes(
                       static_cast<int>(h_tiles * s.k1), s.k)) *
                   w.heads;
  c.luts = kept * w.heads;
  c.divs = kept * w.heads;
  c.macs = kept * w.d_v * w.heads;
  const std::int64_t fetched_rows = h_tiles * s.k1 * w.heads;
  c.value_sram_elems = fetched_rows * w.d_v + c.macs;  // prefetch writes + MAC reads
  c.dram_bits = fetched_rows * d.row_bytes * 8;
  return c;
}

EventCounts EventCounts::from_trace(const ExecutionTrace& t, const CamGeometry& g, int d_v,
                                    int heads, const DramConfig& d) {
  EventCounts c;
  c.cam_program_tiles = t.cam_searches;
  c.cam_searches = t.cam_searches;
  c.adc_conversions = t.adc_conversions;
  c.key_sram_rows = t.cam_searches * g.cam_h;
  c.top2_ops = t.top2_ops;
  c.top32_merges = t.merge_ops;
  c.luts = t.lut_lookups;
  c.divs = t.div_ops;
  c.macs = t.mac_ops;
  c.value_sram_elems = t.value_rows_fetched * d_v + t.mac_ops;
  c.dram_bits = t.value_rows_fetched * d.row_bytes * 8;
  return c.scaled(heads);
}

EventCounts EventCounts::scaled(std::int64_t factor) const {
  EventCounts c = *this;
  c.cam_program_tiles *= factor;
  c.cam_searches *= factor;
  c.adc_conversions *= factor;
  c.key_sram_rows *= factor;
  c.value_sram_elems *= factor;
  c.macs *= factor;
  c.divs *= factor;
  c.luts *= factor;
  c.top2_ops *= factor;
  c.top32_merges *= factor;
  c.dram_bits *= factor;
  return c;
}

std::int64_t softmax_latency(int t_div, bool pipelined, int k) {
  if (t_div < 1) throw std::invalid_argument("softmax_latency: t_div must be >= 1");
  if (k < 1) throw std::invalid_argument("softmax_latency: k must be >= 1");
  if (pipelined) return static_cast<std::int64_t>(k - 1) + t_div;
  return static_cast<std::int64_t>(k) * t_div;
}

CoarseSchedule coarse_schedule(std::span<const double> stage_latencies) {
  if (stage_latencies.empty()) throw std::invalid_argument("coarse_schedule: no stages");
  CoarseSchedule sched;
  for (double l : stage_latencies) {
    if (l <= 0) throw std::invalid_argument("coarse_schedule: latencies must be > 0");
    sched.period = std::max(sched.period, l);
  }
  sched.stalls.reserve(stage_latencies.size());
  for (double l : stage_latencies) sched.stalls.push_back(sched.period - l);
  return sched;
}

int topk_merge_passes(int candidates, int k) {
  if (candidates <= 2 * k) return 1;
  return 1 + static_cast<int>(ceil_div(candidates - 2 * k, k));
}

SimReport simulate_query(const Workload& w, const TimingConfig& t, const SparsityConfig& s,
                         const CamGeometry& g, const DramConfig& d) {
  w.validate();
  t.validate();
  g.validate();
  s.validate(g);
  d.validate();
  if (w.heads % t.cores != 0)
    throw std::invalid_argument("timing: cores must divide the head count");
  const int heads_per_core = w.heads / t.cores;

  const std::int64_t h_tiles = ceil_div(w.n, g.cam_h);
  const std::int64_t v_tiles = ceil_div(w.d_k, g.cam_w);
  const std::int64_t tiles_per_head = h_tiles * v_tiles;

  // Association: the CAM pipeline refills per head (the stored key set
  // swaps), then streams one tile per search interval.
  const std::int64_t assoc_fill = t.cam_program + t.adc + t.top2_sorter;
  const double assoc_ns = heads_per_core *
                          static_cast<double>(assoc_fill + tiles_per_head * t.cam_search) *
                          t.cam_period_ns();

  const int candidates = static_cast<int>(h_tiles) * s.k1;
  const int merges = topk_merge_passes(candidates, s.k);
  const std::int64_t norm_cycles = static_cast<std::int64_t>(merges) * t.top32_merge +
                                   softmax_latency(t.t_div, true, s.k) + (t.lut_lookup - 1);
  const double norm_ns = heads_per_core * static_cast<double>(norm_cycles) *
                         t.system_period_ns();

  const std::int64_t dram_fill =
      static_cast<std::int64_t>(std::ceil(d.t_rc_ns / t.system_period_ns()));
  const std::int64_t mac_slots = ceil_div(static_cast<std::int64_t>(s.k) * w.d_v, t.n_mac) *
                                 t.t_mac;
  const double ctx_ns = heads_per_core * static_cast<double>(dram_fill + mac_slots) *
                        t.system_period_ns();

  const double stage_lat[] = {assoc_ns, norm_ns, ctx_ns};
  const CoarseSchedule sched = coarse_schedule(stage_lat);

  SimReport r;
  r.stages = {{"association", assoc_ns, sched.stalls[0]},
              {"normalization", norm_ns, sched.stalls[1]},
              {"contextualization", ctx_ns, sched.stalls[2]}};
  r.period_ns = sched.period;
  r.throughput_qry_per_ms = 1e6 / sched.period;
  r.n_mac = t.n_mac;
  r.k = s.k;
  r.cam_h = g.cam_h;
  r.cam_w = g.cam_w;
  r.cam_clock_mhz = t.cam_clock_mhz;
  r.cores = t.cores;
  r.dram = dram_check(w, s, g, t, d, r.throughput_qry_per_ms * 1000.0);
  return r;
}

DramCheck dram_check(const Workload& w, const SparsityConfig& s, const CamGeometry& g,
                     const TimingConfig& t, const DramConfig& d, double queries_per_s) {
  w.validate();
  g.validate();
  d.validate();
  if (queries_per_s <= 0) throw std::invalid_argument("dram_check: need positive throughput");

  DramCheck c;
  const std::int64_t h_tiles = ceil_div(w.n, g.cam_h);
  c.bytes_per_query = static_cast<std::int64_t>(w.heads) * h_tiles * s.k1 * d.row_bytes;
  c.bandwidth_gbps = static_cast<double>(c.bytes_per_query) * queries_per_s / 1e9;
  c.rows_per_page = d.rows_per_page();
  c.page_sets_per_query = static_cast<std::int64_t>(w.heads) * ceil_div(w.n, c.rows_per_page);

  // Value-buffer drain slot per page set: the prefetched candidates of one
  // page get this much MAC issue time, which the next activation must fit
  // inside for the stream to stay ahead.
  const std::int64_t tiles_per_set = ceil_div(c.rows_per_page, g.cam_h);
  c.set_slot_ns = static_cast<double>(s.k1 * tiles_per_set) *
                  static_cast<double>(ceil_div(w.d_v, t.n_mac) * t.t_mac) *
                  t.system_period_ns();
  c.activation_ns_per_query =
      static_cast<double>(c.page_sets_per_query) * d.t_rc_ns / d.bank_overlap;

  const double period_ns = 1e9 / queries_per_s;
  c.latency_hidden = c.page_sets_per_query <= 1 ||
                     (c.bandwidth_gbps <= d.channel_gbps && d.t_rc_ns <= c.set_slot_ns &&
                      c.activation_ns_per_query <= period_ns);
  return c;
}

namespace {

double scaled_mac_area(const AreaConfig& a, int n_mac) { return a.mac_unit_mm2 * n_mac; }

// Blocks whose size tracks the swept parameters; SRAM capacity is sized by
// the target context length and stays fixed.
std::vector<BreakdownEntry> area_blocks(const AreaConfig& a, const TimingConfig& t,
                                        const SparsityConfig& s, const CamGeometry& g) {
  const double cam_scale = static_cast<double>(g.cam_h) * g.cam_w / (16.0 * 64.0);
  const double adc_scale = static_cast<double>(g.cam_h) / 16.0;
  const double topk_scale = static_cast<double>(s.k) / 32.0;
  return {
      {"key_sram", a.key_sram_mm2, 0.0},
      {"value_sram", a.value_sram_mm2, 0.0},
      {"bacam", a.bacam_mm2 * cam_scale, 0.0},
      {"adc", a.adc_mm2 * adc_scale, 0.0},
      {"top2", a.top2_mm2, 0.0},
      {"top32", a.top32_mm2 * topk_scale, 0.0},
      {"softmax", a.softmax_mm2, 0.0},
      {"mac", scaled_mac_area(a, t.n_mac), 0.0},
      {"other", a.other_mm2, 0.0},
  };
}

}  // namespace

void energy_area_report(const EventCounts& counts, const EnergyConfig& e, const AreaConfig& a,
                        const TimingConfig& t, const SparsityConfig& s, const CamGeometry& g,
                        SimReport& report) {
  const double bacam_pj = counts.cam_program_tiles * e.cam_program_tile_pj +
                          counts.cam_searches * e.cam_search_tile_pj;
  const double adc_pj = counts.adc_conversions * e.adc_conversion_pj;
  const double key_pj = counts.key_sram_rows * e.key_sram_row_pj;
  const double value_pj = counts.value_sram_elems * e.value_sram_elem_pj;
  const double mac_pj = counts.macs * e.mac_pj;
  const double top2_pj = counts.top2_ops * e.top2_op_pj;
  const double top32_pj = counts.top32_merges * e.top32_merge_pj;
  const double lut_pj = counts.luts * e.lut_pj;
  const double div_pj = counts.divs * e.div_pj;
  const double total_pj =
      bacam_pj + adc_pj + key_pj + value_pj + mac_pj + top2_pj + top32_pj + lut_pj + div_pj;

  report.energy_per_query_nj = total_pj / 1000.0;
  report.qry_per_mj = total_pj > 0 ? 1e9 / total_pj : 0.0;
  report.dram_energy_per_query_nj = counts.dram_bits * e.dram_per_bit_pj / 1000.0;

  auto pct = [total_pj](double v) { return total_pj > 0 ? 100.0 * v / total_pj : 0.0; };
  report.energy_components = {
      {"value_sram", value_pj, pct(value_pj)}, {"key_sram", key_pj, pct(key_pj)},
      {"mac", mac_pj, pct(mac_pj)},            {"bacam", bacam_pj, pct(bacam_pj)},
      {"adc", adc_pj, pct(adc_pj)},            {"top2", top2_pj, pct(top2_pj)},
      {"top32", top32_pj, pct(top32_pj)},      {"lut", lut_pj, pct(lut_pj)},
      {"div", div_pj, pct(div_pj)},
  };
  const double assoc_pj = key_pj + bacam_pj + adc_pj + top2_pj;
  const double norm_pj = top32_pj + lut_pj + div_pj;
  const double ctx_pj = value_pj + mac_pj;
  report.energy_stages = {
      {"association", assoc_pj, pct(assoc_pj)},
      {"normalization", norm_pj, pct(norm_pj)},
      {"contextualization", ctx_pj, pct(ctx_pj)},
  };

  report.area_blocks = area_blocks(a, t, s, g);
  double core_area = 0.0;
  for (const auto& b : report.area_blocks) core_area += b.value;
  for (auto& b : report.area_blocks)
    b.percent = core_area > 0 ? 100.0 * b.value / core_area : 0.0;
  report.area_mm2 = core_area * t.cores;
  double sram = 0.0, top32_area = 0.0;
  for (const auto& b : report.area_blocks) {
    if (b.name == "key_sram" || b.name == "value_sram") sram += b.value;
    if (b.name == "top32") top32_area = b.value;
  }
  report.sram_area_percent = core_area > 0 ? 100.0 * sram / core_area : 0.0;
  report.top32_area_percent = core_area > 0 ? 100.0 * top32_area / core_area : 0.0;

  const double qps = report.throughput_qry_per_ms * 1000.0;
  report.dynamic_power_w = total_pj * 1e-12 * qps;
  report.static_power_w = e.static_power_w * t.cores;
  report.total_power_w = report.dynamic_power_w + report.static_power_w;
}

SimReport simulate_full(const Workload& w, const TimingConfig& t, const SparsityConfig& s,
                        const CamGeometry& g, const DramConfig& d, const EnergyConfig& e,
                        const AreaConfig& a) {
  SimReport r = simulate_query(w, t, s, g, d);
  energy_area_report(EventCounts::analytic(w, g, s, d), e, a, t, s, g, r);
  return r;
}

namespace {

bool dominates(const SimReport& x, const SimReport& y) {
  const bool ge = x.throughput_qry_per_ms >= y.throughput_qry_per_ms &&
                  x.total_power_w <= y.total_power_w && x.area_mm2 <= y.area_mm2;
  const bool strict = x.throughput_qry_per_ms > y.throughput_qry_per_ms ||
                      x.total_power_w < y.total_power_w || x.area_mm2 < y.area_mm2;
  return ge && strict;
}

struct DsePoint {
  TimingConfig timing;
  SparsityConfig sparsity;
  CamGeometry geometry;
};

std::vector<DsePoint> expand_grid(const TimingConfig& base_t, const SparsityConfig& base_s,
                                  const CamGeometry& base_g, const DseGrid& grid) {
  const std::vector<int> n_macs = grid.n_mac.empty() ? std::vector<int>{base_t.n_mac}
                                                     : grid.n_mac;
  const std::vector<int> ks = grid.k.empty() ? std::vector<int>{base_s.k} : grid.k;
  const std::vector<std::pair<int, int>> hws =
      grid.cam_hw.empty() ? std::vector<std::pair<int, int>>{{base_g.cam_h, base_g.cam_w}}
                          : grid.cam_hw;
  const std::vector<double> clocks = grid.cam_clock_mhz.empty()
                                         ? std::vector<double>{base_t.cam_clock_mhz}
                                         : grid.cam_clock_mhz;
  std::vector<DsePoint> points;
  points.reserve(n_macs.size() * ks.size() * hws.size() * clocks.size());
  for (int nm : n_macs)
    for (int k : ks)
      for (auto [h, wdt] : hws)
        for (double clk : clocks) {
          DsePoint p{base_t, base_s, base_g};
          p.timing.n_mac = nm;
          p.timing.cam_clock_mhz = clk;
          p.sparsity.k = k;
          // Keep the candidate pool covering k when k grows.
          p.sparsity.k1 =
              std::max(base_s.k1, static_cast<int>(ceil_div(k, base_s.group_tiles)));
          p.geometry.cam_h = h;
          p.geometry.cam_w = wdt;
          points.push_back(p);
        }
  return points;
}

}  // namespace

static DseResult dse_impl(const Workload& w, const TimingConfig& base_t,
                          const SparsityConfig& base_s, const CamGeometry& base_g,
                          const DramConfig& d, const EnergyConfig& e, const AreaConfig& a,
                          const DseGrid& grid, bool parallel) {
  const auto points = expand_grid(base_t, base_s, base_g, grid);
  if (points.empty()) throw std::invalid_argument("dse: empty grid");
  DseResult res;
  res.points.resize(points.size());
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(points.size()); ++i) {
      const auto& p = points[static_cast<size_t>(i)];
      res.points[static_cast<size_t>(i)] =
          simulate_full(w, p.timing, p.sparsity, p.geometry, d, e, a);
    }
  } else {
    for (size_t i = 0; i < points.size(); ++i) {
      const auto& p = points[i];
      res.points[i] = simulate_full(w, p.timing, p.sparsity, p.geometry, d, e, a);
    }
  }
  for (size_t i = 0; i < res.points.size(); ++i) {
    bool dominated = false;
    for (size_t j = 0; j < res.points.size() && !dominated; ++j)
      if (j != i && dominates(res.points[j], res.points[i])) dominated = true;
    if (!dominated) res.pareto.push_back(i);
  }
  return res;
}

DseResult dse_sweep(const Workload& w, const TimingConfig& base_t, const SparsityConfig& base_s,
                    const CamGeometry& base_g, const DramConfig& d, const EnergyConfig& e,
                    const AreaConfig& a, const DseGrid& grid) {
  return dse_impl(w, base_t, base_s, base_g, d, e, a, grid, true);
}

DseResult dse_sweep_serial(const Workload& w, const TimingConfig& base_t,
                           const SparsityConfig& base_s, const CamGeometry& base_g,
                           const DramConfig& d, const EnergyConfig& e, const AreaConfig& a,
                           const DseGrid& grid) {
  return dse_impl(w, base_t, base_s, base_g, d, e, a, grid, false);
}

Paper65nmPreset paper65nm_preset() {
  // All defaults already describe the calibrated 65 nm point.
  return Paper65nmPreset{};
}

nlohmann::json SimReport::to_json() const {
  nlohmann::json j;
  nlohmann::json stages_j = nlohmann::json::array();
  for (const auto& st : stages)
    stages_j.push_back(
        {{"name", st.name}, {"latency_ns", st.latency_ns}, {"stall_ns", st.stall_ns}});
  j["stages"] = std::move(stages_j);
  j["period_ns"] = period_ns;
  j["throughput_qry_per_ms"] = throughput_qry_per_ms;
  j["energy_per_query_nj"] = energy_per_query_nj;
  j["qry_per_mj"] = qry_per_mj;
  j["dram_energy_per_query_nj"] = dram_energy_per_query_nj;
  auto breakdown = [](const std::vector<BreakdownEntry>& v) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& b : v)
      out.push_back({{"name", b.name}, {"value", b.value}, {"percent", b.percent}});
    return out;
  };
  j["energy_components"] = breakdown(energy_components);
  j["energy_stages"] = breakdown(energy_stages);
  j["dynamic_power_w"] = dynamic_power_w;
  j["static_power_w"] = static_power_w;
  j["total_power_w"] = total_power_w;
  j["area_mm2"] = area_mm2;
  j["area_blocks"] = breakdown(area_blocks);
  j["sram_area_percent"] = sram_area_percent;
  j["top32_area_percent"] = top32_area_percent;
  j["dram"] = {{"bytes_per_query", dram.bytes_per_query},
               {"bandwidth_gbps", dram.bandwidth_gbps},
               {"rows_per_page", dram.rows_per_page},
               {"page_sets_per_query", dram.page_sets_per_query},
               {"set_slot_ns", dram.set_slot_ns},
               {"activation_ns_per_query", dram.activation_ns_per_query},
               {"latency_hidden", dram.latency_hidden}};
  j["config"] = {{"n_mac", n_mac},   {"k", k},
                 {"cam_h", cam_h},   {"cam_w", cam_w},
                 {"cam_clock_mhz", cam_clock_mhz}, {"cores", cores}};
  return j;
}

std::string SimReport::csv_header() {
  return "n_mac,k,cam_h,cam_w,cam_clock_mhz,cores,period_ns,throughput_qry_per_ms,"
         "energy_per_query_nj,qry_per_mj,dynamic_power_w,total_power_w,area_mm2,"
         "dram_bandwidth_gbps,dram_latency_hidden";
}

std::string SimReport::csv_row() const {
  std::ostringstream os;
  os.precision(10);
  os << n_mac << ',' << k << ',' << cam_h << ',' << cam_w << ',' << cam_clock_mhz << ','
     << cores << ',' << period_ns << ',' << throughput_qry_per_ms << ','
     << energy_per_query_nj << ',' << qry_per_mj << ',' << dynamic_power_w << ','
     << total_power_w << ',' << area_mm2 << ',' << dram.bandwidth_gbps << ','
     << (dram.latency_hidden ? 1 : 0);
  return os.str();
}

}  // namespace camformer
