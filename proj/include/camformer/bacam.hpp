#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "camformer/bitcore.hpp"

namespace camformer {

// CAM tile geometry and ADC policy. The default 6-bit ADC maps [0,1] onto
// 64 codes, so a full match saturates at code 63 (score 62); the ideal
// full-scale policy resolves all cam_w+1 match levels and recovers the
// bipolar dot exactly, which the oracle suites rely on.
struct CamGeometry {
  int cam_h = 16;
  int cam_w = 64;
  int adc_bits = 6;
  bool adc_ideal_full_scale = false;

  int max_code() const { return adc_ideal_full_scale ? cam_w : (1 << adc_bits) - 1; }
  void validate() const;
};

enum class PvtCorner { TT, SS, FF };

struct CornerParams {
  double sigma_mult = 1.0;
  double offset = 0.0;
};

// Corner defaults are calibration knobs; only aggregate corner statistics
// are published, not per-corner parameters.
struct CornerTable {
  CornerParams tt{1.0, 0.0};
  CornerParams ss{1.25, -0.005};
  CornerParams ff{1.25, +0.005};
  CornerParams at(PvtCorner c) const;
};

// Additive Gaussian matchline noise, clamped to [0,1] at the sample site.
// Sampling is Box-Muller over mt19937_64 so a seed pins the exact stream
// on every platform. One model instance per logical execution stream;
// derive substreams for concurrent work.
class NoiseModel {
 public:
  NoiseModel() : NoiseModel(0.014, PvtCorner::TT, 0) {}
  NoiseModel(double sigma, PvtCorner corner, std::uint64_t seed,
             CornerTable corners = CornerTable{});

  double sigma() const { return sigma_; }
  PvtCorner corner() const { return corner_; }
  std::uint64_t seed() const { return seed_; }
  double effective_sigma() const;
  double offset() const;

  // Fresh stream with seed XOR index; used per tile / per block so results
  // are independent of evaluation order.
  NoiseModel substream(std::uint64_t index) const;

  // clamp(ideal + corner offset + Normal(0, effective sigma), 0, 1).
  double sample_voltage(double ideal);

 private:
  double gaussian();

  double sigma_ = 0.0;
  PvtCorner corner_ = PvtCorner::TT;
  CornerTable corners_;
  std::uint64_t seed_ = 0;
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct MatchlineReading {
  double ideal_voltage = 0.0;  // m / cam_w
  double voltage = 0.0;        // after noise and clamping
  int code = 0;
  int score = 0;  // 2*code - cam_w
};

struct DigitizeResult {
  int code = 0;
  int score = 0;
};

// Linear ADC transfer: code = clamp(round(v * cam_w), 0, max_code),
// score = 2*code - cam_w. Monotone non-decreasing in v.
DigitizeResult digitize(double v, const CamGeometry& g);

// One associative search of a stored tile against a broadcast query;
// returns one reading per stored row, in row order.
std::vector<MatchlineReading> search_tile(const BitMatrix& tile, const BitVector& query,
                                          const CamGeometry& g, NoiseModel& noise);

struct CamEnergyParams {
  double e_program_pj = 9.0;  // programming one tile
  double e_search_pj = 4.0;   // one search op
  double e_adc_pj = 0.5;      // one conversion
};

// Per-op energy with programming cost amortized over ops_per_program.
double per_op_energy(double ops_per_program, const CamEnergyParams& p);

struct PvtStats {
  double mean_abs_error = 0.0;
  double max_deviation = 0.0;
};

// Monte-Carlo matchline error statistics over random stored rows and
// queries. Deterministic for a given NoiseModel seed regardless of thread
// count: trials are chunked into fixed-size blocks, each block drawing
// from its own derived substream, and block sums reduce in block order.
PvtStats pvt_error_stats(const CamGeometry& g, const NoiseModel& noise, std::int64_t trials);
PvtStats pvt_error_stats_serial(const CamGeometry& g, const NoiseModel& noise,
                                std::int64_t trials);

}  // namespace camformer
