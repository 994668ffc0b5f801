#include "camformer/bacam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace camformer {

void CamGeometry::validate() const {
  if (cam_h < 1) throw std::invalid_argument("geometry: cam_h must be >= 1");
  if (cam_w < 1) throw std::invalid_argument("geometry: cam_w must be >= 1");
  if (adc_bits < 1 || adc_bits > 16)
    throw std::invalid_argument("geometry: adc_bits must be in [1,16]");
}

CornerParams CornerTable::at(PvtCorner c) const {
  switch (c) {
    case PvtCorner::TT: return tt;
    case PvtCorner::SS: return ss;
    case PvtCorner::FF: return ff;
  }
  return tt;
}

NoiseModel::NoiseModel(double sigma, PvtCorner corner, std::uint64_t seed, CornerTable corners)
    : sigma_(sigma), corner_(corner), corners_(corners), seed_(seed), rng_(seed) {
  if (sigma < 0) throw std::invalid_argument("noise: sigma must be >= 0");
}

double NoiseModel::effective_sigma() const { return sigma_ * corners_.at(corner_).sigma_mult; }

double NoiseModel::offset() const { return corners_.at(corner_).offset; }

NoiseModel NoiseModel::substream(std::uint64_t index) const {
  return NoiseModel(sigma_, corner_, seed_ ^ index, corners_);
}

double NoiseModel::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller on (0,1] uniforms built from the top 53 bits.
  const double u1 = 1.0 - static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  const double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

double NoiseModel::sample_voltage(double ideal) {
  double v = ideal + offset();
  if (sigma_ > 0) v += effective_sigma() * gaussian();
  return std::clamp(v, 0.0, 1.0);
}

DigitizeResult digitize(double v, const CamGeometry& g) {
  if (!(v >= 0.0 && v <= 1.0))
    throw std::logic_error("digitize: voltage " + std::to_string(v) +
                           " outside [0,1]; callers must clamp");
  int code = static_cast<int>(std::lround(v * g.cam_w));
  code = std::clamp(code, 0, g.max_code());
  return {code, 2 * code - g.cam_w};
}

std::vector<MatchlineReading> search_tile(const BitMatrix& tile, const BitVector& query,
                                          const CamGeometry& g, NoiseModel& noise) {
  g.validate();
  if (query.size() != g.cam_w)
    throw std::invalid_argument("search_tile: query width " + std::to_string(query.size()) +
                                " != cam_w " + std::to_string(g.cam_w));
  if (tile.cols() != g.cam_w)
    throw std::invalid_argument("search_tile: tile width " + std::to_string(tile.cols()) +
                                " != cam_w " + std::to_string(g.cam_w));
  if (tile.rows() > g.cam_h)
    throw std::invalid_argument("search_tile: tile has " + std::to_string(tile.rows()) +
                                " rows, cam_h is " + std::to_string(g.cam_h));

  std::vector<MatchlineReading> readings(tile.rows());
  for (int r = 0; r < tile.rows(); ++r) {
    const int m = hamming_matches_words(tile.row_words(r), query.words(), g.cam_w);
    MatchlineReading& rd = readings[r];
    rd.ideal_voltage = static_cast<double>(m) / g.cam_w;
    rd.voltage = noise.sample_voltage(rd.ideal_voltage);
    const DigitizeResult d = digitize(rd.voltage, g);
    rd.code = d.code;
    rd.score = d.score;
  }
  return readings;
}

double per_op_energy(double ops_per_program, const CamEnergyParams& p) {
  if (ops_per_program < 1) throw std::invalid_argument("per_op_energy: M must be >= 1");
  return p.e_program_pj / ops_per_program + p.e_search_pj + p.e_adc_pj;
}

namespace {

constexpr std::int64_t kStatsBlock = 4096;

// One trial: random stored row and query at cam_w bits, one noisy reading.
// The per-block RNG also supplies the random bits so a block is fully
// reproducible from its substream.
void stats_block(const CamGeometry& g, NoiseModel& noise, std::int64_t count, double& abs_sum,
                 double& max_dev) {
  std::mt19937_64 bits(noise.seed() * 0x9E3779B97F4A7C15ull + 1);
  const int words = (g.cam_w + 63) / 64;
  for (std::int64_t t = 0; t < count; ++t) {
    int m = 0;
    int remaining = g.cam_w;
    for (int w = 0; w < words; ++w) {
      const std::uint64_t x = bits();  // XNOR of two uniform rows is uniform
      const int take = std::min(remaining, 64);
      const std::uint64_t mask = take == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << take) - 1);
      m += take - std::popcount(x & mask);
      remaining -= take;
    }
    const double ideal = static_cast<double>(m) / g.cam_w;
    const double err = std::abs(noise.sample_voltage(ideal) - ideal);
    abs_sum += err;
    max_dev = std::max(max_dev, err);
  }
}

}  // namespace

PvtStats pvt_error_stats_serial(const CamGeometry& g, const NoiseModel& noise,
                                std::int64_t trials) {
  g.validate();
  if (trials < 1) throw std::invalid_argument("pvt_error_stats: trials must be >= 1");
  const std::int64_t blocks = (trials + kStatsBlock - 1) / kStatsBlock;
  double abs_sum = 0.0;
  double max_dev = 0.0;
  for (std::int64_t b = 0; b < blocks; ++b) {
    NoiseModel stream = noise.substream(static_cast<std::uint64_t>(b));
    const std::int64_t count = std::min<std::int64_t>(kStatsBlock, trials - b * kStatsBlock);
    stats_block(g, stream, count, abs_sum, max_dev);
  }
  return {abs_sum / static_cast<double>(trials), max_dev};
}

PvtStats pvt_error_stats(const CamGeometry& g, const NoiseModel& noise, std::int64_t trials) {
  g.validate();
  if (trials < 1) throw std::invalid_argument("pvt_error_stats: trials must be >= 1");
  const std::int64_t blocks = (trials + kStatsBlock - 1) / kStatsBlock;
  std::vector<double> sums(static_cast<size_t>(blocks), 0.0);
  std::vector<double> maxs(static_cast<size_t>(blocks), 0.0);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t b = 0; b < blocks; ++b) {
    NoiseModel stream = noise.substream(static_cast<std::uint64_t>(b));
    const std::int64_t count = std::min<std::int64_t>(kStatsBlock, trials - b * kStatsBlock);
    stats_block(g, stream, count, sums[static_cast<size_t>(b)], maxs[static_cast<size_t>(b)]);
  }
  double abs_sum = 0.0;
  double max_dev = 0.0;
  for (std::int64_t b = 0; b < blocks; ++b) {
    abs_sum += sums[static_cast<size_t>(b)];
    max_dev = std::max(max_dev, maxs[static_cast<size_t>(b)]);
  }
  return {abs_sum / static_cast<double>(trials), max_dev};
}

}  // namespace camformer
