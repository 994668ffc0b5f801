#include "camformer/bitcore.hpp"

#include <algorithm>
#include <bit>
#include <random>
#include <stdexcept>
#include <string>

namespace camformer {

namespace {

int words_for_bits(int bits) { return (bits + 63) / 64; }

}  // namespace

BitVector::BitVector(int length) : length_(length) {
  if (length < 1) throw std::invalid_argument("BitVector length must be >= 1");
  words_.assign(words_for_bits(length), 0);
}

bool BitVector::get(int i) const {
  if (i < 0 || i >= length_) throw std::out_of_range("BitVector index " + std::to_string(i));
  return (words_[i >> 6] >> (i & 63)) & 1u;
}

void BitVector::set(int i, bool v) {
  if (i < 0 || i >= length_) throw std::out_of_range("BitVector index " + std::to_string(i));
  const std::uint64_t mask = std::uint64_t{1} << (i & 63);
  if (v)
    words_[i >> 6] |= mask;
  else
    words_[i >> 6] &= ~mask;
}

std::vector<int> BitVector::unpack_bipolar() const {
  std::vector<int> out(length_);
  for (int i = 0; i < length_; ++i) out[i] = get(i) ? 1 : -1;
  return out;
}

BitVector pack_bipolar(std::span<const int> values) {
  if (values.empty()) throw std::invalid_argument("pack_bipolar: empty input");
  BitVector v(static_cast<int>(values.size()));
  for (size_t i = 0; i < values.size(); ++i) {
    if (values[i] != 1 && values[i] != -1)
      throw std::invalid_argument("pack_bipolar: element at " + std::to_string(i) +
                                  " is " + std::to_string(values[i]) + ", expected -1 or +1");
    if (values[i] == 1) v.set(static_cast<int>(i), true);
  }
  return v;
}

int hamming_matches_words(std::span<const std::uint64_t> a,
                          std::span<const std::uint64_t> b, int bits) {
  int mismatches = 0;
  for (size_t w = 0; w < a.size(); ++w) mismatches += std::popcount(a[w] ^ b[w]);
  return bits - mismatches;
}

int hamming_matches(const BitVector& a, const BitVector& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("hamming_matches: length mismatch " +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  return hamming_matches_words(a.words(), b.words(), a.size());
}

int hamming_distance(const BitVector& a, const BitVector& b) {
  return a.size() - hamming_matches(a, b);
}

int bipolar_dot(const BitVector& a, const BitVector& b) {
  return 2 * hamming_matches(a, b) - a.size();
}

BitMatrix::BitMatrix(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("BitMatrix dims must be >= 1");
  words_per_row_ = words_for_bits(cols);
  words_.assign(static_cast<size_t>(rows) * words_per_row_, 0);
}

bool BitMatrix::get(int r, int c) const {
  if (r < 0 || r >= rows_ || c < 0 || c >= cols_)
    throw std::out_of_range("BitMatrix index (" + std::to_string(r) + "," + std::to_string(c) + ")");
  return (words_[static_cast<size_t>(r) * words_per_row_ + (c >> 6)] >> (c & 63)) & 1u;
}

void BitMatrix::set(int r, int c, bool v) {
  if (r < 0 || r >= rows_ || c < 0 || c >= cols_)
    throw std::out_of_range("BitMatrix index (" + std::to_string(r) + "," + std::to_string(c) + ")");
  const std::uint64_t mask = std::uint64_t{1} << (c & 63);
  auto& word = words_[static_cast<size_t>(r) * words_per_row_ + (c >> 6)];
  if (v)
    word |= mask;
  else
    word &= ~mask;
}

std::span<const std::uint64_t> BitMatrix::row_words(int r) const {
  if (r < 0 || r >= rows_) throw std::out_of_range("BitMatrix row " + std::to_string(r));
  return {words_.data() + static_cast<size_t>(r) * words_per_row_,
          static_cast<size_t>(words_per_row_)};
}

BitVector BitMatrix::row(int r) const {
  BitVector v(cols_);
  auto src = row_words(r);
  for (int c = 0; c < cols_; ++c)
    if ((src[c >> 6] >> (c & 63)) & 1u) v.set(c, true);
  return v;
}

void BitMatrix::set_row(int r, const BitVector& v) {
  if (v.size() != cols_) throw std::invalid_argument("set_row: width mismatch");
  for (int c = 0; c < cols_; ++c) set(r, c, v.get(c));
}

BitMatrix BitMatrix::top_rows(int count) const {
  if (count < 1 || count > rows_) throw std::out_of_range("top_rows: bad row count");
  BitMatrix out(count, cols_);
  std::copy_n(words_.begin(), static_cast<size_t>(count) * words_per_row_, out.words_.begin());
  return out;
}

std::vector<std::int32_t> SlicedIntMatrix::slice_weights() const {
  std::vector<std::int32_t> w(bit_width);
  for (int s = 0; s < bit_width; ++s) w[s] = std::int32_t{1} << s;
  if (is_signed) w[bit_width - 1] = -(std::int32_t{1} << (bit_width - 1));
  return w;
}

IntMatrix SlicedIntMatrix::reconstruct() const {
  IntMatrix m(rows(), cols());
  const auto weights = slice_weights();
  for (int s = 0; s < bit_width; ++s)
    for (int r = 0; r < m.rows; ++r)
      for (int c = 0; c < m.cols; ++c)
        if (slices[s].get(r, c)) m.at(r, c) += weights[s];
  return m;
}

SlicedIntMatrix int_to_bit_slices(const IntMatrix& m, int bit_width, bool is_signed) {
  if (bit_width != 2 && bit_width != 4 && bit_width != 8)
    throw std::invalid_argument("int_to_bit_slices: bit width must be 2, 4 or 8");
  const std::int32_t lo = is_signed ? -(std::int32_t{1} << (bit_width - 1)) : 0;
  const std::int32_t hi =
      is_signed ? (std::int32_t{1} << (bit_width - 1)) - 1 : (std::int32_t{1} << bit_width) - 1;

  SlicedIntMatrix out;
  out.bit_width = bit_width;
  out.is_signed = is_signed;
  out.slices.assign(bit_width, BitMatrix(m.rows, m.cols));
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) {
      const std::int32_t v = m.at(r, c);
      if (v < lo || v > hi)
        throw std::out_of_range("int_to_bit_slices: entry (" + std::to_string(r) + "," +
                                std::to_string(c) + ")=" + std::to_string(v) +
                                " not representable in " + std::to_string(bit_width) +
                                (is_signed ? "-bit signed" : "-bit unsigned"));
      const std::uint32_t pattern = static_cast<std::uint32_t>(v) & ((1u << bit_width) - 1);
      for (int s = 0; s < bit_width; ++s)
        if ((pattern >> s) & 1u) out.slices[s].set(r, c, true);
    }
  }
  return out;
}

BitVector random_bit_vector(int length, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BitVector v(length);
  for (int i = 0; i < length; ++i)
    if (rng() & 1u) v.set(i, true);
  return v;
}

BitMatrix random_bit_matrix(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BitMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (rng() & 1u) m.set(r, c, true);
  return m;
}

IntMatrix random_int_matrix(int rows, int cols, int bit_width, bool is_signed,
                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::int32_t lo = is_signed ? -(std::int32_t{1} << (bit_width - 1)) : 0;
  const std::int32_t hi =
      is_signed ? (std::int32_t{1} << (bit_width - 1)) - 1 : (std::int32_t{1} << bit_width) - 1;
  std::uniform_int_distribution<std::int32_t> dist(lo, hi);
  IntMatrix m(rows, cols);
  for (auto& v : m.data) v = dist(rng);
  return m;
}

}  // namespace camformer
