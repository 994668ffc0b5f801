#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace camformer {

// Packed binary vector. Bits are LSB-first within each 64-bit word; bit b at
// position i encodes the bipolar value 2b-1 in {-1,+1}. Padding bits beyond
// size() are kept zero, so word-wise popcounts need no masking at use sites.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(int length);

  int size() const { return length_; }
  bool get(int i) const;
  void set(int i, bool v);
  std::span<const std::uint64_t> words() const { return words_; }
  int word_count() const { return static_cast<int>(words_.size()); }

  std::vector<int> unpack_bipolar() const;

  bool operator==(const BitVector&) const = default;

 private:
  int length_ = 0;
  std::vector<std::uint64_t> words_;
};

// Packs a +-1 sequence; bit i is set iff values[i] == +1.
BitVector pack_bipolar(std::span<const int> values);

// Number of positions where the two vectors agree (XNOR + popcount).
int hamming_matches(const BitVector& a, const BitVector& b);
int hamming_distance(const BitVector& a, const BitVector& b);

// Signed dot product of the bipolar interpretations: 2*matches - d.
int bipolar_dot(const BitVector& a, const BitVector& b);

// Word-span kernels used by the tile search path; `bits` is the logical
// length shared by both spans (padding zero).
int hamming_matches_words(std::span<const std::uint64_t> a,
                          std::span<const std::uint64_t> b, int bits);

// Row-major packed binary matrix; every row has the same bit length.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(int rows, int cols);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int words_per_row() const { return words_per_row_; }

  bool get(int r, int c) const;
  void set(int r, int c, bool v);
  std::span<const std::uint64_t> row_words(int r) const;
  BitVector row(int r) const;
  void set_row(int r, const BitVector& v);
  BitMatrix top_rows(int count) const;

  bool operator==(const BitMatrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  int words_per_row_ = 0;
  std::vector<std::uint64_t> words_;
};

// Dense integer matrix (row-major). Wide element type so any int2/4/8
// payload and accumulation fits without overflow.
struct IntMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::int32_t> data;

  IntMatrix() = default;
  IntMatrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0) {}
  std::int32_t at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  std::int32_t& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  bool operator==(const IntMatrix&) const = default;
};

// Bit-plane decomposition of an integer matrix, slices ordered LSB->MSB.
// When signed, entries are two's complement and the MSB slice carries
// weight -2^(b-1); recombination is exact for every representable matrix.
struct SlicedIntMatrix {
  int bit_width = 8;
  bool is_signed = true;
  std::vector<BitMatrix> slices;

  int rows() const { return slices.empty() ? 0 : slices[0].rows(); }
  int cols() const { return slices.empty() ? 0 : slices[0].cols(); }
  std::vector<std::int32_t> slice_weights() const;
  IntMatrix reconstruct() const;
};

SlicedIntMatrix int_to_bit_slices(const IntMatrix& m, int bit_width, bool is_signed);

// Seeded helpers for synthetic tensors; mt19937_64 keeps the streams
// identical across platforms.
BitVector random_bit_vector(int length, std::uint64_t seed);
BitMatrix random_bit_matrix(int rows, int cols, std::uint64_t seed);
IntMatrix random_int_matrix(int rows, int cols, int bit_width, bool is_signed,
                            std::uint64_t seed);

}  // namespace camformer
