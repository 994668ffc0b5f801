#pragma once

#include <stdexcept>
#include <string>

#include "camformer/bitcore.hpp"

namespace camformer {

// Missing or corrupt tensor files; the CLI maps this to exit code 2.
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// BACAM1: magic "BACAM1", u32le rows, u32le bits-per-row, then rows *
// ceil(bits/8) payload bytes, LSB-first within each byte. Padding bits in
// the last byte of a row must be zero.
void write_bacam1(const std::string& path, const BitMatrix& m);
BitMatrix read_bacam1(const std::string& path);

// BAINT1: magic "BAINT1", u32le rows, u32le cols, u8 bit width, u8 signed
// flag, then row-major entries at the smallest whole-byte width
// (two's complement when signed).
void write_baint1(const std::string& path, const IntMatrix& m, int bit_width, bool is_signed);

struct LoadedIntMatrix {
  IntMatrix matrix;
  int bit_width = 8;
  bool is_signed = true;
};
LoadedIntMatrix read_baint1(const std::string& path);

}  // namespace camformer
