#include "camformer/tensor_io.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace camformer {

namespace {

constexpr char kBacamMagic[6] = {'B', 'A', 'C', 'A', 'M', '1'};
constexpr char kBaintMagic[6] = {'B', 'A', 'I', 'N', 'T', '1'};

void put_u32le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

std::uint32_t get_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open tensor file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot write tensor file: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw io_error("short write to tensor file: " + path);
}

}  // namespace

void write_bacam1(const std::string& path, const BitMatrix& m) {
  const int row_bytes = (m.cols() + 7) / 8;
  std::string out;
  out.reserve(14 + static_cast<size_t>(m.rows()) * row_bytes);
  out.append(kBacamMagic, 6);
  put_u32le(out, static_cast<std::uint32_t>(m.rows()));
  put_u32le(out, static_cast<std::uint32_t>(m.cols()));
  for (int r = 0; r < m.rows(); ++r) {
    auto words = m.row_words(r);
    for (int b = 0; b < row_bytes; ++b)
      out.push_back(static_cast<char>((words[b / 8] >> (8 * (b % 8))) & 0xFF));
  }
  write_file(path, out);
}

BitMatrix read_bacam1(const std::string& path) {
  const auto bytes = read_file(path);
  if (bytes.size() < 14 || std::memcmp(bytes.data(), kBacamMagic, 6) != 0)
    throw io_error("not a BACAM1 file: " + path);
  const std::uint32_t rows = get_u32le(bytes.data() + 6);
  const std::uint32_t cols = get_u32le(bytes.data() + 10);
  if (rows < 1 || cols < 1) throw io_error("BACAM1 with empty dimensions: " + path);
  const size_t row_bytes = (cols + 7) / 8;
  if (bytes.size() != 14 + static_cast<size_t>(rows) * row_bytes)
    throw io_error("BACAM1 payload size mismatch: " + path);

  BitMatrix m(static_cast<int>(rows), static_cast<int>(cols));
  const unsigned char* p = bytes.data() + 14;
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (size_t b = 0; b < row_bytes; ++b) {
      const unsigned char byte = p[r * row_bytes + b];
      for (int k = 0; k < 8; ++k) {
        const size_t bit = b * 8 + k;
        const bool set = (byte >> k) & 1u;
        if (bit >= cols) {
          if (set) throw io_error("BACAM1 nonzero padding bits: " + path);
        } else if (set) {
          m.set(static_cast<int>(r), static_cast<int>(bit), true);
        }
      }
    }
  }
  return m;
}

void write_baint1(const std::string& path, const IntMatrix& m, int bit_width, bool is_signed) {
  // Range check up front so a file never holds unrepresentable entries.
  int_to_bit_slices(m, bit_width, is_signed);
  const int entry_bytes = (bit_width + 7) / 8;
  std::string out;
  out.reserve(16 + static_cast<size_t>(m.rows) * m.cols * entry_bytes);
  out.append(kBaintMagic, 6);
  put_u32le(out, static_cast<std::uint32_t>(m.rows));
  put_u32le(out, static_cast<std::uint32_t>(m.cols));
  out.push_back(static_cast<char>(bit_width));
  out.push_back(static_cast<char>(is_signed ? 1 : 0));
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c)
      for (int b = 0; b < entry_bytes; ++b)
        out.push_back(static_cast<char>((static_cast<std::uint32_t>(m.at(r, c)) >> (8 * b)) & 0xFF));
  write_file(path, out);
}

LoadedIntMatrix read_baint1(const std::string& path) {
  const auto bytes = read_file(path);
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kBaintMagic, 6) != 0)
    throw io_error("not a BAINT1 file: " + path);
  const std::uint32_t rows = get_u32le(bytes.data() + 6);
  const std::uint32_t cols = get_u32le(bytes.data() + 10);
  const int bit_width = bytes[14];
  const bool is_signed = bytes[15] != 0;
  if (rows < 1 || cols < 1) throw io_error("BAINT1 with empty dimensions: " + path);
  if (bit_width != 2 && bit_width != 4 && bit_width != 8)
    throw io_error("BAINT1 unsupported bit width " + std::to_string(bit_width) + ": " + path);
  const size_t entry_bytes = (bit_width + 7) / 8;
  if (bytes.size() != 16 + static_cast<size_t>(rows) * cols * entry_bytes)
    throw io_error("BAINT1 payload size mismatch: " + path);

  const std::int32_t lo = is_signed ? -(std::int32_t{1} << (bit_width - 1)) : 0;
  const std::int32_t hi =
      is_signed ? (std::int32_t{1} << (bit_width - 1)) - 1 : (std::int32_t{1} << bit_width) - 1;

  LoadedIntMatrix out;
  out.bit_width = bit_width;
  out.is_signed = is_signed;
  out.matrix = IntMatrix(static_cast<int>(rows), static_cast<int>(cols));
  const unsigned char* p = bytes.data() + 16;
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) {
      std::uint32_t raw = 0;
      for (size_t b = 0; b < entry_bytes; ++b)
        raw |= static_cast<std::uint32_t>(p[(static_cast<size_t>(r) * cols + c) * entry_bytes + b])
               << (8 * b);
      std::int32_t v;
      if (is_signed) {
        // Sign extend from the stored byte width.
        const int stored_bits = static_cast<int>(entry_bytes) * 8;
        v = static_cast<std::int32_t>(static_cast<std::int8_t>(raw & 0xFF));
        if (stored_bits > 8) v = static_cast<std::int32_t>(raw);  // unreachable for b<=8
      } else {
        v = static_cast<std::int32_t>(raw);
      }
      if (v < lo || v > hi)
        throw io_error("BAINT1 entry out of range at (" + std::to_string(r) + "," +
                       std::to_string(c) + "): " + path);
      out.matrix.at(static_cast<int>(r), static_cast<int>(c)) = v;
    }
  }
  return out;
}

}  // namespace camformer
