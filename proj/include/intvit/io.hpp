#ifndef INTVIT_IO_HPP
#define INTVIT_IO_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "intvit/quant.hpp"

namespace intvit {

// One record of the ".qt" binary tensor container (little-endian):
//
//   offset  size          field
//   0       4             magic "QTEN"
//   4       1             version, currently 1
//   5       1             kind: 0 = quantized codes, 1 = float64
//   6       1             nbit (0 for float records)
//   7       1             scale mode: 0 = scalar, 1 = per-channel over last dim
//   8       1             ndim
//   9       4 * ndim      dims, u32 each
//   ...     8 * k         scales, f64 (k = 1 or last dim; absent for floats)
//   ...                   payload, row-major: int8 codes or f64 values
//
// Files may hold several records back to back; loaders consume one record at
// a time and report malformed input with the byte offset of the defect.
struct QtRecord {
  std::uint8_t kind = 0;  // 0 codes, 1 float64
  std::uint8_t nbit = 0;
  std::uint8_t scale_mode = 0;
  std::vector<std::uint32_t> dims;
  std::vector<double> scales;
  std::vector<std::int8_t> codes;    // kind 0
  std::vector<double> floats;        // kind 1

  std::size_t element_count() const;

  static QtRecord from_quant(const QuantTensor& t);
  static QtRecord from_float(const FloatTensor& t);
  static QtRecord from_vector(std::span<const double> v);
  QuantTensor to_quant() const;      // requires ndim == 2
  FloatTensor to_float() const;      // requires ndim == 2
  std::vector<double> to_vector() const;  // requires ndim == 1, kind 1
};

void write_record(std::ostream& os, const QtRecord& rec);
// Reads one record starting at the stream position; `base_offset` is the
// absolute file offset of that position, used in diagnostics.
QtRecord read_record(std::istream& is, std::uint64_t base_offset = 0);

void save_qt(const std::string& path, const QtRecord& rec);
QtRecord load_qt(const std::string& path);

void save_quant(const std::string& path, const QuantTensor& t);
QuantTensor load_quant(const std::string& path);

// FNV-1a 64 over a byte span; used for manifest checksums.
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t file_checksum(const std::string& path);

}  // namespace intvit

#endif
