#include "intvit/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace intvit {

namespace {

constexpr char kMagic[4] = {'Q', 'T', 'E', 'N'};
constexpr std::uint8_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "qt serialization assumes a little-endian host");

[[noreturn]] void bad_format(std::uint64_t offset, const std::string& what) {
  raise(errc::format, what + " at byte offset " + std::to_string(offset));
}

void put_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!os) raise(errc::io, "write failed");
}

void get_bytes(std::istream& is, void* p, std::size_t n, std::uint64_t offset,
               const std::string& field) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    bad_format(offset, "truncated record, expected " + std::to_string(n) + " byte(s) of " + field);
}

}  // namespace

std::size_t QtRecord::element_count() const {
  std::size_t n = 1;
  for (std::uint32_t d : dims) n *= d;
  return dims.empty() ? 0 : n;
}

QtRecord QtRecord::from_quant(const QuantTensor& t) {
  t.validate();
  QtRecord rec;
  rec.kind = 0;
  rec.nbit = static_cast<std::uint8_t>(t.params.nbit);
  rec.scale_mode = t.params.per_channel ? 1 : 0;
  rec.dims = {static_cast<std::uint32_t>(t.rows), static_cast<std::uint32_t>(t.cols)};
  rec.scales = t.params.scales;
  rec.codes = t.codes;
  return rec;
}

QtRecord QtRecord::from_float(const FloatTensor& t) {
  QtRecord rec;
  rec.kind = 1;
  rec.dims = {static_cast<std::uint32_t>(t.rows), static_cast<std::uint32_t>(t.cols)};
  rec.floats = t.values;
  return rec;
}

QtRecord QtRecord::from_vector(std::span<const double> v) {
  QtRecord rec;
  rec.kind = 1;
  rec.dims = {static_cast<std::uint32_t>(v.size())};
  rec.floats.assign(v.begin(), v.end());
  return rec;
}

QuantTensor QtRecord::to_quant() const {
  if (kind != 0) raise(errc::format, "record is not a quantized-code tensor");
  if (dims.size() != 2) raise(errc::format, "expected a 2-D code tensor");
  QuantParams p;
  p.nbit = nbit;
  p.scales = scales;
  p.per_channel = scale_mode == 1;
  QuantTensor t;
  t.rows = dims[0];
  t.cols = dims[1];
  t.codes = codes;
  t.params = std::move(p);
  t.validate();
  return t;
}

FloatTensor QtRecord::to_float() const {
  if (kind != 1) raise(errc::format, "record is not a float tensor");
  if (dims.size() != 2) raise(errc::format, "expected a 2-D float tensor");
  FloatTensor t(dims[0], dims[1]);
  t.values = floats;
  return t;
}

std::vector<double> QtRecord::to_vector() const {
  if (kind != 1 || dims.size() != 1) raise(errc::format, "expected a 1-D float record");
  return floats;
}

void write_record(std::ostream& os, const QtRecord& rec) {
  if (rec.dims.empty() || rec.dims.size() > 255) raise(errc::invalid_argument, "bad ndim");
  put_bytes(os, kMagic, 4);
  put_bytes(os, &kVersion, 1);
  put_bytes(os, &rec.kind, 1);
  put_bytes(os, &rec.nbit, 1);
  put_bytes(os, &rec.scale_mode, 1);
  const std::uint8_t ndim = static_cast<std::uint8_t>(rec.dims.size());
  put_bytes(os, &ndim, 1);
  for (std::uint32_t d : rec.dims) put_bytes(os, &d, 4);
  if (rec.kind == 0) {
    const std::size_t expect_scales = rec.scale_mode == 1 ? rec.dims.back() : 1;
    if (rec.scales.size() != expect_scales) raise(errc::invalid_argument, "scale count mismatch");
    for (double s : rec.scales) put_bytes(os, &s, 8);
    if (rec.codes.size() != rec.element_count())
      raise(errc::invalid_argument, "payload size mismatch");
    if (!rec.codes.empty()) put_bytes(os, rec.codes.data(), rec.codes.size());
  } else {
    if (rec.floats.size() != rec.element_count())
      raise(errc::invalid_argument, "payload size mismatch");
    if (!rec.floats.empty()) put_bytes(os, rec.floats.data(), rec.floats.size() * 8);
  }
}

QtRecord read_record(std::istream& is, std::uint64_t base) {
  char magic[4];
  get_bytes(is, magic, 4, base + 0, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) bad_format(base + 0, "bad magic, expected \"QTEN\"");
  std::uint8_t version = 0;
  get_bytes(is, &version, 1, base + 4, "version");
  if (version != kVersion)
    bad_format(base + 4, "unsupported version " + std::to_string(int(version)));

  QtRecord rec;
  get_bytes(is, &rec.kind, 1, base + 5, "kind");
  if (rec.kind > 1) bad_format(base + 5, "unknown kind " + std::to_string(int(rec.kind)));
  get_bytes(is, &rec.nbit, 1, base + 6, "nbit");
  get_bytes(is, &rec.scale_mode, 1, base + 7, "scale mode");
  if (rec.scale_mode > 1)
    bad_format(base + 7, "unknown scale mode " + std::to_string(int(rec.scale_mode)));
  std::uint8_t ndim = 0;
  get_bytes(is, &ndim, 1, base + 8, "ndim");
  if (ndim == 0) bad_format(base + 8, "ndim must be >= 1");

  std::uint64_t off = base + 9;
  rec.dims.resize(ndim);
  for (std::uint8_t i = 0; i < ndim; ++i, off += 4) {
    get_bytes(is, &rec.dims[i], 4, off, "dims");
    if (rec.dims[i] == 0) bad_format(off, "zero-sized dimension");
  }

  const std::size_t count = rec.element_count();
  if (rec.kind == 0) {
    if (rec.nbit < 2 || rec.nbit > 8)
      bad_format(base + 6, "nbit " + std::to_string(int(rec.nbit)) + " outside [2, 8]");
    const std::size_t nscales = rec.scale_mode == 1 ? rec.dims.back() : 1;
    rec.scales.resize(nscales);
    for (std::size_t i = 0; i < nscales; ++i, off += 8) {
      get_bytes(is, &rec.scales[i], 8, off, "scales");
      if (!(rec.scales[i] > 0.0) || !std::isfinite(rec.scales[i]))
        bad_format(off, "scale entry must be finite and > 0");
    }
    rec.codes.resize(count);
    get_bytes(is, rec.codes.data(), count, off, "code payload");
    const int lo = -(1 << (rec.nbit - 1));
    const int hi = (1 << (rec.nbit - 1)) - 1;
    for (std::size_t i = 0; i < count; ++i) {
      if (rec.codes[i] < lo || rec.codes[i] > hi)
        bad_format(off + i, "code " + std::to_string(int(rec.codes[i])) + " outside [" +
                                std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
  } else {
    if (rec.nbit != 0) bad_format(base + 6, "float record must carry nbit = 0");
    rec.floats.resize(count);
    get_bytes(is, rec.floats.data(), count * 8, off, "float payload");
    for (std::size_t i = 0; i < count; ++i) {
      if (!std::isfinite(rec.floats[i])) bad_format(off + i * 8, "non-finite float entry");
    }
  }
  return rec;
}

void save_qt(const std::string& path, const QtRecord& rec) {
  std::ofstream os(path, std::ios::binary);
  if (!os) raise(errc::io, "cannot open " + path + " for writing");
  write_record(os, rec);
}

QtRecord load_qt(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(errc::io, "cannot open " + path);
  return read_record(is, 0);
}

void save_quant(const std::string& path, const QuantTensor& t) {
  save_qt(path, QtRecord::from_quant(t));
}

QuantTensor load_quant(const std::string& path) { return load_qt(path).to_quant(); }

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t file_checksum(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(errc::io, "cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  const std::string bytes = ss.str();
  return fnv1a64(bytes.data(), bytes.size());
}

}  // namespace intvit
