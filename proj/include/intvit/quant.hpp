#ifndef INTVIT_QUANT_HPP
#define INTVIT_QUANT_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "intvit/error.hpp"

namespace intvit {

// How a per-channel step-size vector is collapsed to a single step.
enum class ScaleAggregate { arithmetic, geometric };

// Uniform signed quantizer grid: nbit levels in [qmin, qmax] with step size
// scale (one step for the whole tensor, or one per channel along the last
// dimension). Comparator references for a step d are s_k = (k - 1/2) * d for
// k = qmin+1 .. qmax; a value's code is qmin plus the number of references it
// strictly exceeds.
struct QuantParams {
  int nbit = 3;
  std::vector<double> scales = {1.0};  // size 1 when scalar, else one per channel
  bool per_channel = false;

  int qmin() const { return -(1 << (nbit - 1)); }
  int qmax() const { return (1 << (nbit - 1)) - 1; }
  int levels() const { return 1 << nbit; }
  bool is_scalar() const { return !per_channel; }
  double scalar_scale() const;
  double scale_for(std::size_t channel) const {
    return per_channel ? scales[channel] : scales[0];
  }

  static QuantParams scalar(int nbit, double scale);
  static QuantParams channel_wise(int nbit, std::vector<double> scales);

  void validate(std::size_t channels_expected = 0) const;
};

// Row-major real matrix (double precision throughout).
struct FloatTensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  FloatTensor() = default;
  FloatTensor(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
};

// Integer code matrix plus the quantizer grid it was produced with. Codes are
// stored as int8 regardless of nbit; every code lies in [qmin, qmax].
struct QuantTensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int8_t> codes;
  QuantParams params;

  QuantTensor() = default;
  QuantTensor(std::size_t r, std::size_t c, QuantParams p)
      : rows(r), cols(c), codes(r * c, 0), params(std::move(p)) {}

  std::int8_t& at(std::size_t r, std::size_t c) { return codes[r * cols + c]; }
  std::int8_t at(std::size_t r, std::size_t c) const { return codes[r * cols + c]; }

  void validate() const;
};

// Comparator references s_k = (k - 1/2) * scale, k = qmin+1 .. qmax, strictly
// increasing, 2^nbit - 1 of them. Per-channel params are rejected; callers
// quantizing per-channel tensors build one reference list per channel.
std::vector<double> boundary_refs(const QuantParams& params);
std::vector<double> boundary_refs(int nbit, double scale);

// Number of references strictly below x, offset by qmin. Total function;
// saturates at qmax because only 2^nbit - 1 references exist. A value exactly
// equal to a reference maps to the lower code (strict ">" is normative).
int comparator_quantize(double x, std::span<const double> refs, int qmin);

QuantTensor quantize(const FloatTensor& x, const QuantParams& params);
FloatTensor dequantize(const QuantTensor& q);

// Collapsed step size for a per-channel vector (arithmetic mean by default).
double mean_scale(std::span<const double> scales,
                  ScaleAggregate aggregate = ScaleAggregate::arithmetic);

}  // namespace intvit

#endif
