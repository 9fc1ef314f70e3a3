#ifndef INTVIT_LINEAR_HPP
#define INTVIT_LINEAR_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "intvit/quant.hpp"

namespace intvit {

// Which successor module absorbs a plan's post-scale: a LayerNorm (invariant
// to the scalar part of the scale) or the next quantizer (scales folded into
// its comparator references).
enum class ScaleSink : std::uint8_t { layer_norm = 0, quantizer = 1 };

// 32-bit accumulator matrix produced by an integer MAC chain, with the
// dequantization deferred: pending per-output bias (real) and post-scale.
struct IntAccumTensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int32_t> values;
  std::vector<double> post_scale;  // size 1 (uniform) or cols
  std::vector<double> bias;        // empty = no pending bias

  IntAccumTensor() = default;
  IntAccumTensor(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0) {}

  std::int32_t& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  std::int32_t at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double scale_for(std::size_t c) const {
    return post_scale.size() == 1 ? post_scale[0] : post_scale[c];
  }
};

// Integerized linear layer: the heavy matmul runs on weight codes, and the
// channel-wise input scale is collapsed to its mean so dequantization becomes
// a single per-output post-scale applied after accumulation.
struct LinearPlan {
  std::vector<std::int8_t> weight_codes;  // out x in, row per output channel
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  int nbit = 3;
  std::vector<double> weight_scales;   // dw, per output channel
  double mean_input_scale = 1.0;       // collapsed dx
  std::vector<double> equiv_bias;      // b[o] / (mean_dx * dw[o])
  std::vector<double> post_scale;      // mean_dx * dw[o]
  ScaleSink sink = ScaleSink::layer_norm;

  std::int8_t weight(std::size_t o, std::size_t i) const {
    return weight_codes[o * in_channels + i];
  }
};

// wq_t: in x out weight codes with per-channel dw along columns.
LinearPlan build_plan(const QuantTensor& wq_t, std::span<const double> bias,
                      std::span<const double> input_scales, ScaleSink sink,
                      ScaleAggregate aggregate = ScaleAggregate::arithmetic);

// Pure integer MACs: values = Xq . W^T. Bias and post-scale are carried as
// metadata, not applied. Accumulation is checked against int32 range.
IntAccumTensor int_linear(const QuantTensor& xq, const LinearPlan& plan);

// Y[r][o] = (acc[r][o] + bias[o]) * post_scale[o].
FloatTensor apply_post_scale(const IntAccumTensor& acc);

struct EquivalenceGap {
  double vs_eq1 = 0.0;        // against the true channel-wise-scale oracle
  double vs_mean_scale = 0.0; // against the oracle with dx replaced by its mean
};

// Max elementwise gap between the integer path and the float oracle, both for
// the true per-channel input scales and for the mean-collapsed ones (the
// latter is the exact-rearrangement check and must be ~0).
EquivalenceGap equivalence_gap(const QuantTensor& xq, const QuantTensor& wq_t,
                               std::span<const double> dx, std::span<const double> dw,
                               std::span<const double> bias);

// Plan container round-trip (.qt records: weight codes, bias, post-scale,
// then a one-byte sink trailer).
void save_plan(const std::string& path, const LinearPlan& plan);
LinearPlan load_plan(const std::string& path);

}  // namespace intvit

#endif
