#include "intvit/linear.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>

#include "intvit/io.hpp"
#include "intvit/reference.hpp"

namespace intvit {

LinearPlan build_plan(const QuantTensor& wq_t, std::span<const double> bias,
                      std::span<const double> input_scales, ScaleSink sink,
                      ScaleAggregate aggregate) {
  wq_t.validate();
  const std::size_t in = wq_t.rows, out = wq_t.cols;
  if (bias.size() != out) raise(errc::dim_mismatch, "bias length != output channels");
  if (!wq_t.params.per_channel || wq_t.params.scales.size() != out)
    raise(errc::invalid_argument, "weights need one scale per output channel");
  if (input_scales.empty()) raise(errc::invalid_argument, "empty input scale vector");

  LinearPlan plan;
  plan.out_channels = out;
  plan.in_channels = in;
  plan.nbit = wq_t.params.nbit;
  plan.weight_scales = wq_t.params.scales;
  plan.mean_input_scale = mean_scale(input_scales, aggregate);
  plan.sink = sink;

  // Transpose into row-per-output-channel layout.
  plan.weight_codes.resize(out * in);
  for (std::size_t i = 0; i < in; ++i)
    for (std::size_t o = 0; o < out; ++o) plan.weight_codes[o * in + i] = wq_t.at(i, o);

  plan.equiv_bias.resize(out);
  plan.post_scale.resize(out);
  for (std::size_t o = 0; o < out; ++o) {
    const double dw = plan.weight_scales[o];
    if (!(dw > 0.0)) raise(errc::invalid_argument, "weight scale must be > 0");
    plan.post_scale[o] = plan.mean_input_scale * dw;
    plan.equiv_bias[o] = bias[o] / plan.post_scale[o];
  }
  return plan;
}

IntAccumTensor int_linear(const QuantTensor& xq, const LinearPlan& plan) {
  if (xq.cols != plan.in_channels)
    raise(errc::dim_mismatch, "input width " + std::to_string(xq.cols) +
                                  " != plan input channels " + std::to_string(plan.in_channels));
  IntAccumTensor acc(xq.rows, plan.out_channels);
  for (std::size_t r = 0; r < xq.rows; ++r) {
    for (std::size_t o = 0; o < plan.out_channels; ++o) {
      std::int64_t sum = 0;
      const std::int8_t* wrow = &plan.weight_codes[o * plan.in_channels];
      for (std::size_t i = 0; i < plan.in_channels; ++i) {
        sum += static_cast<std::int64_t>(xq.at(r, i)) * wrow[i];
      }
      if (sum > std::numeric_limits<std::int32_t>::max() ||
          sum < std::numeric_limits<std::int32_t>::min())
        raise(errc::overflow, "accumulator overflow at (" + std::to_string(r) + ", " +
                                  std::to_string(o) + "); reduce depth or bit width");
      acc.at(r, o) = static_cast<std::int32_t>(sum);
    }
  }
  acc.post_scale = plan.post_scale;
  acc.bias = plan.equiv_bias;
  return acc;
}

FloatTensor apply_post_scale(const IntAccumTensor& acc) {
  FloatTensor y(acc.rows, acc.cols);
  for (std::size_t r = 0; r < acc.rows; ++r) {
    for (std::size_t c = 0; c < acc.cols; ++c) {
      const double b = acc.bias.empty() ? 0.0 : acc.bias[c];
      y.at(r, c) = (static_cast<double>(acc.at(r, c)) + b) * acc.scale_for(c);
    }
  }
  return y;
}

EquivalenceGap equivalence_gap(const QuantTensor& xq, const QuantTensor& wq_t,
                               std::span<const double> dx, std::span<const double> dw,
                               std::span<const double> bias) {
  const LinearPlan plan = build_plan(wq_t, bias, dx, ScaleSink::quantizer);
  const FloatTensor y_int = apply_post_scale(int_linear(xq, plan));

  const FloatTensor y_eq1 = reference::ref_linear(xq, wq_t, dx, dw, bias);
  const std::vector<double> dx_mean(dx.size(), plan.mean_input_scale);
  const FloatTensor y_mean = reference::ref_linear(xq, wq_t, dx_mean, dw, bias);

  EquivalenceGap gap;
  for (std::size_t i = 0; i < y_int.values.size(); ++i) {
    gap.vs_eq1 = std::max(gap.vs_eq1, std::abs(y_int.values[i] - y_eq1.values[i]));
    gap.vs_mean_scale = std::max(gap.vs_mean_scale, std::abs(y_int.values[i] - y_mean.values[i]));
  }
  return gap;
}

void save_plan(const std::string& path, const LinearPlan& plan) {
  std::ofstream os(path, std::ios::binary);
  if (!os) raise(errc::io, "cannot open " + path + " for writing");

  // Weight codes as an in x out record so per-channel scales sit on the last
  // dimension, then bias and post-scale vectors, then the sink byte.
  QuantTensor wq_t(plan.in_channels, plan.out_channels,
                   QuantParams::channel_wise(plan.nbit, plan.weight_scales));
  for (std::size_t o = 0; o < plan.out_channels; ++o)
    for (std::size_t i = 0; i < plan.in_channels; ++i) wq_t.at(i, o) = plan.weight(o, i);
  write_record(os, QtRecord::from_quant(wq_t));
  write_record(os, QtRecord::from_vector(plan.equiv_bias));
  write_record(os, QtRecord::from_vector(plan.post_scale));
  const char sink = static_cast<char>(plan.sink);
  os.write(&sink, 1);
  if (!os) raise(errc::io, "write failed");
}

LinearPlan load_plan(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(errc::io, "cannot open " + path);

  const QtRecord wrec = read_record(is, 0);
  std::uint64_t off = static_cast<std::uint64_t>(is.tellg());
  const QtRecord brec = read_record(is, off);
  off = static_cast<std::uint64_t>(is.tellg());
  const QtRecord prec = read_record(is, off);
  off = static_cast<std::uint64_t>(is.tellg());
  char sink = 0;
  is.read(&sink, 1);
  if (is.gcount() != 1) raise(errc::format, "missing sink trailer at byte offset " +
                                                std::to_string(off));
  if (sink != 0 && sink != 1)
    raise(errc::format, "bad sink trailer at byte offset " + std::to_string(off));

  const QuantTensor wq_t = wrec.to_quant();
  LinearPlan plan;
  plan.in_channels = wq_t.rows;
  plan.out_channels = wq_t.cols;
  plan.nbit = wq_t.params.nbit;
  plan.weight_scales = wq_t.params.scales;
  plan.weight_codes.resize(plan.out_channels * plan.in_channels);
  for (std::size_t i = 0; i < plan.in_channels; ++i)
    for (std::size_t o = 0; o < plan.out_channels; ++o)
      plan.weight_codes[o * plan.in_channels + i] = wq_t.at(i, o);
  plan.equiv_bias = brec.to_vector();
  plan.post_scale = prec.to_vector();
  if (plan.equiv_bias.size() != plan.out_channels || plan.post_scale.size() != plan.out_channels)
    raise(errc::format, "plan vector length mismatch");
  for (double p : plan.post_scale)
    if (!(p > 0.0)) raise(errc::format, "post-scale entries must be > 0");
  plan.mean_input_scale = plan.post_scale[0] / plan.weight_scales[0];
  plan.sink = static_cast<ScaleSink>(sink);
  return plan;
}

}  // namespace intvit
