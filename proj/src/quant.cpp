#include "intvit/quant.hpp"

#include <algorithm>
#include <cmath>

namespace intvit {

const char* errc_name(errc c) {
  switch (c) {
    case errc::ok: return "ok";
    case errc::invalid_argument: return "invalid_argument";
    case errc::dim_mismatch: return "dim_mismatch";
    case errc::overflow: return "overflow";
    case errc::underflow: return "underflow";
    case errc::io: return "io";
    case errc::format: return "format";
    case errc::null_pointer: return "null_pointer";
  }
  return "unknown";
}

double QuantParams::scalar_scale() const {
  if (per_channel) raise(errc::invalid_argument, "scalar scale required");
  return scales[0];
}

QuantParams QuantParams::scalar(int nbit, double scale) {
  QuantParams p;
  p.nbit = nbit;
  p.scales = {scale};
  p.per_channel = false;
  p.validate();
  return p;
}

QuantParams QuantParams::channel_wise(int nbit, std::vector<double> scales) {
  QuantParams p;
  p.nbit = nbit;
  p.scales = std::move(scales);
  p.per_channel = true;
  p.validate();
  return p;
}

void QuantParams::validate(std::size_t channels_expected) const {
  if (nbit < 2 || nbit > 8)
    raise(errc::invalid_argument, "nbit must be in [2, 8], got " + std::to_string(nbit));
  if (scales.empty()) raise(errc::invalid_argument, "scale vector is empty");
  if (!per_channel && scales.size() != 1)
    raise(errc::invalid_argument, "scalar params carry exactly one scale");
  for (double s : scales) {
    if (!(s > 0.0) || !std::isfinite(s))
      raise(errc::invalid_argument, "every scale entry must be finite and > 0");
  }
  if (channels_expected != 0 && per_channel && scales.size() != channels_expected)
    raise(errc::dim_mismatch, "per-channel scale length " + std::to_string(scales.size()) +
                                  " does not match channel count " +
                                  std::to_string(channels_expected));
}

void QuantTensor::validate() const {
  params.validate(cols);
  if (codes.size() != rows * cols) raise(errc::dim_mismatch, "code buffer size mismatch");
  const int lo = params.qmin();
  const int hi = params.qmax();
  for (std::int8_t c : codes) {
    if (c < lo || c > hi)
      raise(errc::invalid_argument, "code " + std::to_string(int(c)) + " outside [" +
                                        std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

std::vector<double> boundary_refs(int nbit, double scale) {
  QuantParams p = QuantParams::scalar(nbit, scale);
  std::vector<double> refs;
  refs.reserve(static_cast<std::size_t>(p.levels() - 1));
  for (int k = p.qmin() + 1; k <= p.qmax(); ++k) {
    refs.push_back((k - 0.5) * scale);
  }
  return refs;
}

std::vector<double> boundary_refs(const QuantParams& params) {
  return boundary_refs(params.nbit, params.scalar_scale());
}

int comparator_quantize(double x, std::span<const double> refs, int qmin) {
  // Count of references strictly below x; lower_bound gives the first
  // reference >= x, so everything before it satisfies s_k < x.
  const auto it = std::lower_bound(refs.begin(), refs.end(), x);
  return qmin + static_cast<int>(it - refs.begin());
}

QuantTensor quantize(const FloatTensor& x, const QuantParams& params) {
  params.validate(x.cols);
  QuantTensor out(x.rows, x.cols, params);
  const int qmin = params.qmin();
  if (params.is_scalar()) {
    const std::vector<double> refs = boundary_refs(params);
    for (std::size_t i = 0; i < x.values.size(); ++i) {
      out.codes[i] = static_cast<std::int8_t>(comparator_quantize(x.values[i], refs, qmin));
    }
    return out;
  }
  std::vector<std::vector<double>> refs(x.cols);
  for (std::size_t c = 0; c < x.cols; ++c) refs[c] = boundary_refs(params.nbit, params.scales[c]);
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t c = 0; c < x.cols; ++c) {
      out.at(r, c) = static_cast<std::int8_t>(comparator_quantize(x.at(r, c), refs[c], qmin));
    }
  }
  return out;
}

FloatTensor dequantize(const QuantTensor& q) {
  q.params.validate(q.cols);
  FloatTensor out(q.rows, q.cols);
  for (std::size_t r = 0; r < q.rows; ++r) {
    for (std::size_t c = 0; c < q.cols; ++c) {
      out.at(r, c) = static_cast<double>(q.at(r, c)) * q.params.scale_for(c);
    }
  }
  return out;
}

double mean_scale(std::span<const double> scales, ScaleAggregate aggregate) {
  if (scales.empty()) raise(errc::invalid_argument, "mean_scale of empty vector");
  for (double s : scales) {
    if (!(s > 0.0)) raise(errc::invalid_argument, "mean_scale requires positive entries");
  }
  if (aggregate == ScaleAggregate::geometric) {
    double acc = 0.0;
    for (double s : scales) acc += std::log(s);
    return std::exp(acc / static_cast<double>(scales.size()));
  }
  double acc = 0.0;
  for (double s : scales) acc += s;
  return acc / static_cast<double>(scales.size());
}

}  // namespace intvit
