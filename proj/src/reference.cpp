#include "intvit/reference.hpp"

#include <cmath>
#include <string>

namespace intvit {
namespace reference {

FloatTensor ref_linear(const QuantTensor& xq, const QuantTensor& wq_t,
                       std::span<const double> dx, std::span<const double> dw,
                       std::span<const double> bias) {
  const std::size_t n = xq.rows, in = xq.cols, out = wq_t.cols;
  if (wq_t.rows != in)
    raise(errc::dim_mismatch, "weight rows " + std::to_string(wq_t.rows) +
                                  " != input channels " + std::to_string(in));
  if (dx.size() != in) raise(errc::dim_mismatch, "input scale length mismatch");
  if (dw.size() != out) raise(errc::dim_mismatch, "weight scale length mismatch");
  if (bias.size() != out) raise(errc::dim_mismatch, "bias length mismatch");

  FloatTensor y(n, out);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t o = 0; o < out; ++o) {
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) {
        acc += (static_cast<double>(xq.at(r, i)) * dx[i]) *
               (static_cast<double>(wq_t.at(i, o)) * dw[o]);
      }
      y.at(r, o) = acc + bias[o];
    }
  }
  return y;
}

QuantTensor ref_layernorm_quantize(const FloatTensor& y, std::span<const double> gamma,
                                   std::span<const double> beta, const QuantParams& out_params) {
  if (y.cols == 0) raise(errc::invalid_argument, "empty rows");
  if (gamma.size() != y.cols || beta.size() != y.cols)
    raise(errc::dim_mismatch, "gamma/beta length mismatch");
  const std::vector<double> refs = boundary_refs(out_params);
  const int qmin = out_params.qmin();

  QuantTensor out(y.rows, y.cols, out_params);
  for (std::size_t r = 0; r < y.rows; ++r) {
    // Two-pass mean / population variance.
    double mean = 0.0;
    for (std::size_t c = 0; c < y.cols; ++c) mean += y.at(r, c);
    mean /= static_cast<double>(y.cols);
    double var = 0.0;
    for (std::size_t c = 0; c < y.cols; ++c) {
      const double d = y.at(r, c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(y.cols);

    if (var == 0.0) {
      for (std::size_t c = 0; c < y.cols; ++c)
        out.at(r, c) = static_cast<std::int8_t>(comparator_quantize(beta[c], refs, qmin));
      continue;
    }
    const double inv_sigma = 1.0 / std::sqrt(var);
    for (std::size_t c = 0; c < y.cols; ++c) {
      const double z = (y.at(r, c) - mean) * inv_sigma * gamma[c] + beta[c];
      out.at(r, c) = static_cast<std::int8_t>(comparator_quantize(z, refs, qmin));
    }
  }
  return out;
}

FloatTensor ref_softmax(const FloatTensor& logits, double scale) {
  FloatTensor w(logits.rows, logits.cols);
  for (std::size_t r = 0; r < logits.rows; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < logits.cols; ++c) {
      const double e = std::exp(scale * logits.at(r, c));
      w.at(r, c) = e;
      sum += e;
    }
    if (!(sum > 0.0)) raise(errc::underflow, "softmax row underflowed to zero");
    for (std::size_t c = 0; c < logits.cols; ++c) w.at(r, c) /= sum;
  }
  return w;
}

FloatTensor ref_attention(const FloatTensor& q, const FloatTensor& k, const FloatTensor& v,
                          double scale) {
  if (q.cols != k.cols) raise(errc::dim_mismatch, "Q/K width mismatch");
  if (k.rows != v.rows) raise(errc::dim_mismatch, "K/V height mismatch");

  FloatTensor logits(q.rows, k.rows);
  for (std::size_t i = 0; i < q.rows; ++i) {
    for (std::size_t j = 0; j < k.rows; ++j) {
      double acc = 0.0;
      for (std::size_t d = 0; d < q.cols; ++d) acc += q.at(i, d) * k.at(j, d);
      logits.at(i, j) = acc;
    }
  }
  const FloatTensor w = ref_softmax(logits, scale);

  FloatTensor out(q.rows, v.cols);
  for (std::size_t i = 0; i < q.rows; ++i) {
    for (std::size_t c = 0; c < v.cols; ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < v.rows; ++j) acc += w.at(i, j) * v.at(j, c);
      out.at(i, c) = acc;
    }
  }
  return out;
}

}  // namespace reference
}  // namespace intvit
