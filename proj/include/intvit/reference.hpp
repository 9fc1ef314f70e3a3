#ifndef INTVIT_REFERENCE_HPP
#define INTVIT_REFERENCE_HPP

#include <span>

#include "intvit/quant.hpp"

namespace intvit {
namespace reference {

// Dequantize-first oracle path: every operand is widened to double before the
// heavy operators run. Weight tensors are passed transposed (in_dim x out_dim,
// one column per output channel) so per-channel scales line up with columns.

// Y[n][o] = sum_i (Xq[n][i] * dx[i]) * (Wq[i][o] * dw[o]) + b[o].
FloatTensor ref_linear(const QuantTensor& xq, const QuantTensor& wq_t,
                       std::span<const double> dx, std::span<const double> dw,
                       std::span<const double> bias);

// Per row: z = (x - mean) / sigma * gamma + beta with population variance,
// then comparator quantization of z. Zero-variance rows emit quantize(beta).
QuantTensor ref_layernorm_quantize(const FloatTensor& y, std::span<const double> gamma,
                                   std::span<const double> beta, const QuantParams& out_params);

// Row-wise softmax(scale * logits), exact double-precision exp.
FloatTensor ref_softmax(const FloatTensor& logits, double scale);

// softmax(scale * Q K^T) V.
FloatTensor ref_attention(const FloatTensor& q, const FloatTensor& k, const FloatTensor& v,
                          double scale);

}  // namespace reference
}  // namespace intvit

#endif
