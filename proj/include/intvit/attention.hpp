#ifndef INTVIT_ATTENTION_HPP
#define INTVIT_ATTENTION_HPP

#include <cstdint>
#include <vector>

#include "intvit/linear.hpp"
#include "intvit/quant.hpp"

namespace intvit {

enum class ExpMode : std::uint8_t { exact = 0, shift_approx = 1 };

struct AttentionConfig {
  std::size_t tokens = 1;    // N
  std::size_t head_dim = 1;  // d_k
  double softmax_scale = 1.0;  // s, conventionally 1/sqrt(d_k)
  double dq = 1.0, dk = 1.0, dv = 1.0, dattn = 1.0, dout = 1.0;
  int nbit = 3;
  ExpMode exp_mode = ExpMode::exact;
  bool max_subtract = false;
  // In shift mode, quantize the base-2 exponent t to this many fractional
  // bits before the floor/residual split; 0 keeps t in full double precision.
  int exp_frac_bits = 0;

  double qk_combined_scale() const { return softmax_scale * dq * dk; }
  double pv_combined_scale() const { return dattn * dv; }
  void validate() const;

  static AttentionConfig for_head(std::size_t tokens, std::size_t head_dim, int nbit);
};

// A row of approximated exponentials and their left-to-right sum.
struct ExpRow {
  std::vector<double> numerators;
  double row_sum = 0.0;
};

// Pure integer N x N accumulator Qq . Kq^T; the combined scale s * dq * dk is
// attached as metadata, not applied.
IntAccumTensor qk_int_matmul(const QuantTensor& qq, const QuantTensor& kq, double combined_scale);

// Base-2 split of e^(combined_scale * acc): with t = combined_scale * log2(e)
// * acc, m = floor(t) and r = t - m, returns (r + 1) * 2^m.
double exp2_shift(double t);
double exp_shift(std::int64_t acc, double combined_scale,
                 ExpMode mode = ExpMode::shift_approx, int frac_bits = 0);

// Exponentials for one accumulator row under the configured mode, summed
// left to right. max_subtract shifts every exponent by the row maximum first.
ExpRow build_exp_row(std::span<const std::int32_t> accs, const AttentionConfig& cfg);

// Sum-absorbed comparator: code_j = qmin + |{k : numerators[j] > s_k * sum}|,
// identical to quantizing numerators[j] / sum without performing the division.
std::vector<int> softmax_quantize_row(const ExpRow& exps, double dattn, int nbit);

// Integer matmul attn_codes (N x N) . Vq (N x O); combined scale dattn * dv
// carried to the next quantizer.
IntAccumTensor pv_int_matmul(const QuantTensor& attn_codes, const QuantTensor& vq,
                             double combined_scale);

// Scale-absorbed output quantizer: codes of acc * combined_scale against
// out_params references, realized as integer-vs-scaled-reference comparisons.
QuantTensor absorbed_quantize(const IntAccumTensor& acc, const QuantParams& out_params);

// qk -> exp -> sum-absorbed attention quantizer -> pv -> absorbed output
// quantizer. Returns the low-bit head output (step cfg.dout).
QuantTensor attention_head_forward(const QuantTensor& qq, const QuantTensor& kq,
                                   const QuantTensor& vq, const AttentionConfig& cfg);

}  // namespace intvit

#endif
