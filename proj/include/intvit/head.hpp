#ifndef INTVIT_HEAD_HPP
#define INTVIT_HEAD_HPP

#include <cstdint>

#include "intvit/attention.hpp"
#include "intvit/layernorm.hpp"
#include "intvit/linear.hpp"
#include "intvit/quant.hpp"

namespace intvit {

// Everything one self-attention head needs beyond the activations: projection
// weights (in_dim x head_dim, per-channel steps), biases, the Q/K LayerNorm
// affine parameters, the channel-wise input steps, and the attention config
// (which carries every scalar step size along the path).
struct HeadParams {
  QuantTensor wq_t, wk_t, wv_t;
  std::vector<double> bq, bk, bv;
  std::vector<double> gamma_q, beta_q, gamma_k, beta_k;
  std::vector<double> input_scales;  // dx, one per input channel
  AttentionConfig attn;

  std::size_t in_channels() const { return wq_t.rows; }
  std::size_t head_dim() const { return wq_t.cols; }
  void validate() const;
};

struct HeadPlans {
  LinearPlan q, k, v;
};

HeadPlans build_head_plans(const HeadParams& p);

// Seeded generation used by the CLI and the simulator report. Streams are
// drawn from mt19937_64 with hand-rolled value derivations; the draw order
// is fixed: input = codes then per-channel steps; head = for each of Q/K/V
// (weight codes, weight steps, bias), then gamma/beta for Q and K, then the
// scalar steps dq, dk, dv, dattn, dout, log-uniform over [0.01, 1].
QuantTensor make_random_input(std::uint64_t seed, std::size_t tokens, std::size_t in_channels,
                              int nbit);
HeadParams make_random_head(std::uint64_t seed, std::uint32_t head_index, std::size_t tokens,
                            std::size_t in_channels, std::size_t head_dim, int nbit,
                            ExpMode exp_mode);

// LayerNorm input for a plan with the LayerNorm sink: per-channel weight step
// applied, the scalar collapsed input step dropped (the normalization is
// invariant to it).
FloatTensor layernorm_input(const IntAccumTensor& acc, const LinearPlan& plan);

// Q/K/V projections on the integer path: int linear, then quantizing
// LayerNorm for Q and K, scale-absorbed quantizer for V.
struct HeadProjections {
  QuantTensor q, k, v;
};
HeadProjections project_qkv_kernel(const QuantTensor& xq, const HeadParams& p);

// Full integer head: projections followed by the integer attention core.
QuantTensor run_head_kernel(const QuantTensor& xq, const HeadParams& p);

// Pre-quantizer values along the oracle path, used for boundary-tie analysis.
struct OracleTrace {
  FloatTensor z_q, z_k;       // LayerNorm-normalized values
  FloatTensor y_v;            // V projection output
  FloatTensor attn_weights;   // exact softmax rows
  FloatTensor y_out;          // PV output before the final quantizer
};

// Dequantize-first oracle for the same head. With mean_input_scale the
// channel-wise dx is collapsed to its mean (the reordered path's algebra);
// otherwise the true per-channel dx is used.
QuantTensor run_head_reference(const QuantTensor& xq, const HeadParams& p, bool mean_input_scale,
                               OracleTrace* trace = nullptr);

}  // namespace intvit

#endif
