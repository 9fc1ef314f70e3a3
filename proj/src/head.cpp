#include "intvit/head.hpp"

#include <cmath>

#include "intvit/reference.hpp"
#include "intvit/rng.hpp"

namespace intvit {

void HeadParams::validate() const {
  wq_t.validate();
  wk_t.validate();
  wv_t.validate();
  const std::size_t in = wq_t.rows, out = wq_t.cols;
  if (wk_t.rows != in || wv_t.rows != in || wk_t.cols != out || wv_t.cols != out)
    raise(errc::dim_mismatch, "projection weight shapes differ");
  if (bq.size() != out || bk.size() != out || bv.size() != out)
    raise(errc::dim_mismatch, "bias length mismatch");
  if (gamma_q.size() != out || beta_q.size() != out || gamma_k.size() != out ||
      beta_k.size() != out)
    raise(errc::dim_mismatch, "gamma/beta length mismatch");
  if (input_scales.size() != in) raise(errc::dim_mismatch, "input scale length mismatch");
  if (attn.head_dim != out) raise(errc::dim_mismatch, "attention head_dim != projection width");
  attn.validate();
}

HeadPlans build_head_plans(const HeadParams& p) {
  return HeadPlans{
      build_plan(p.wq_t, p.bq, p.input_scales, ScaleSink::layer_norm),
      build_plan(p.wk_t, p.bk, p.input_scales, ScaleSink::layer_norm),
      build_plan(p.wv_t, p.bv, p.input_scales, ScaleSink::quantizer),
  };
}

namespace {

QuantTensor random_codes(Rng& rng, std::size_t rows, std::size_t cols, QuantParams params) {
  QuantTensor t(rows, cols, std::move(params));
  const int lo = t.params.qmin(), hi = t.params.qmax();
  for (auto& c : t.codes) c = static_cast<std::int8_t>(rng.next_int(lo, hi));
  return t;
}

std::vector<double> random_scales(Rng& rng, std::size_t n) {
  std::vector<double> s(n);
  for (auto& v : s) v = rng.next_log_uniform(0.01, 1.0);
  return s;
}

}  // namespace

QuantTensor make_random_input(std::uint64_t seed, std::size_t tokens, std::size_t in_channels,
                              int nbit) {
  Rng rng(Rng::derive_seed(seed, 1));
  QuantTensor x = random_codes(rng, tokens, in_channels,
                               QuantParams::scalar(nbit, 1.0));
  x.params = QuantParams::channel_wise(nbit, random_scales(rng, in_channels));
  return x;
}

HeadParams make_random_head(std::uint64_t seed, std::uint32_t head_index, std::size_t tokens,
                            std::size_t in_channels, std::size_t head_dim, int nbit,
                            ExpMode exp_mode) {
  Rng rng(Rng::derive_seed(seed, 2 + head_index));
  HeadParams p;

  auto projection = [&](QuantTensor& w, std::vector<double>& bias) {
    w = random_codes(rng, in_channels, head_dim, QuantParams::scalar(nbit, 1.0));
    w.params = QuantParams::channel_wise(nbit, random_scales(rng, head_dim));
    bias.resize(head_dim);
    for (auto& b : bias) b = rng.next_normal(0.0, 0.5);
  };
  projection(p.wq_t, p.bq);
  projection(p.wk_t, p.bk);
  projection(p.wv_t, p.bv);

  auto affine = [&](std::vector<double>& gamma, std::vector<double>& beta) {
    gamma.resize(head_dim);
    beta.resize(head_dim);
    for (auto& g : gamma) g = rng.next_uniform(0.5, 1.5);
    for (auto& b : beta) b = rng.next_normal(0.0, 0.25);
  };
  affine(p.gamma_q, p.beta_q);
  affine(p.gamma_k, p.beta_k);

  p.input_scales = random_scales(rng, in_channels);
  p.attn = AttentionConfig::for_head(tokens, head_dim, nbit);
  p.attn.dq = rng.next_log_uniform(0.01, 1.0);
  p.attn.dk = rng.next_log_uniform(0.01, 1.0);
  p.attn.dv = rng.next_log_uniform(0.01, 1.0);
  p.attn.dattn = rng.next_log_uniform(0.01, 1.0);
  p.attn.dout = rng.next_log_uniform(0.01, 1.0);
  p.attn.exp_mode = exp_mode;
  return p;
}

FloatTensor layernorm_input(const IntAccumTensor& acc, const LinearPlan& plan) {
  FloatTensor y(acc.rows, acc.cols);
  for (std::size_t r = 0; r < acc.rows; ++r) {
    for (std::size_t o = 0; o < acc.cols; ++o) {
      y.at(r, o) = (static_cast<double>(acc.at(r, o)) + plan.equiv_bias[o]) *
                   plan.weight_scales[o];
    }
  }
  return y;
}

HeadProjections project_qkv_kernel(const QuantTensor& xq, const HeadParams& p) {
  p.validate();
  const HeadPlans plans = build_head_plans(p);

  const LNQuantSpec spec_q{p.gamma_q, p.beta_q, QuantParams::scalar(p.attn.nbit, p.attn.dq)};
  const LNQuantSpec spec_k{p.gamma_k, p.beta_k, QuantParams::scalar(p.attn.nbit, p.attn.dk)};

  HeadProjections out;
  out.q = ln_quantize(layernorm_input(int_linear(xq, plans.q), plans.q), spec_q);
  out.k = ln_quantize(layernorm_input(int_linear(xq, plans.k), plans.k), spec_k);
  out.v = absorbed_quantize(int_linear(xq, plans.v),
                            QuantParams::scalar(p.attn.nbit, p.attn.dv));
  return out;
}

QuantTensor run_head_kernel(const QuantTensor& xq, const HeadParams& p) {
  const HeadProjections proj = project_qkv_kernel(xq, p);
  return attention_head_forward(proj.q, proj.k, proj.v, p.attn);
}

namespace {

// Normalized LayerNorm values (z); zero-variance rows emit beta.
FloatTensor layernorm_z(const FloatTensor& y, std::span<const double> gamma,
                        std::span<const double> beta) {
  FloatTensor z(y.rows, y.cols);
  for (std::size_t r = 0; r < y.rows; ++r) {
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
      for (std::size_t c = 0; c < y.cols; ++c) z.at(r, c) = beta[c];
      continue;
    }
    const double inv_sigma = 1.0 / std::sqrt(var);
    for (std::size_t c = 0; c < y.cols; ++c)
      z.at(r, c) = (y.at(r, c) - mean) * inv_sigma * gamma[c] + beta[c];
  }
  return z;
}

FloatTensor matmul(const FloatTensor& a, const FloatTensor& b) {
  FloatTensor out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t c = 0; c < b.cols; ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < a.cols; ++j) acc += a.at(i, j) * b.at(j, c);
      out.at(i, c) = acc;
    }
  return out;
}

}  // namespace

QuantTensor run_head_reference(const QuantTensor& xq, const HeadParams& p, bool mean_input_scale,
                               OracleTrace* trace) {
  p.validate();
  std::vector<double> dx = p.input_scales;
  if (mean_input_scale) dx.assign(dx.size(), mean_scale(p.input_scales));

  const QuantParams qp = QuantParams::scalar(p.attn.nbit, p.attn.dq);
  const QuantParams kp = QuantParams::scalar(p.attn.nbit, p.attn.dk);
  const QuantParams vp = QuantParams::scalar(p.attn.nbit, p.attn.dv);
  const QuantParams ap = QuantParams::scalar(p.attn.nbit, p.attn.dattn);
  const QuantParams op = QuantParams::scalar(p.attn.nbit, p.attn.dout);

  const FloatTensor yq = reference::ref_linear(xq, p.wq_t, dx, p.wq_t.params.scales, p.bq);
  const FloatTensor yk = reference::ref_linear(xq, p.wk_t, dx, p.wk_t.params.scales, p.bk);
  const FloatTensor yv = reference::ref_linear(xq, p.wv_t, dx, p.wv_t.params.scales, p.bv);

  const FloatTensor zq = layernorm_z(yq, p.gamma_q, p.beta_q);
  const FloatTensor zk = layernorm_z(yk, p.gamma_k, p.beta_k);
  const FloatTensor qf = dequantize(quantize(zq, qp));
  const FloatTensor kf = dequantize(quantize(zk, kp));
  const FloatTensor vf = dequantize(quantize(yv, vp));

  FloatTensor logits(qf.rows, kf.rows);
  for (std::size_t i = 0; i < qf.rows; ++i)
    for (std::size_t j = 0; j < kf.rows; ++j) {
      double acc = 0.0;
      for (std::size_t d = 0; d < qf.cols; ++d) acc += qf.at(i, d) * kf.at(j, d);
      logits.at(i, j) = acc;
    }
  const FloatTensor weights = reference::ref_softmax(logits, p.attn.softmax_scale);
  const FloatTensor attn_deq = dequantize(quantize(weights, ap));
  const FloatTensor y_out = matmul(attn_deq, vf);

  if (trace) {
    trace->z_q = zq;
    trace->z_k = zk;
    trace->y_v = yv;
    trace->attn_weights = weights;
    trace->y_out = y_out;
  }
  return quantize(y_out, op);
}

}  // namespace intvit
