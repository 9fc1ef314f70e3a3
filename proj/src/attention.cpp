#include "intvit/attention.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace intvit {

void AttentionConfig::validate() const {
  if (tokens < 1 || head_dim < 1) raise(errc::invalid_argument, "tokens and head_dim must be >= 1");
  for (double d : {dq, dk, dv, dattn, dout}) {
    if (!(d > 0.0) || !std::isfinite(d))
      raise(errc::invalid_argument, "step sizes must be finite and > 0");
  }
  if (!(softmax_scale > 0.0)) raise(errc::invalid_argument, "softmax scale must be > 0");
  if (nbit < 2 || nbit > 8) raise(errc::invalid_argument, "nbit must be in [2, 8]");
  if (exp_frac_bits < 0 || exp_frac_bits > 52)
    raise(errc::invalid_argument, "exp_frac_bits must be in [0, 52]");
}

AttentionConfig AttentionConfig::for_head(std::size_t tokens, std::size_t head_dim, int nbit) {
  AttentionConfig cfg;
  cfg.tokens = tokens;
  cfg.head_dim = head_dim;
  cfg.softmax_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  cfg.nbit = nbit;
  return cfg;
}

namespace {

std::int32_t checked_accum(std::int64_t sum, const char* what) {
  if (sum > std::numeric_limits<std::int32_t>::max() ||
      sum < std::numeric_limits<std::int32_t>::min())
    raise(errc::overflow, std::string(what) + " accumulator overflow");
  return static_cast<std::int32_t>(sum);
}

}  // namespace

IntAccumTensor qk_int_matmul(const QuantTensor& qq, const QuantTensor& kq, double combined_scale) {
  if (qq.cols != kq.cols)
    raise(errc::dim_mismatch, "Q width " + std::to_string(qq.cols) + " != K width " +
                                  std::to_string(kq.cols));
  IntAccumTensor acc(qq.rows, kq.rows);
  for (std::size_t i = 0; i < qq.rows; ++i) {
    for (std::size_t j = 0; j < kq.rows; ++j) {
      std::int64_t sum = 0;
      for (std::size_t d = 0; d < qq.cols; ++d)
        sum += static_cast<std::int64_t>(qq.at(i, d)) * kq.at(j, d);
      acc.at(i, j) = checked_accum(sum, "QK^T");
    }
  }
  acc.post_scale = {combined_scale};
  return acc;
}

double exp2_shift(double t) {
  const double m = std::floor(t);
  const double r = t - m;  // in [0, 1)
  const double out = std::ldexp(r + 1.0, static_cast<int>(m));
  if (!std::isfinite(out)) raise(errc::overflow, "exponent out of double range");
  return out;
}

double exp_shift(std::int64_t acc, double combined_scale, ExpMode mode, int frac_bits) {
  if (mode == ExpMode::exact) {
    const double out = std::exp(combined_scale * static_cast<double>(acc));
    if (!std::isfinite(out)) raise(errc::overflow, "exponent out of double range");
    return out;
  }
  double t = combined_scale * std::numbers::log2e * static_cast<double>(acc);
  if (frac_bits > 0) t = std::ldexp(std::round(std::ldexp(t, frac_bits)), -frac_bits);
  return exp2_shift(t);
}

ExpRow build_exp_row(std::span<const std::int32_t> accs, const AttentionConfig& cfg) {
  const double cs = cfg.qk_combined_scale();
  ExpRow row;
  row.numerators.resize(accs.size());

  if (cfg.exp_mode == ExpMode::exact) {
    double shift = 0.0;
    if (cfg.max_subtract) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::int32_t a : accs) mx = std::max(mx, cs * static_cast<double>(a));
      shift = mx;
    }
    for (std::size_t j = 0; j < accs.size(); ++j) {
      row.numerators[j] = std::exp(cs * static_cast<double>(accs[j]) - shift);
      row.row_sum += row.numerators[j];
    }
    return row;
  }

  std::vector<double> t(accs.size());
  for (std::size_t j = 0; j < accs.size(); ++j)
    t[j] = cs * std::numbers::log2e * static_cast<double>(accs[j]);
  if (cfg.max_subtract) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : t) mx = std::max(mx, v);
    for (double& v : t) v -= mx;
  }
  for (std::size_t j = 0; j < accs.size(); ++j) {
    double tj = t[j];
    if (cfg.exp_frac_bits > 0)
      tj = std::ldexp(std::round(std::ldexp(tj, cfg.exp_frac_bits)), -cfg.exp_frac_bits);
    row.numerators[j] = exp2_shift(tj);
    row.row_sum += row.numerators[j];
  }
  return row;
}

std::vector<int> softmax_quantize_row(const ExpRow& exps, double dattn, int nbit) {
  if (!(exps.row_sum > 0.0)) raise(errc::underflow, "exponential row sum underflowed to zero");
  const QuantParams p = QuantParams::scalar(nbit, dattn);
  // References scaled by the row sum; comparing numerators against them is
  // the division-free equivalent of quantizing numerators / sum.
  std::vector<double> scaled = boundary_refs(p);
  for (double& s : scaled) s *= exps.row_sum;
  std::vector<int> codes(exps.numerators.size());
  for (std::size_t j = 0; j < codes.size(); ++j)
    codes[j] = comparator_quantize(exps.numerators[j], scaled, p.qmin());
  return codes;
}

IntAccumTensor pv_int_matmul(const QuantTensor& attn_codes, const QuantTensor& vq,
                             double combined_scale) {
  if (attn_codes.cols != vq.rows)
    raise(errc::dim_mismatch, "attention width " + std::to_string(attn_codes.cols) +
                                  " != V height " + std::to_string(vq.rows));
  IntAccumTensor acc(attn_codes.rows, vq.cols);
  for (std::size_t i = 0; i < attn_codes.rows; ++i) {
    for (std::size_t o = 0; o < vq.cols; ++o) {
      std::int64_t sum = 0;
      for (std::size_t j = 0; j < vq.rows; ++j)
        sum += static_cast<std::int64_t>(attn_codes.at(i, j)) * vq.at(j, o);
      acc.at(i, o) = checked_accum(sum, "PV");
    }
  }
  acc.post_scale = {combined_scale};
  return acc;
}

QuantTensor absorbed_quantize(const IntAccumTensor& acc, const QuantParams& out_params) {
  const std::vector<double> refs = boundary_refs(out_params);
  const int qmin = out_params.qmin();
  QuantTensor out(acc.rows, acc.cols, out_params);

  // References pre-divided by the pending scale, one list per column when the
  // scale is channel-wise; the comparison then runs on raw accumulator values.
  const bool uniform = acc.post_scale.size() == 1;
  std::vector<std::vector<double>> scaled(uniform ? 1 : acc.cols);
  for (std::size_t c = 0; c < scaled.size(); ++c) {
    scaled[c] = refs;
    for (double& s : scaled[c]) s /= acc.scale_for(c);
  }
  for (std::size_t r = 0; r < acc.rows; ++r) {
    for (std::size_t c = 0; c < acc.cols; ++c) {
      const double b = acc.bias.empty() ? 0.0 : acc.bias[c];
      const double v = static_cast<double>(acc.at(r, c)) + b;
      out.at(r, c) = static_cast<std::int8_t>(
          comparator_quantize(v, scaled[uniform ? 0 : c], qmin));
    }
  }
  return out;
}

QuantTensor attention_head_forward(const QuantTensor& qq, const QuantTensor& kq,
                                   const QuantTensor& vq, const AttentionConfig& cfg) {
  cfg.validate();
  if (qq.rows != cfg.tokens || kq.rows != cfg.tokens || vq.rows != cfg.tokens)
    raise(errc::dim_mismatch, "token count mismatch");
  if (qq.cols != cfg.head_dim || kq.cols != cfg.head_dim)
    raise(errc::dim_mismatch, "head dimension mismatch");

  const IntAccumTensor qk = qk_int_matmul(qq, kq, cfg.qk_combined_scale());

  QuantTensor attn(cfg.tokens, cfg.tokens, QuantParams::scalar(cfg.nbit, cfg.dattn));
  for (std::size_t i = 0; i < cfg.tokens; ++i) {
    const ExpRow row = build_exp_row({&qk.values[i * qk.cols], qk.cols}, cfg);
    const std::vector<int> codes = softmax_quantize_row(row, cfg.dattn, cfg.nbit);
    for (std::size_t j = 0; j < cfg.tokens; ++j)
      attn.at(i, j) = static_cast<std::int8_t>(codes[j]);
  }

  const IntAccumTensor pv = pv_int_matmul(attn, vq, cfg.pv_combined_scale());
  return absorbed_quantize(pv, QuantParams::scalar(cfg.nbit, cfg.dout));
}

}  // namespace intvit
