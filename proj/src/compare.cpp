#include "intvit/compare.hpp"

#include <cmath>
#include <limits>

namespace intvit {

namespace {

double min_boundary_distance(double v, std::span<const double> refs) {
  double best = std::numeric_limits<double>::infinity();
  for (double s : refs) best = std::min(best, std::abs(v - s));
  return best;
}

bool any_tie(const FloatTensor& values, std::span<const double> refs, double eps) {
  for (double v : values.values) {
    if (min_boundary_distance(v, refs) < eps) return true;
  }
  return false;
}

bool row_tie(const FloatTensor& values, std::size_t row, std::span<const double> refs,
             double eps) {
  for (std::size_t c = 0; c < values.cols; ++c) {
    if (min_boundary_distance(values.at(row, c), refs) < eps) return true;
  }
  return false;
}

}  // namespace

CompareResult compare_head(const QuantTensor& xq, const HeadParams& params, double tie_epsilon) {
  CompareResult res;

  // Projection gaps: reordered integer path against the float oracle, once
  // with the mean-collapsed input scale (must be ~0) and once with the true
  // per-channel scales (the approximation error, reported).
  for (const QuantTensor* w : {&params.wq_t, &params.wk_t, &params.wv_t}) {
    const std::vector<double>& bias = w == &params.wq_t   ? params.bq
                                      : w == &params.wk_t ? params.bk
                                                          : params.bv;
    const EquivalenceGap gap =
        equivalence_gap(xq, *w, params.input_scales, w->params.scales, bias);
    res.gap_vs_mean_oracle = std::max(res.gap_vs_mean_oracle, gap.vs_mean_scale);
    res.gap_vs_eq1 = std::max(res.gap_vs_eq1, gap.vs_eq1);
  }

  const QuantTensor out_int = run_head_kernel(xq, params);
  OracleTrace trace;
  const QuantTensor out_ref = run_head_reference(xq, params, true, &trace);

  // Shift-mode softmax deviation: approximate weights against exact softmax
  // of the same integer logits.
  if (params.attn.exp_mode == ExpMode::shift_approx) {
    const HeadProjections proj = project_qkv_kernel(xq, params);
    const IntAccumTensor qk =
        qk_int_matmul(proj.q, proj.k, params.attn.qk_combined_scale());
    AttentionConfig exact_cfg = params.attn;
    exact_cfg.exp_mode = ExpMode::exact;
    for (std::size_t i = 0; i < qk.rows; ++i) {
      const std::span<const std::int32_t> accs{&qk.values[i * qk.cols], qk.cols};
      const ExpRow approx = build_exp_row(accs, params.attn);
      const ExpRow exact = build_exp_row(accs, exact_cfg);
      for (std::size_t j = 0; j < qk.cols; ++j) {
        const double dev = std::abs(approx.numerators[j] / approx.row_sum -
                                    exact.numerators[j] / exact.row_sum);
        res.max_softmax_weight_dev = std::max(res.max_softmax_weight_dev, dev);
      }
    }
  }

  // Tie exclusion. K and V values feed every output row, so a near-boundary
  // value there poisons the whole comparison; a Q or attention-weight tie in
  // row i poisons that output row; an output-value tie only its element.
  const int nbit = params.attn.nbit;
  const std::vector<double> refs_q = boundary_refs(nbit, params.attn.dq);
  const std::vector<double> refs_k = boundary_refs(nbit, params.attn.dk);
  const std::vector<double> refs_v = boundary_refs(nbit, params.attn.dv);
  const std::vector<double> refs_a = boundary_refs(nbit, params.attn.dattn);
  const std::vector<double> refs_o = boundary_refs(nbit, params.attn.dout);

  const bool global_tie = any_tie(trace.z_k, refs_k, tie_epsilon) ||
                          any_tie(trace.y_v, refs_v, tie_epsilon);
  std::uint64_t match = 0;
  for (std::size_t r = 0; r < out_int.rows; ++r) {
    const bool rt = global_tie || row_tie(trace.z_q, r, refs_q, tie_epsilon) ||
                    row_tie(trace.attn_weights, r, refs_a, tie_epsilon);
    for (std::size_t c = 0; c < out_int.cols; ++c) {
      if (rt || min_boundary_distance(trace.y_out.at(r, c), refs_o) < tie_epsilon) {
        ++res.codes_excluded;
        continue;
      }
      ++res.codes_compared;
      if (out_int.at(r, c) == out_ref.at(r, c)) ++match;
    }
  }
  res.code_agreement = res.codes_compared == 0
                           ? 1.0
                           : static_cast<double>(match) / static_cast<double>(res.codes_compared);
  return res;
}

CompareResult compare_run(std::uint64_t seed, std::size_t tokens, std::size_t in_channels,
                          std::size_t head_dim, std::uint32_t heads, int nbit, ExpMode exp_mode,
                          double tie_epsilon) {
  const QuantTensor xq = make_random_input(seed, tokens, in_channels, nbit);
  CompareResult total;
  double agree_min = 1.0;
  for (std::uint32_t h = 0; h < heads; ++h) {
    const HeadParams params =
        make_random_head(seed, h, tokens, in_channels, head_dim, nbit, exp_mode);
    const CompareResult r = compare_head(xq, params, tie_epsilon);
    total.gap_vs_mean_oracle = std::max(total.gap_vs_mean_oracle, r.gap_vs_mean_oracle);
    total.gap_vs_eq1 = std::max(total.gap_vs_eq1, r.gap_vs_eq1);
    total.max_softmax_weight_dev = std::max(total.max_softmax_weight_dev, r.max_softmax_weight_dev);
    total.codes_compared += r.codes_compared;
    total.codes_excluded += r.codes_excluded;
    agree_min = std::min(agree_min, r.code_agreement);
  }
  total.code_agreement = agree_min;
  return total;
}

}  // namespace intvit
