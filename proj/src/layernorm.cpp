#include "intvit/layernorm.hpp"

namespace intvit {

RunningStats welford_update(RunningStats st, double x) {
  const double prev_mean = st.mean;
  st.count += 1;
  st.mean = prev_mean + (x - prev_mean) / static_cast<double>(st.count);
  st.m2 += (x - prev_mean) * (x - st.mean);
  return st;
}

std::pair<double, double> finalize(const RunningStats& st) {
  if (st.count == 0) raise(errc::invalid_argument, "finalize of empty stats");
  return {st.mean, st.m2 / static_cast<double>(st.count)};
}

namespace {
inline int sgn(double v) { return (v > 0.0) - (v < 0.0); }
}  // namespace

bool ln_compare(double x, double mean, double var, double ref, double gamma_c, double beta_c) {
  if (gamma_c == 0.0) raise(errc::invalid_argument, "gamma must be nonzero");
  if (var < 0.0) raise(errc::invalid_argument, "negative variance");
  if (var == 0.0) return beta_c > ref;

  const double a = x - mean;
  const double b = (ref - beta_c) / gamma_c;  // one configuration-time division
  const int sa = sgn(a);
  const int sb = sgn(b);

  if (gamma_c > 0.0) {
    // a > b * sigma
    if (sa != sb) return sa > sb;
    if (sa >= 0) return a * a > b * b * var;
    return a * a < b * b * var;
  }
  // gamma < 0 flips the inequality: a < b * sigma
  if (sa != sb) return sa < sb;
  if (sa >= 0) return a * a < b * b * var;
  return a * a > b * b * var;
}

std::vector<int> ln_quantize_row(std::span<const double> row, const LNQuantSpec& spec) {
  if (row.empty()) raise(errc::invalid_argument, "empty row");
  if (spec.gamma.size() != row.size() || spec.beta.size() != row.size())
    raise(errc::dim_mismatch, "gamma/beta length mismatch");
  for (double g : spec.gamma)
    if (g == 0.0) raise(errc::invalid_argument, "gamma must be nonzero");

  RunningStats st;
  for (double x : row) st = welford_update(st, x);
  const auto [mean, var] = finalize(st);

  const std::vector<double> refs = boundary_refs(spec.out_params);
  const int qmin = spec.out_params.qmin();
  std::vector<int> codes(row.size());
  for (std::size_t c = 0; c < row.size(); ++c) {
    int passed = 0;
    for (double ref : refs) {
      if (ln_compare(row[c], mean, var, ref, spec.gamma[c], spec.beta[c])) ++passed;
    }
    codes[c] = qmin + passed;
  }
  return codes;
}

QuantTensor ln_quantize(const FloatTensor& y, const LNQuantSpec& spec) {
  QuantTensor out(y.rows, y.cols, spec.out_params);
  for (std::size_t r = 0; r < y.rows; ++r) {
    const std::vector<int> codes = ln_quantize_row(y.row(r), spec);
    for (std::size_t c = 0; c < y.cols; ++c) out.at(r, c) = static_cast<std::int8_t>(codes[c]);
  }
  return out;
}

}  // namespace intvit
