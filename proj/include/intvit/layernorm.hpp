#ifndef INTVIT_LAYERNORM_HPP
#define INTVIT_LAYERNORM_HPP

#include <span>
#include <utility>
#include <vector>

#include "intvit/quant.hpp"

namespace intvit {

// Welford accumulator: element count, running mean, and running sum of
// squared deviations (unnormalized).
struct RunningStats {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;
};

RunningStats welford_update(RunningStats st, double x);

// (mean, population variance = m2 / count). count must be >= 1.
std::pair<double, double> finalize(const RunningStats& st);

// Truth of gamma * (x - mean) / sigma + beta > ref without dividing by sigma
// or taking a square root: the reference is folded to B = (ref - beta) / gamma
// (a configuration-time constant per reference and channel), and A > B * sigma
// is decided by sign logic plus one squared comparison against B^2 * var.
// gamma < 0 flips the inequality; var == 0 rows reduce to beta > ref.
bool ln_compare(double x, double mean, double var, double ref, double gamma_c, double beta_c);

struct LNQuantSpec {
  std::vector<double> gamma;
  std::vector<double> beta;
  QuantParams out_params;  // scalar step
};

// Welford over the row, then per channel the comparator count against
// boundary_refs(out_params) using ln_compare.
std::vector<int> ln_quantize_row(std::span<const double> row, const LNQuantSpec& spec);

// Row-wise application over a matrix, emitting a QuantTensor.
QuantTensor ln_quantize(const FloatTensor& y, const LNQuantSpec& spec);

}  // namespace intvit

#endif
