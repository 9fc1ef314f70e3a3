#ifndef INTVIT_COMPARE_HPP
#define INTVIT_COMPARE_HPP

#include <cstdint>

#include "intvit/head.hpp"

namespace intvit {

// Integer path vs dequantize-first oracle on identical inputs. Gaps are max
// absolute elementwise differences over the three projection outputs; code
// agreement is measured on the final head output with boundary ties excluded
// (an element is a tie when any pre-quantizer value it depends on lies within
// `tie_epsilon` of a comparator reference).
struct CompareResult {
  double gap_vs_mean_oracle = 0.0;  // exact-rearrangement residual, ~1e-13
  double gap_vs_eq1 = 0.0;          // residual against true channel-wise scales
  double code_agreement = 1.0;      // over non-excluded elements
  std::uint64_t codes_compared = 0;
  std::uint64_t codes_excluded = 0;
  double max_softmax_weight_dev = 0.0;  // shift mode vs exact softmax weights
};

CompareResult compare_head(const QuantTensor& xq, const HeadParams& params,
                           double tie_epsilon = 1e-9);

// Seeded end-to-end comparison across `heads` heads sharing one input.
CompareResult compare_run(std::uint64_t seed, std::size_t tokens, std::size_t in_channels,
                          std::size_t head_dim, std::uint32_t heads, int nbit, ExpMode exp_mode,
                          double tie_epsilon = 1e-9);

}  // namespace intvit

#endif
