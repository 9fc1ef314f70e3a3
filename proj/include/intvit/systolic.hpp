#ifndef INTVIT_SYSTOLIC_HPP
#define INTVIT_SYSTOLIC_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "intvit/head.hpp"

namespace intvit {

enum class BlockKind : std::uint8_t {
  linear_mac,
  layernorm_stats,
  delay,
  reversing,
  matmul_mac,
  matmul_exp_softmax,
};

const char* block_kind_name(BlockKind kind);

struct PEBlock {
  BlockKind kind;
  std::string name;
  std::size_t rows = 1;  // grid height (capacity rows for delay/reversing)
  std::size_t cols = 1;
  int nbit = 3;
};

struct BlockStats {
  std::uint64_t pe_count = 0;
  std::uint64_t mac_count = 0;
  std::uint64_t cycles = 0;
  std::uint64_t preload_cycles = 0;  // weight-stationary preload, kept apart
  double energy_proxy = 0.0;
};

// Ordered per-block accounting for one self-attention head; the block list
// mirrors the hardware: Q/K/V linear paths, the QK^T matmul with embedded
// softmax, and the PV matmul.
struct AttentionReport {
  std::size_t tokens = 0, in_channels = 0, head_dim = 0;
  int nbit = 3;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, BlockStats>> blocks;

  BlockStats totals() const;
};

// Per-kind energy proxy (unit cost per MAC, dimensionless). The default
// charges nbit^2 per MAC for every compute kind; a cost-model file with lines
// `kind=<name> cost_per_mac=<real>` overrides individual kinds.
struct CostModel {
  double cost[6];
  std::string source = "default";

  double cost_for(BlockKind kind) const { return cost[static_cast<int>(kind)]; }
  static CostModel defaults(int nbit);
  static CostModel from_file(const std::string& path, int nbit);
};

// Ten blocks in report order: Q linear / layernorm / delay, K linear /
// layernorm / delay, V linear / reversing, QK^T matmul+softmax, PV matmul.
std::vector<PEBlock> build_attention_layout(std::size_t tokens = 198,
                                            std::size_t in_channels = 384,
                                            std::size_t head_dim = 64, int nbit = 3);

std::uint64_t pe_count(const PEBlock& block);
std::uint64_t mac_count(const PEBlock& block, std::size_t tokens, std::size_t in_channels,
                        std::size_t head_dim);

// Cycle model (data independent): output-stationary matmul grids pay a
// rows+cols-1 fill, one cycle per accumulation depth, and a scan-out of one
// row length; the softmax variant adds one row length of sum propagation.
// Weight-stationary linear grids preload one cycle per weight row (reported
// separately) and stream fill + tokens + scan-out. The LayerNorm pair of
// stats rows costs row length + 2, one comparator stage, and pipelines one
// row per cycle. Delay buffers cost their token stream; the reversing buffer
// costs a fill and a drain.

struct MatmulSim {
  IntAccumTensor acc;
  std::uint64_t cycles = 0;
};
// A (M x D) times B (D x C), or A times B^T when transpose_b (B then C x D).
// Block grid must be M x C. Each PE accumulates its output coordinate in
// operand arrival order.
MatmulSim simulate_matmul_block(const PEBlock& block, const QuantTensor& a, const QuantTensor& b,
                                bool transpose_b, double combined_scale);
// Same contraction with B rows arriving in the order `row_order` (the stream
// emitted by the reversing buffer).
MatmulSim simulate_matmul_streamed(const PEBlock& block, const QuantTensor& a,
                                   const QuantTensor& b_stream,
                                   std::span<const std::size_t> row_order,
                                   double combined_scale);

struct SoftmaxSim {
  QuantTensor attn;
  std::uint64_t cycles = 0;
};
// QK^T on the grid, per-PE exponential after the last accumulation, row sums
// propagated left to right, then the sum-scaled quantizer on the scan chain.
SoftmaxSim simulate_softmax_block(const PEBlock& block, const QuantTensor& qq,
                                  const QuantTensor& kq, const AttentionConfig& cfg);

struct LinearSim {
  IntAccumTensor acc;
  std::uint64_t cycles = 0;
  std::uint64_t preload_cycles = 0;
};
LinearSim simulate_linear_block(const PEBlock& block, const QuantTensor& xq,
                                const LinearPlan& plan);

struct LayerNormSim {
  QuantTensor codes;
  std::uint64_t cycles = 0;
};
LayerNormSim simulate_layernorm_block(const PEBlock& block, const FloatTensor& rows,
                                      const LNQuantSpec& spec);

struct ReversingSim {
  QuantTensor out;                       // rows in emission order
  std::vector<std::size_t> source_rows;  // original index per emitted row
  std::uint64_t cycles = 0;
};
// Single buffer pass: rows emitted in reverse arrival order. At most
// block.rows rows fit; longer streams must be fed in chunks.
ReversingSim simulate_reversing(const PEBlock& block, const QuantTensor& v);
// Chunked pass for streams longer than the buffer.
ReversingSim reverse_stream(const PEBlock& block, const QuantTensor& v);

struct HeadSim {
  QuantTensor output;
  AttentionReport report;
};
// Full head through the block pipeline; output codes are bit-identical to
// run_head_kernel on the same inputs.
HeadSim run_head_simulated(const QuantTensor& xq, const HeadParams& params,
                           const CostModel& cost_model);

// One head end to end on seeded random codes, reporting Table-style per-block
// PE/MAC/cycle counts and the energy proxy.
AttentionReport full_report(std::size_t tokens, std::size_t in_channels, std::size_t head_dim,
                            int nbit, std::uint64_t seed, ExpMode exp_mode,
                            const CostModel& cost_model);

// The same accounting without running data (cycle counts are data
// independent, so this matches run_head_simulated's report exactly).
AttentionReport accounting_report(std::size_t tokens, std::size_t in_channels,
                                  std::size_t head_dim, int nbit, const CostModel& cost_model);

std::string report_to_json(const AttentionReport& report, const CostModel& cost_model);
std::string report_to_csv(const AttentionReport& report);

}  // namespace intvit

#endif
