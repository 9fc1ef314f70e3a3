#include "intvit/systolic.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace intvit {

const char* block_kind_name(BlockKind kind) {
  switch (kind) {
    case BlockKind::linear_mac: return "linear_mac";
    case BlockKind::layernorm_stats: return "layernorm_stats";
    case BlockKind::delay: return "delay";
    case BlockKind::reversing: return "reversing";
    case BlockKind::matmul_mac: return "matmul_mac";
    case BlockKind::matmul_exp_softmax: return "matmul_exp_softmax";
  }
  return "unknown";
}

BlockStats AttentionReport::totals() const {
  BlockStats t;
  for (const auto& [name, s] : blocks) {
    t.pe_count += s.pe_count;
    t.mac_count += s.mac_count;
    t.cycles += s.cycles;
    t.preload_cycles += s.preload_cycles;
    t.energy_proxy += s.energy_proxy;
  }
  return t;
}

CostModel CostModel::defaults(int nbit) {
  CostModel m;
  const double c = static_cast<double>(nbit) * static_cast<double>(nbit);
  for (double& v : m.cost) v = c;
  m.cost[static_cast<int>(BlockKind::delay)] = 0.0;
  m.cost[static_cast<int>(BlockKind::reversing)] = 0.0;
  m.source = "default";
  return m;
}

CostModel CostModel::from_file(const std::string& path, int nbit) {
  std::ifstream is(path);
  if (!is) raise(errc::io, "cannot open cost model " + path);
  CostModel m = defaults(nbit);
  m.source = path;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    std::string kind_tok, cost_tok;
    ss >> kind_tok >> cost_tok;
    if (kind_tok.rfind("kind=", 0) != 0 || cost_tok.rfind("cost_per_mac=", 0) != 0)
      raise(errc::format, path + ":" + std::to_string(lineno) +
                              ": expected `kind=<name> cost_per_mac=<real>`");
    const std::string kind_name = kind_tok.substr(5);
    double cost = 0.0;
    try {
      cost = std::stod(cost_tok.substr(13));
    } catch (const std::exception&) {
      raise(errc::format, path + ":" + std::to_string(lineno) + ": bad cost value");
    }
    if (!(cost >= 0.0))
      raise(errc::format, path + ":" + std::to_string(lineno) + ": cost must be >= 0");
    bool known = false;
    for (int k = 0; k < 6; ++k) {
      if (kind_name == block_kind_name(static_cast<BlockKind>(k))) {
        m.cost[k] = cost;
        known = true;
        break;
      }
    }
    if (!known)
      raise(errc::format,
            path + ":" + std::to_string(lineno) + ": unknown kind `" + kind_name + "`");
  }
  return m;
}

std::vector<PEBlock> build_attention_layout(std::size_t tokens, std::size_t in_channels,
                                            std::size_t head_dim, int nbit) {
  if (tokens < 1 || in_channels < 1 || head_dim < 1)
    raise(errc::invalid_argument, "layout dims must be >= 1");
  const std::size_t n = tokens, i = in_channels, o = head_dim;
  return {
      {BlockKind::linear_mac, "q_linear", i, o, nbit},
      {BlockKind::layernorm_stats, "q_layernorm", 2, o, nbit},
      {BlockKind::delay, "q_delay", n, o, nbit},
      {BlockKind::linear_mac, "k_linear", i, o, nbit},
      {BlockKind::layernorm_stats, "k_layernorm", 2, o, nbit},
      {BlockKind::delay, "k_delay", n, o, nbit},
      {BlockKind::linear_mac, "v_linear", i, o, nbit},
      {BlockKind::reversing, "v_reversing", o, o, nbit},
      {BlockKind::matmul_exp_softmax, "qk_matmul_softmax", n, n, nbit},
      {BlockKind::matmul_mac, "pv_matmul", n, o, nbit},
  };
}

std::uint64_t pe_count(const PEBlock& block) {
  return static_cast<std::uint64_t>(block.rows) * block.cols;
}

std::uint64_t mac_count(const PEBlock& block, std::size_t tokens, std::size_t in_channels,
                        std::size_t head_dim) {
  const std::uint64_t n = tokens, i = in_channels, o = head_dim;
  switch (block.kind) {
    case BlockKind::linear_mac: return n * i * o;
    case BlockKind::matmul_mac:
    case BlockKind::matmul_exp_softmax: return n * n * o;
    case BlockKind::layernorm_stats: return 2 * n * o;
    case BlockKind::delay:
    case BlockKind::reversing: return 0;
  }
  return 0;
}

namespace {

std::int32_t checked_accum(std::int64_t sum) {
  if (sum > std::numeric_limits<std::int32_t>::max() ||
      sum < std::numeric_limits<std::int32_t>::min())
    raise(errc::overflow, "PE accumulator overflow");
  return static_cast<std::int32_t>(sum);
}

std::uint64_t matmul_cycles(std::size_t rows, std::size_t cols, std::size_t depth) {
  return (rows + cols - 1) + depth + cols;
}

void check_grid(const PEBlock& block, std::size_t rows, std::size_t cols) {
  if (block.rows != rows || block.cols != cols)
    raise(errc::dim_mismatch, block.name + ": output " + std::to_string(rows) + "x" +
                                  std::to_string(cols) + " does not match grid " +
                                  std::to_string(block.rows) + "x" + std::to_string(block.cols));
}

}  // namespace

MatmulSim simulate_matmul_block(const PEBlock& block, const QuantTensor& a, const QuantTensor& b,
                                bool transpose_b, double combined_scale) {
  if (block.kind != BlockKind::matmul_mac && block.kind != BlockKind::matmul_exp_softmax)
    raise(errc::invalid_argument, block.name + " is not a matmul block");
  const std::size_t m = a.rows;
  const std::size_t depth = a.cols;
  const std::size_t c = transpose_b ? b.rows : b.cols;
  if ((transpose_b ? b.cols : b.rows) != depth)
    raise(errc::dim_mismatch, block.name + ": contraction depth mismatch");
  check_grid(block, m, c);

  // Output-stationary grid: operand pair (a[i][k], b[k][j]) reaches PE(i, j)
  // at step i + j + k, so each PE folds its products in ascending k.
  MatmulSim sim;
  sim.acc = IntAccumTensor(m, c);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      std::int64_t pe = 0;
      for (std::size_t k = 0; k < depth; ++k) {
        const std::int8_t bkj = transpose_b ? b.at(j, k) : b.at(k, j);
        pe += static_cast<std::int64_t>(a.at(i, k)) * bkj;
      }
      sim.acc.at(i, j) = checked_accum(pe);
    }
  }
  sim.acc.post_scale = {combined_scale};
  sim.cycles = matmul_cycles(m, c, depth);
  return sim;
}

MatmulSim simulate_matmul_streamed(const PEBlock& block, const QuantTensor& a,
                                   const QuantTensor& b_stream,
                                   std::span<const std::size_t> row_order,
                                   double combined_scale) {
  if (b_stream.rows != row_order.size() || a.cols != b_stream.rows)
    raise(errc::dim_mismatch, block.name + ": stream length mismatch");
  check_grid(block, a.rows, b_stream.cols);

  MatmulSim sim;
  sim.acc = IntAccumTensor(a.rows, b_stream.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < b_stream.cols; ++j) {
      std::int64_t pe = 0;
      for (std::size_t t = 0; t < row_order.size(); ++t) {
        pe += static_cast<std::int64_t>(a.at(i, row_order[t])) * b_stream.at(t, j);
      }
      sim.acc.at(i, j) = checked_accum(pe);
    }
  }
  sim.acc.post_scale = {combined_scale};
  sim.cycles = matmul_cycles(a.rows, b_stream.cols, b_stream.rows);
  return sim;
}

SoftmaxSim simulate_softmax_block(const PEBlock& block, const QuantTensor& qq,
                                  const QuantTensor& kq, const AttentionConfig& cfg) {
  if (block.kind != BlockKind::matmul_exp_softmax)
    raise(errc::invalid_argument, block.name + " is not a softmax matmul block");
  const MatmulSim mm = simulate_matmul_block(block, qq, kq, true, cfg.qk_combined_scale());

  // Each PE applies the exponential to its settled accumulator; the partial
  // sums ride the row adders left to right and the scan-chain quantizer
  // compares every numerator against the sum-scaled references.
  SoftmaxSim sim;
  sim.attn = QuantTensor(qq.rows, kq.rows, QuantParams::scalar(cfg.nbit, cfg.dattn));
  for (std::size_t i = 0; i < qq.rows; ++i) {
    const ExpRow row = build_exp_row({&mm.acc.values[i * mm.acc.cols], mm.acc.cols}, cfg);
    const std::vector<int> codes = softmax_quantize_row(row, cfg.dattn, cfg.nbit);
    for (std::size_t j = 0; j < kq.rows; ++j)
      sim.attn.at(i, j) = static_cast<std::int8_t>(codes[j]);
  }
  sim.cycles = mm.cycles + block.cols;  // sum propagation along the row
  return sim;
}

LinearSim simulate_linear_block(const PEBlock& block, const QuantTensor& xq,
                                const LinearPlan& plan) {
  if (block.kind != BlockKind::linear_mac)
    raise(errc::invalid_argument, block.name + " is not a linear block");
  check_grid(block, plan.in_channels, plan.out_channels);
  if (xq.cols != plan.in_channels) raise(errc::dim_mismatch, block.name + ": input width mismatch");

  // Weight stationary: PE(i, o) holds the weight code for input channel i and
  // output channel o; each token's channels stream through and the partial
  // sums flow down the column in channel order.
  LinearSim sim;
  sim.acc = IntAccumTensor(xq.rows, plan.out_channels);
  for (std::size_t r = 0; r < xq.rows; ++r) {
    for (std::size_t o = 0; o < plan.out_channels; ++o) {
      std::int64_t pe = 0;
      for (std::size_t i = 0; i < plan.in_channels; ++i)
        pe += static_cast<std::int64_t>(xq.at(r, i)) * plan.weight(o, i);
      sim.acc.at(r, o) = checked_accum(pe);
    }
  }
  sim.acc.post_scale = plan.post_scale;
  sim.acc.bias = plan.equiv_bias;
  sim.preload_cycles = plan.in_channels;
  sim.cycles = (plan.in_channels + plan.out_channels - 1) + xq.rows + plan.out_channels;
  return sim;
}

LayerNormSim simulate_layernorm_block(const PEBlock& block, const FloatTensor& rows,
                                      const LNQuantSpec& spec) {
  if (block.kind != BlockKind::layernorm_stats)
    raise(errc::invalid_argument, block.name + " is not a layernorm block");
  if (block.cols != rows.cols) raise(errc::dim_mismatch, block.name + ": row width mismatch");

  // The mu and sigma^2 PE rows realize the incremental statistics in stream
  // order, then the comparator array emits one code per channel.
  LayerNormSim sim;
  sim.codes = ln_quantize(rows, spec);
  sim.cycles = (rows.cols + 2 + 1) + (rows.rows - 1);
  return sim;
}

ReversingSim simulate_reversing(const PEBlock& block, const QuantTensor& v) {
  if (block.kind != BlockKind::reversing)
    raise(errc::invalid_argument, block.name + " is not a reversing block");
  if (v.rows > block.rows)
    raise(errc::overflow, block.name + ": " + std::to_string(v.rows) +
                              " rows exceed buffer capacity " + std::to_string(block.rows));
  ReversingSim sim;
  sim.out = v;
  sim.source_rows.resize(v.rows);
  for (std::size_t r = 0; r < v.rows; ++r) {
    const std::size_t src = v.rows - 1 - r;
    sim.source_rows[r] = src;
    for (std::size_t c = 0; c < v.cols; ++c) sim.out.at(r, c) = v.at(src, c);
  }
  sim.cycles = 2 * block.rows;  // fill + drain
  return sim;
}

ReversingSim reverse_stream(const PEBlock& block, const QuantTensor& v) {
  ReversingSim sim;
  sim.out = QuantTensor(v.rows, v.cols, v.params);
  sim.source_rows.resize(v.rows);
  for (std::size_t start = 0; start < v.rows; start += block.rows) {
    const std::size_t len = std::min(block.rows, v.rows - start);
    QuantTensor chunk(len, v.cols, v.params);
    for (std::size_t r = 0; r < len; ++r)
      for (std::size_t c = 0; c < v.cols; ++c) chunk.at(r, c) = v.at(start + r, c);
    const ReversingSim part = simulate_reversing(block, chunk);
    for (std::size_t r = 0; r < len; ++r) {
      sim.source_rows[start + r] = start + part.source_rows[r];
      for (std::size_t c = 0; c < v.cols; ++c) sim.out.at(start + r, c) = part.out.at(r, c);
    }
    sim.cycles += part.cycles;
  }
  return sim;
}

HeadSim run_head_simulated(const QuantTensor& xq, const HeadParams& params,
                           const CostModel& cost_model) {
  params.validate();
  const std::size_t n = xq.rows, in = params.in_channels(), o = params.head_dim();
  const std::vector<PEBlock> layout = build_attention_layout(n, in, o, params.attn.nbit);
  const HeadPlans plans = build_head_plans(params);

  const LNQuantSpec spec_q{params.gamma_q, params.beta_q,
                           QuantParams::scalar(params.attn.nbit, params.attn.dq)};
  const LNQuantSpec spec_k{params.gamma_k, params.beta_k,
                           QuantParams::scalar(params.attn.nbit, params.attn.dk)};

  std::vector<std::uint64_t> cycles(layout.size(), 0);
  std::vector<std::uint64_t> preload(layout.size(), 0);

  const LinearSim lq = simulate_linear_block(layout[0], xq, plans.q);
  cycles[0] = lq.cycles;
  preload[0] = lq.preload_cycles;
  const LayerNormSim nq = simulate_layernorm_block(layout[1], layernorm_input(lq.acc, plans.q),
                                                   spec_q);
  cycles[1] = nq.cycles;
  cycles[2] = n;  // delay buffer holds the token stream

  const LinearSim lk = simulate_linear_block(layout[3], xq, plans.k);
  cycles[3] = lk.cycles;
  preload[3] = lk.preload_cycles;
  const LayerNormSim nk = simulate_layernorm_block(layout[4], layernorm_input(lk.acc, plans.k),
                                                   spec_k);
  cycles[4] = nk.cycles;
  cycles[5] = n;

  const LinearSim lv = simulate_linear_block(layout[6], xq, plans.v);
  cycles[6] = lv.cycles;
  preload[6] = lv.preload_cycles;
  // The V-path quantizer sits on the linear scan chain.
  const QuantTensor v_codes =
      absorbed_quantize(lv.acc, QuantParams::scalar(params.attn.nbit, params.attn.dv));
  const ReversingSim rv = reverse_stream(layout[7], v_codes);
  cycles[7] = rv.cycles;

  const SoftmaxSim sm = simulate_softmax_block(layout[8], nq.codes, nk.codes, params.attn);
  cycles[8] = sm.cycles;

  const MatmulSim pv = simulate_matmul_streamed(layout[9], sm.attn, rv.out, rv.source_rows,
                                                params.attn.pv_combined_scale());
  cycles[9] = pv.cycles;

  HeadSim result;
  result.output =
      absorbed_quantize(pv.acc, QuantParams::scalar(params.attn.nbit, params.attn.dout));

  result.report.tokens = n;
  result.report.in_channels = in;
  result.report.head_dim = o;
  result.report.nbit = params.attn.nbit;
  for (std::size_t b = 0; b < layout.size(); ++b) {
    BlockStats s;
    s.pe_count = pe_count(layout[b]);
    s.mac_count = mac_count(layout[b], n, in, o);
    s.cycles = cycles[b];
    s.preload_cycles = preload[b];
    s.energy_proxy = static_cast<double>(s.mac_count) * cost_model.cost_for(layout[b].kind);
    result.report.blocks.emplace_back(layout[b].name, s);
  }
  return result;
}

AttentionReport accounting_report(std::size_t tokens, std::size_t in_channels,
                                  std::size_t head_dim, int nbit, const CostModel& cost_model) {
  const std::size_t n = tokens, in = in_channels, o = head_dim;
  const std::vector<PEBlock> layout = build_attention_layout(n, in, o, nbit);

  AttentionReport report;
  report.tokens = n;
  report.in_channels = in;
  report.head_dim = o;
  report.nbit = nbit;
  for (const PEBlock& block : layout) {
    BlockStats s;
    s.pe_count = pe_count(block);
    s.mac_count = mac_count(block, n, in, o);
    switch (block.kind) {
      case BlockKind::linear_mac:
        s.cycles = (in + o - 1) + n + o;
        s.preload_cycles = in;
        break;
      case BlockKind::layernorm_stats:
        s.cycles = (o + 2 + 1) + (n - 1);
        break;
      case BlockKind::delay:
        s.cycles = n;
        break;
      case BlockKind::reversing:
        s.cycles = ((n + o - 1) / o) * (2 * o);
        break;
      case BlockKind::matmul_exp_softmax:
        s.cycles = matmul_cycles(n, n, o) + n;
        break;
      case BlockKind::matmul_mac:
        s.cycles = matmul_cycles(n, o, n);
        break;
    }
    s.energy_proxy = static_cast<double>(s.mac_count) * cost_model.cost_for(block.kind);
    report.blocks.emplace_back(block.name, s);
  }
  return report;
}

AttentionReport full_report(std::size_t tokens, std::size_t in_channels, std::size_t head_dim,
                            int nbit, std::uint64_t seed, ExpMode exp_mode,
                            const CostModel& cost_model) {
  const QuantTensor xq = make_random_input(seed, tokens, in_channels, nbit);
  const HeadParams params =
      make_random_head(seed, 0, tokens, in_channels, head_dim, nbit, exp_mode);
  HeadSim sim = run_head_simulated(xq, params, cost_model);
  sim.report.seed = seed;
  return sim.report;
}

std::string report_to_json(const AttentionReport& report, const CostModel& cost_model) {
  nlohmann::json j;
  j["config"] = {{"tokens", report.tokens},
                 {"model_dim", report.in_channels},
                 {"head_dim", report.head_dim},
                 {"nbit", report.nbit},
                 {"seed", report.seed}};
  j["prng"] = "mt19937_64";
  nlohmann::json costs;
  for (int k = 0; k < 6; ++k)
    costs[block_kind_name(static_cast<BlockKind>(k))] = cost_model.cost[k];
  costs["source"] = cost_model.source;
  j["cost_model"] = costs;
  j["blocks"] = nlohmann::json::array();
  for (const auto& [name, s] : report.blocks) {
    j["blocks"].push_back({{"block", name},
                           {"pe", s.pe_count},
                           {"mac", s.mac_count},
                           {"cycles", s.cycles},
                           {"preload_cycles", s.preload_cycles},
                           {"energy_proxy", s.energy_proxy}});
  }
  const BlockStats t = report.totals();
  j["totals"] = {{"pe", t.pe_count},
                 {"mac", t.mac_count},
                 {"cycles", t.cycles},
                 {"preload_cycles", t.preload_cycles},
                 {"energy_proxy", t.energy_proxy}};
  return j.dump(2);
}

std::string report_to_csv(const AttentionReport& report) {
  std::ostringstream os;
  os << "block,pe,mac,cycles,preload_cycles,energy_proxy\n";
  for (const auto& [name, s] : report.blocks) {
    os << name << ',' << s.pe_count << ',' << s.mac_count << ',' << s.cycles << ','
       << s.preload_cycles << ',' << s.energy_proxy << '\n';
  }
  return os.str();
}

}  // namespace intvit
