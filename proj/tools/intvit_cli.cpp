// Command-line front end for the intvit library. Talks to the core strictly
// through the C API in intvit.h.

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "intvit.h"
#include "json.hpp"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitTolerance = 1;
constexpr int kExitUsage = 2;

constexpr double kLinearGapTolerance = 1e-9;

struct CommonOpts {
  std::string preset;
  std::uint32_t tokens = 8;
  std::uint32_t model_dim = 16;
  std::uint32_t head_dim = 8;
  std::uint32_t heads = 1;
  int nbit = 3;
  std::uint64_t seed = 0;
  std::string exp_mode = "exact";
  std::string cost_model;
  std::string out_path;
  std::string report_format = "json";
};

void add_geometry_flags(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--preset", o.preset, "configuration preset")
      ->check(CLI::IsMember({"deit-s"}));
  cmd->add_option("-N,--tokens", o.tokens, "token count");
  cmd->add_option("-I,--dim", o.model_dim, "model (input) dimension");
  cmd->add_option("-O,--head-dim", o.head_dim, "head dimension");
  cmd->add_option("--heads", o.heads, "number of heads");
  cmd->add_option("--nbit", o.nbit, "operand bit width")->check(CLI::IsMember({2, 3}));
  cmd->add_option("--seed", o.seed, "PRNG seed");
}

intvit_run_config make_config(const CommonOpts& o, bool simulate) {
  intvit_run_config cfg;
  intvit_run_config_default(&cfg);
  cfg.tokens = o.tokens;
  cfg.model_dim = o.model_dim;
  cfg.head_dim = o.head_dim;
  cfg.heads = o.heads;
  cfg.nbit = o.nbit;
  cfg.seed = o.seed;
  cfg.exp_mode = o.exp_mode == "shift" ? INTVIT_EXP_SHIFT : INTVIT_EXP_EXACT;
  cfg.simulate = simulate ? 1 : 0;
  if (!o.preset.empty()) {
    if (intvit_run_config_preset(o.preset.c_str(), &cfg) != INTVIT_OK) {
      std::cerr << "error: " << intvit_last_error() << "\n";
      std::exit(kExitUsage);
    }
  }
  return cfg;
}

int fail(intvit_status status) {
  std::cerr << "error (" << intvit_status_name(status) << "): " << intvit_last_error() << "\n";
  return kExitUsage;
}

void write_or_print(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text << "\n";
    return;
  }
  std::ofstream os(out_path);
  os << text << "\n";
  if (!os) {
    std::cerr << "error: cannot write " << out_path << "\n";
    std::exit(kExitUsage);
  }
}

std::string report_csv(const json& report) {
  std::string csv = "block,pe,mac,cycles,preload_cycles,energy_proxy\n";
  for (const auto& b : report.at("blocks")) {
    csv += b.at("block").get<std::string>();
    csv += ',' + std::to_string(b.at("pe").get<std::uint64_t>());
    csv += ',' + std::to_string(b.at("mac").get<std::uint64_t>());
    csv += ',' + std::to_string(b.at("cycles").get<std::uint64_t>());
    csv += ',' + std::to_string(b.at("preload_cycles").get<std::uint64_t>());
    csv += ',' + std::to_string(b.at("energy_proxy").get<double>());
    csv += '\n';
  }
  return csv;
}

int cmd_stats(const CommonOpts& o) {
  const intvit_run_config cfg = make_config(o, false);
  char* out = nullptr;
  const intvit_status st =
      intvit_stats_json(&cfg, o.cost_model.empty() ? nullptr : o.cost_model.c_str(), &out);
  if (st != INTVIT_OK) return fail(st);
  const json report = json::parse(out);
  intvit_string_free(out);

  std::printf("%-20s %10s %12s %10s %14s\n", "block", "pe", "mac", "cycles", "energy_proxy");
  for (const auto& b : report.at("blocks")) {
    std::printf("%-20s %10" PRIu64 " %12" PRIu64 " %10" PRIu64 " %14.1f\n",
                b.at("block").get<std::string>().c_str(), b.at("pe").get<std::uint64_t>(),
                b.at("mac").get<std::uint64_t>(), b.at("cycles").get<std::uint64_t>(),
                b.at("energy_proxy").get<double>());
  }
  const auto& t = report.at("totals");
  std::printf("%-20s %10" PRIu64 " %12" PRIu64 " %10" PRIu64 " %14.1f\n", "total",
              t.at("pe").get<std::uint64_t>(), t.at("mac").get<std::uint64_t>(),
              t.at("cycles").get<std::uint64_t>(), t.at("energy_proxy").get<double>());

  if (o.report_format == "csv")
    write_or_print(report_csv(report), o.out_path);
  else
    write_or_print(report.dump(2), o.out_path);
  return kExitOk;
}

int cmd_compare(const CommonOpts& o, double min_agree) {
  const intvit_run_config cfg = make_config(o, false);
  intvit_compare_result res;
  const intvit_status st = intvit_compare_run(&cfg, &res);
  if (st != INTVIT_OK) return fail(st);

  std::printf("linear gap vs mean-scale oracle: %.3e (tolerance %.1e)\n", res.gap_vs_mean_oracle,
              kLinearGapTolerance);
  std::printf("linear gap vs channel-wise oracle: %.3e (reported)\n", res.gap_vs_eq1);
  std::printf("attention code agreement: %.6f (compared %" PRIu64 ", excluded %" PRIu64
              ", required %.6f)\n",
              res.code_agreement, res.codes_compared, res.codes_excluded, min_agree);
  if (cfg.exp_mode == INTVIT_EXP_SHIFT)
    std::printf("max softmax weight deviation: %.6f\n", res.max_softmax_weight_dev);

  const bool ok = res.gap_vs_mean_oracle <= kLinearGapTolerance && res.code_agreement >= min_agree;
  std::printf("%s\n", ok ? "PASS" : "FAIL");

  if (!o.out_path.empty()) {
    json j = {{"command", "compare"},
              {"gap_vs_mean_oracle", res.gap_vs_mean_oracle},
              {"gap_vs_eq1", res.gap_vs_eq1},
              {"code_agreement", res.code_agreement},
              {"codes_compared", res.codes_compared},
              {"codes_excluded", res.codes_excluded},
              {"max_softmax_weight_dev", res.max_softmax_weight_dev},
              {"min_agree", min_agree},
              {"pass", ok}};
    write_or_print(j.dump(2), o.out_path);
  }
  return ok ? kExitOk : kExitTolerance;
}

int cmd_run(const CommonOpts& o, const std::string& input_path, bool simulate) {
  const intvit_run_config cfg = make_config(o, simulate);
  char* manifest = nullptr;
  const intvit_status st = intvit_run_heads(
      &cfg, input_path.empty() ? nullptr : input_path.c_str(),
      o.cost_model.empty() ? nullptr : o.cost_model.c_str(), o.out_path.c_str(), &manifest);
  if (st != INTVIT_OK) return fail(st);

  const std::string manifest_path = o.out_path + ".manifest.json";
  std::ofstream os(manifest_path);
  os << manifest << "\n";
  if (!os) {
    std::cerr << "error: cannot write " << manifest_path << "\n";
    intvit_string_free(manifest);
    return kExitUsage;
  }
  std::cout << manifest << "\n";
  intvit_string_free(manifest);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"integer-only ViT self-attention kernels and systolic dataflow simulator"};
  app.require_subcommand(1);

  CommonOpts stats_opts;
  stats_opts.tokens = 198;
  stats_opts.model_dim = 384;
  stats_opts.head_dim = 64;
  stats_opts.heads = 6;
  CLI::App* stats = app.add_subcommand("stats", "per-block PE/MAC/cycle accounting");
  add_geometry_flags(stats, stats_opts);
  stats->add_option("--cost-model", stats_opts.cost_model, "cost model file")
      ->envname("INTVIT_COST_MODEL");
  stats->add_option("--out", stats_opts.out_path, "report destination (default stdout)");
  stats->add_option("--report", stats_opts.report_format, "report format")
      ->check(CLI::IsMember({"json", "csv"}));

  CommonOpts cmp_opts;
  double min_agree = 1.0;
  CLI::App* cmp = app.add_subcommand("compare", "integer path vs float oracle");
  add_geometry_flags(cmp, cmp_opts);
  cmp->add_option("--exp", cmp_opts.exp_mode, "exponential mode")
      ->check(CLI::IsMember({"exact", "shift"}));
  cmp->add_option("--min-agree", min_agree, "required code agreement rate");
  cmp->add_option("--out", cmp_opts.out_path, "write comparison JSON here");

  CommonOpts run_opts;
  std::string input_path;
  bool simulate = false;
  CLI::App* run = app.add_subcommand("run", "run heads and write .qt outputs");
  add_geometry_flags(run, run_opts);
  run->add_option("--exp", run_opts.exp_mode, "exponential mode")
      ->check(CLI::IsMember({"exact", "shift"}));
  run->add_option("--in", input_path, "input activation .qt file");
  run->add_option("--out", run_opts.out_path, "output .qt path")->required();
  run->add_option("--cost-model", run_opts.cost_model, "cost model file")
      ->envname("INTVIT_COST_MODEL");
  run->add_flag("--simulate", simulate, "run through the systolic pipeline");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  if (stats->parsed()) return cmd_stats(stats_opts);
  if (cmp->parsed()) return cmd_compare(cmp_opts, min_agree);
  if (run->parsed()) return cmd_run(run_opts, input_path, simulate);
  return kExitUsage;
}
