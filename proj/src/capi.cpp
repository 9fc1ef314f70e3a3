#include "intvit.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "intvit/compare.hpp"
#include "intvit/io.hpp"
#include "intvit/rng.hpp"
#include "intvit/systolic.hpp"
#include "json.hpp"

using nlohmann::json;

namespace {

thread_local std::string g_last_error;

intvit_status to_status(intvit::errc c) { return static_cast<intvit_status>(static_cast<int>(c)); }

template <typename Fn>
intvit_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return INTVIT_OK;
  } catch (const intvit::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return INTVIT_ERR_INTERNAL;
  }
}

intvit_status null_arg(const char* name) {
  g_last_error = std::string(name) + " must not be null";
  return INTVIT_ERR_NULL_POINTER;
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void validate_config(const intvit_run_config& cfg) {
  if (cfg.tokens < 1 || cfg.model_dim < 1 || cfg.head_dim < 1 || cfg.heads < 1)
    intvit::raise(intvit::errc::invalid_argument, "config dims must be >= 1");
  if (cfg.nbit < 2 || cfg.nbit > 8)
    intvit::raise(intvit::errc::invalid_argument, "nbit must be in [2, 8]");
  if (cfg.exp_mode != INTVIT_EXP_EXACT && cfg.exp_mode != INTVIT_EXP_SHIFT)
    intvit::raise(intvit::errc::invalid_argument, "unknown exp mode");
}

intvit::ExpMode exp_mode_of(const intvit_run_config& cfg) {
  return cfg.exp_mode == INTVIT_EXP_SHIFT ? intvit::ExpMode::shift_approx
                                          : intvit::ExpMode::exact;
}

intvit::CostModel cost_model_of(const char* path, int nbit) {
  if (path == nullptr || *path == '\0') return intvit::CostModel::defaults(nbit);
  return intvit::CostModel::from_file(path, nbit);
}

json config_json(const intvit_run_config& cfg) {
  return json{{"tokens", cfg.tokens},     {"model_dim", cfg.model_dim},
              {"head_dim", cfg.head_dim}, {"heads", cfg.heads},
              {"nbit", cfg.nbit},         {"seed", cfg.seed},
              {"exp_mode", cfg.exp_mode == INTVIT_EXP_SHIFT ? "shift" : "exact"},
              {"simulate", cfg.simulate != 0}};
}

}  // namespace

struct intvit_tensor {
  int kind = 0;  // 0 codes, 1 float
  intvit::QuantTensor q;
  intvit::FloatTensor f;
};

extern "C" {

const char* intvit_version(void) { return "0.1.0"; }

const char* intvit_status_name(intvit_status status) {
  switch (status) {
    case INTVIT_OK: return "ok";
    case INTVIT_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case INTVIT_ERR_DIM_MISMATCH: return "dim_mismatch";
    case INTVIT_ERR_OVERFLOW: return "overflow";
    case INTVIT_ERR_UNDERFLOW: return "underflow";
    case INTVIT_ERR_IO: return "io";
    case INTVIT_ERR_FORMAT: return "format";
    case INTVIT_ERR_NULL_POINTER: return "null_pointer";
    case INTVIT_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* intvit_last_error(void) { return g_last_error.c_str(); }

void intvit_string_free(char* s) { delete[] s; }

intvit_status intvit_tensor_from_codes(const int8_t* codes, uint32_t rows, uint32_t cols,
                                       int32_t nbit, const double* scales, size_t scale_count,
                                       intvit_tensor** out) {
  if (!codes) return null_arg("codes");
  if (!scales) return null_arg("scales");
  if (!out) return null_arg("out");
  return guarded([&] {
    intvit::QuantParams params;
    params.nbit = nbit;
    params.scales.assign(scales, scales + scale_count);
    params.per_channel = scale_count > 1;
    intvit::QuantTensor t(rows, cols, params);
    std::memcpy(t.codes.data(), codes, t.codes.size());
    t.validate();
    auto* h = new intvit_tensor;
    h->kind = 0;
    h->q = std::move(t);
    *out = h;
  });
}

intvit_status intvit_tensor_from_floats(const double* values, uint32_t rows, uint32_t cols,
                                        intvit_tensor** out) {
  if (!values) return null_arg("values");
  if (!out) return null_arg("out");
  return guarded([&] {
    intvit::FloatTensor t(rows, cols);
    std::memcpy(t.values.data(), values, t.values.size() * sizeof(double));
    for (double v : t.values) {
      if (!std::isfinite(v)) intvit::raise(intvit::errc::invalid_argument, "non-finite entry");
    }
    auto* h = new intvit_tensor;
    h->kind = 1;
    h->f = std::move(t);
    *out = h;
  });
}

intvit_status intvit_tensor_random_codes(uint64_t seed, uint32_t rows, uint32_t cols, int32_t nbit,
                                         int per_channel_scales, intvit_tensor** out) {
  if (!out) return null_arg("out");
  return guarded([&] {
    if (rows < 1 || cols < 1) intvit::raise(intvit::errc::invalid_argument, "empty tensor");
    intvit::QuantTensor t =
        intvit::make_random_input(seed, rows, cols, nbit);
    if (!per_channel_scales) {
      // Same draw order, one scale instead of a channel vector.
      intvit::Rng rng(intvit::Rng::derive_seed(seed, 1));
      for (std::size_t i = 0; i < t.codes.size(); ++i) rng.next_u64();
      t.params = intvit::QuantParams::scalar(nbit, rng.next_log_uniform(0.01, 1.0));
    }
    auto* h = new intvit_tensor;
    h->kind = 0;
    h->q = std::move(t);
    *out = h;
  });
}

void intvit_tensor_free(intvit_tensor* t) { delete t; }

intvit_status intvit_tensor_info(const intvit_tensor* t, int32_t* kind, uint32_t* rows,
                                 uint32_t* cols, int32_t* nbit) {
  if (!t) return null_arg("tensor");
  return guarded([&] {
    if (kind) *kind = t->kind;
    if (rows) *rows = static_cast<uint32_t>(t->kind == 0 ? t->q.rows : t->f.rows);
    if (cols) *cols = static_cast<uint32_t>(t->kind == 0 ? t->q.cols : t->f.cols);
    if (nbit) *nbit = t->kind == 0 ? t->q.params.nbit : 0;
  });
}

intvit_status intvit_tensor_copy_codes(const intvit_tensor* t, int8_t* dst, size_t capacity) {
  if (!t) return null_arg("tensor");
  if (!dst) return null_arg("dst");
  return guarded([&] {
    if (t->kind != 0) intvit::raise(intvit::errc::invalid_argument, "not a code tensor");
    if (capacity < t->q.codes.size())
      intvit::raise(intvit::errc::dim_mismatch, "destination too small");
    std::memcpy(dst, t->q.codes.data(), t->q.codes.size());
  });
}

intvit_status intvit_tensor_copy_floats(const intvit_tensor* t, double* dst, size_t capacity) {
  if (!t) return null_arg("tensor");
  if (!dst) return null_arg("dst");
  return guarded([&] {
    if (t->kind != 1) intvit::raise(intvit::errc::invalid_argument, "not a float tensor");
    if (capacity < t->f.values.size())
      intvit::raise(intvit::errc::dim_mismatch, "destination too small");
    std::memcpy(dst, t->f.values.data(), t->f.values.size() * sizeof(double));
  });
}

uint64_t intvit_tensor_checksum(const intvit_tensor* t) {
  if (!t) return 0;
  if (t->kind == 0) return intvit::fnv1a64(t->q.codes.data(), t->q.codes.size());
  return intvit::fnv1a64(t->f.values.data(), t->f.values.size() * sizeof(double));
}

intvit_status intvit_tensor_save(const intvit_tensor* t, const char* path) {
  if (!t) return null_arg("tensor");
  if (!path) return null_arg("path");
  return guarded([&] {
    if (t->kind == 0)
      intvit::save_quant(path, t->q);
    else
      intvit::save_qt(path, intvit::QtRecord::from_float(t->f));
  });
}

intvit_status intvit_tensor_load(const char* path, intvit_tensor** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] {
    const intvit::QtRecord rec = intvit::load_qt(path);
    auto* h = new intvit_tensor;
    if (rec.kind == 0) {
      h->kind = 0;
      h->q = rec.to_quant();
    } else {
      h->kind = 1;
      h->f = rec.to_float();
    }
    *out = h;
  });
}

intvit_status intvit_boundary_refs(int32_t nbit, double scale, double* out, size_t capacity,
                                   size_t* count) {
  if (!out) return null_arg("out");
  return guarded([&] {
    const std::vector<double> refs = intvit::boundary_refs(nbit, scale);
    if (capacity < refs.size())
      intvit::raise(intvit::errc::dim_mismatch, "capacity below " + std::to_string(refs.size()));
    std::memcpy(out, refs.data(), refs.size() * sizeof(double));
    if (count) *count = refs.size();
  });
}

int32_t intvit_comparator_quantize(double x, const double* refs, size_t count, int32_t qmin) {
  if (!refs && count > 0) return qmin;
  return intvit::comparator_quantize(x, {refs, count}, qmin);
}

intvit_status intvit_exp_shift(int64_t acc, double combined_scale, int32_t mode, double* out) {
  if (!out) return null_arg("out");
  return guarded([&] {
    const auto m =
        mode == INTVIT_EXP_SHIFT ? intvit::ExpMode::shift_approx : intvit::ExpMode::exact;
    *out = intvit::exp_shift(acc, combined_scale, m);
  });
}

void intvit_run_config_default(intvit_run_config* cfg) {
  if (!cfg) return;
  cfg->tokens = 8;
  cfg->model_dim = 16;
  cfg->head_dim = 8;
  cfg->heads = 1;
  cfg->nbit = 3;
  cfg->seed = 0;
  cfg->exp_mode = INTVIT_EXP_EXACT;
  cfg->simulate = 0;
}

intvit_status intvit_run_config_preset(const char* name, intvit_run_config* cfg) {
  if (!name) return null_arg("name");
  if (!cfg) return null_arg("cfg");
  return guarded([&] {
    if (std::string(name) != "deit-s")
      intvit::raise(intvit::errc::invalid_argument, std::string("unknown preset `") + name + "`");
    cfg->tokens = 198;
    cfg->model_dim = 384;
    cfg->head_dim = 64;
    cfg->heads = 6;
  });
}

intvit_status intvit_stats_json(const intvit_run_config* cfg, const char* cost_model_path,
                                char** json_out) {
  if (!cfg) return null_arg("cfg");
  if (!json_out) return null_arg("json_out");
  return guarded([&] {
    validate_config(*cfg);
    const intvit::CostModel cm = cost_model_of(cost_model_path, cfg->nbit);
    const intvit::AttentionReport report = intvit::full_report(
        cfg->tokens, cfg->model_dim, cfg->head_dim, cfg->nbit, cfg->seed, exp_mode_of(*cfg), cm);
    *json_out = dup_string(intvit::report_to_json(report, cm));
  });
}

intvit_status intvit_compare_run(const intvit_run_config* cfg, intvit_compare_result* out) {
  if (!cfg) return null_arg("cfg");
  if (!out) return null_arg("out");
  return guarded([&] {
    validate_config(*cfg);
    const intvit::CompareResult r =
        intvit::compare_run(cfg->seed, cfg->tokens, cfg->model_dim, cfg->head_dim, cfg->heads,
                            cfg->nbit, exp_mode_of(*cfg));
    out->gap_vs_mean_oracle = r.gap_vs_mean_oracle;
    out->gap_vs_eq1 = r.gap_vs_eq1;
    out->code_agreement = r.code_agreement;
    out->codes_compared = r.codes_compared;
    out->codes_excluded = r.codes_excluded;
    out->max_softmax_weight_dev = r.max_softmax_weight_dev;
  });
}

intvit_status intvit_run_heads(const intvit_run_config* cfg, const char* input_qt_path,
                               const char* cost_model_path, const char* output_qt_path,
                               char** manifest_json_out) {
  if (!cfg) return null_arg("cfg");
  if (!output_qt_path) return null_arg("output_qt_path");
  if (!manifest_json_out) return null_arg("manifest_json_out");
  return guarded([&] {
    validate_config(*cfg);
    const intvit::CostModel cm = cost_model_of(cost_model_path, cfg->nbit);

    intvit::QuantTensor xq;
    if (input_qt_path && *input_qt_path) {
      xq = intvit::load_quant(input_qt_path);
      if (xq.rows != cfg->tokens || xq.cols != cfg->model_dim)
        intvit::raise(intvit::errc::dim_mismatch,
                      "input tensor is " + std::to_string(xq.rows) + "x" +
                          std::to_string(xq.cols) + ", config expects " +
                          std::to_string(cfg->tokens) + "x" + std::to_string(cfg->model_dim));
      if (xq.params.nbit != cfg->nbit)
        intvit::raise(intvit::errc::invalid_argument, "input nbit does not match config");
    } else {
      xq = intvit::make_random_input(cfg->seed, cfg->tokens, cfg->model_dim, cfg->nbit);
    }

    std::ofstream os(output_qt_path, std::ios::binary);
    if (!os) intvit::raise(intvit::errc::io, std::string("cannot open ") + output_qt_path);

    json head_checksums = json::array();
    json blocks_json;
    std::uint64_t per_head_cycles = 0;
    double per_head_energy = 0.0;
    for (std::uint32_t h = 0; h < cfg->heads; ++h) {
      const intvit::HeadParams params =
          intvit::make_random_head(cfg->seed, h, cfg->tokens, cfg->model_dim, cfg->head_dim,
                                   cfg->nbit, exp_mode_of(*cfg));
      intvit::QuantTensor out_codes;
      intvit::AttentionReport report;
      if (cfg->simulate) {
        intvit::HeadSim sim = intvit::run_head_simulated(xq, params, cm);
        out_codes = std::move(sim.output);
        report = std::move(sim.report);
      } else {
        out_codes = intvit::run_head_kernel(xq, params);
        report = intvit::accounting_report(cfg->tokens, cfg->model_dim, cfg->head_dim, cfg->nbit,
                                           cm);
      }
      report.seed = cfg->seed;
      intvit::write_record(os, intvit::QtRecord::from_quant(out_codes));
      head_checksums.push_back(
          hex64(intvit::fnv1a64(out_codes.codes.data(), out_codes.codes.size())));
      if (h == 0) {
        const intvit::BlockStats totals = report.totals();
        per_head_cycles = totals.cycles;
        per_head_energy = totals.energy_proxy;
        blocks_json = json::array();
        for (const auto& [name, s] : report.blocks) {
          blocks_json.push_back({{"block", name},
                                 {"pe", s.pe_count},
                                 {"mac", s.mac_count},
                                 {"cycles", s.cycles},
                                 {"preload_cycles", s.preload_cycles},
                                 {"energy_proxy", s.energy_proxy}});
        }
      }
    }
    os.close();
    if (!os) intvit::raise(intvit::errc::io, "write failed");

    json manifest;
    manifest["command"] = "run";
    manifest["config"] = config_json(*cfg);
    manifest["prng"] = intvit::Rng::name();
    manifest["input"] = {
        {"source", input_qt_path && *input_qt_path ? input_qt_path : "generated"},
        {"tokens", xq.rows},
        {"model_dim", xq.cols},
        {"checksum", hex64(intvit::fnv1a64(xq.codes.data(), xq.codes.size()))}};
    manifest["output"] = {{"path", output_qt_path},
                          {"records", cfg->heads},
                          {"dims", {cfg->heads, cfg->tokens, cfg->head_dim}},
                          {"checksum", hex64(intvit::file_checksum(output_qt_path))},
                          {"head_checksums", head_checksums}};
    manifest["cycles"] = {{"per_head", per_head_cycles},
                          {"total", per_head_cycles * cfg->heads}};
    manifest["energy_proxy"] = {{"per_head", per_head_energy},
                                {"total", per_head_energy * cfg->heads}};
    manifest["blocks"] = blocks_json;
    *manifest_json_out = dup_string(manifest.dump(2));
  });
}

}  // extern "C"
