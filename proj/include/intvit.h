/*
 * intvit — integer-only ViT self-attention kernels with a systolic-array
 * dataflow simulator and a dequantize-first float oracle.
 *
 * C API over the C++ core: opaque handles, integer status codes, and strings
 * allocated by the library (release with intvit_string_free). All functions
 * that can fail return intvit_status; on failure intvit_last_error() holds a
 * thread-local human-readable message.
 */
#ifndef INTVIT_H
#define INTVIT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum intvit_status {
  INTVIT_OK = 0,
  INTVIT_ERR_INVALID_ARGUMENT = 1,
  INTVIT_ERR_DIM_MISMATCH = 2,
  INTVIT_ERR_OVERFLOW = 3,
  INTVIT_ERR_UNDERFLOW = 4,
  INTVIT_ERR_IO = 5,
  INTVIT_ERR_FORMAT = 6,
  INTVIT_ERR_NULL_POINTER = 7,
  INTVIT_ERR_INTERNAL = 8
} intvit_status;

typedef enum intvit_exp_mode {
  INTVIT_EXP_EXACT = 0,
  INTVIT_EXP_SHIFT = 1
} intvit_exp_mode;

const char* intvit_version(void);
const char* intvit_status_name(intvit_status status);
/* Message from the most recent failing call on this thread ("" if none). */
const char* intvit_last_error(void);

void intvit_string_free(char* s);

/* ---- tensors (.qt containers of int codes or float64 values) ---- */

typedef struct intvit_tensor intvit_tensor;

intvit_status intvit_tensor_from_codes(const int8_t* codes, uint32_t rows, uint32_t cols,
                                       int32_t nbit, const double* scales, size_t scale_count,
                                       intvit_tensor** out);
intvit_status intvit_tensor_from_floats(const double* values, uint32_t rows, uint32_t cols,
                                        intvit_tensor** out);
/* Codes uniform over [qmin, qmax] from the library PRNG (mt19937_64); scales
 * log-uniform over [0.01, 1], per channel when per_channel_scales != 0. */
intvit_status intvit_tensor_random_codes(uint64_t seed, uint32_t rows, uint32_t cols, int32_t nbit,
                                         int per_channel_scales, intvit_tensor** out);
void intvit_tensor_free(intvit_tensor* t);

/* kind: 0 = quantized codes, 1 = float64 */
intvit_status intvit_tensor_info(const intvit_tensor* t, int32_t* kind, uint32_t* rows,
                                 uint32_t* cols, int32_t* nbit);
intvit_status intvit_tensor_copy_codes(const intvit_tensor* t, int8_t* dst, size_t capacity);
intvit_status intvit_tensor_copy_floats(const intvit_tensor* t, double* dst, size_t capacity);
/* FNV-1a 64 of the payload bytes; 0 for a null handle. */
uint64_t intvit_tensor_checksum(const intvit_tensor* t);

intvit_status intvit_tensor_save(const intvit_tensor* t, const char* path);
intvit_status intvit_tensor_load(const char* path, intvit_tensor** out);

/* ---- quantizer primitives ---- */

/* Comparator references (k - 1/2) * scale, k = qmin+1 .. qmax. Writes
 * 2^nbit - 1 values; fails with DIM_MISMATCH when capacity is too small. */
intvit_status intvit_boundary_refs(int32_t nbit, double scale, double* out, size_t capacity,
                                   size_t* count);
/* qmin + number of references strictly below x. refs must be increasing. */
int32_t intvit_comparator_quantize(double x, const double* refs, size_t count, int32_t qmin);
/* Base-2 shift approximation of e^(combined_scale * acc); exact e^x when
 * mode is INTVIT_EXP_EXACT. */
intvit_status intvit_exp_shift(int64_t acc, double combined_scale, int32_t mode, double* out);

/* ---- seeded runs over one or more attention heads ---- */

typedef struct intvit_run_config {
  uint32_t tokens;     /* N  */
  uint32_t model_dim;  /* I  */
  uint32_t head_dim;   /* O (also the attention depth d_k) */
  uint32_t heads;
  int32_t nbit;
  uint64_t seed;
  int32_t exp_mode; /* intvit_exp_mode */
  int32_t simulate; /* run through the systolic pipeline instead of kernels */
} intvit_run_config;

void intvit_run_config_default(intvit_run_config* cfg);
/* Known presets: "deit-s" (tokens 198, model_dim 384, head_dim 64, heads 6). */
intvit_status intvit_run_config_preset(const char* name, intvit_run_config* cfg);

/* Per-block PE/MAC/cycle/energy report as JSON. cost_model_path may be NULL
 * (built-in nbit^2-per-MAC proxy). */
intvit_status intvit_stats_json(const intvit_run_config* cfg, const char* cost_model_path,
                                char** json_out);

typedef struct intvit_compare_result {
  double gap_vs_mean_oracle; /* reordered path vs mean-scale oracle */
  double gap_vs_eq1;         /* vs true channel-wise-scale oracle */
  double code_agreement;     /* head output codes, ties excluded */
  uint64_t codes_compared;
  uint64_t codes_excluded;
  double max_softmax_weight_dev; /* shift mode only, else 0 */
} intvit_compare_result;

intvit_status intvit_compare_run(const intvit_run_config* cfg, intvit_compare_result* out);

/* Runs every head on seeded inputs (or codes loaded from input_qt_path),
 * writes the stacked head outputs as a .qt record [heads, tokens, head_dim]
 * to output_qt_path, and returns the JSON run manifest. cost_model_path may
 * be NULL. */
intvit_status intvit_run_heads(const intvit_run_config* cfg, const char* input_qt_path,
                               const char* cost_model_path, const char* output_qt_path,
                               char** manifest_json_out);

#ifdef __cplusplus
}
#endif

#endif /* INTVIT_H */
