#ifndef INTVIT_TEST_HELPERS_HPP
#define INTVIT_TEST_HELPERS_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "intvit/quant.hpp"
#include "intvit/rng.hpp"

namespace testutil {

inline intvit::FloatTensor random_float_tensor(intvit::Rng& rng, std::size_t rows,
                                               std::size_t cols, double lo, double hi) {
  intvit::FloatTensor t(rows, cols);
  for (auto& v : t.values) v = rng.next_uniform(lo, hi);
  return t;
}

inline intvit::QuantTensor random_codes(intvit::Rng& rng, std::size_t rows, std::size_t cols,
                                        intvit::QuantParams params) {
  intvit::QuantTensor t(rows, cols, std::move(params));
  const int lo = t.params.qmin(), hi = t.params.qmax();
  for (auto& c : t.codes) c = static_cast<std::int8_t>(rng.next_int(lo, hi));
  return t;
}

inline std::vector<double> random_scales(intvit::Rng& rng, std::size_t n, double lo = 0.01,
                                         double hi = 1.0) {
  std::vector<double> s(n);
  for (auto& v : s) v = rng.next_log_uniform(lo, hi);
  return s;
}

// Independent triple-loop oracle for A (MxD) . B^T with B given as NxD.
inline std::vector<std::int64_t> matmul_abt_oracle(const intvit::QuantTensor& a,
                                                   const intvit::QuantTensor& b) {
  std::vector<std::int64_t> out(a.rows * b.rows, 0);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.rows; ++j)
      for (std::size_t d = 0; d < a.cols; ++d)
        out[i * b.rows + j] += std::int64_t(a.at(i, d)) * b.at(j, d);
  return out;
}

// A (MxK) . B (KxC).
inline std::vector<std::int64_t> matmul_ab_oracle(const intvit::QuantTensor& a,
                                                  const intvit::QuantTensor& b) {
  std::vector<std::int64_t> out(a.rows * b.cols, 0);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t c = 0; c < b.cols; ++c)
      for (std::size_t k = 0; k < a.cols; ++k)
        out[i * b.cols + c] += std::int64_t(a.at(i, k)) * b.at(k, c);
  return out;
}

// Scratch file path in the build dir, unique per tag.
inline std::string temp_path(const std::string& tag) {
  return (std::filesystem::temp_directory_path() / ("intvit_test_" + tag)).string();
}

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

inline CommandResult run_command(const std::string& cmd) {
  CommandResult res;
  FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
  if (!pipe) return res;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) res.output.append(buf, n);
  const int status = pclose(pipe);
  res.exit_code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
  return res;
}

}  // namespace testutil

#endif
