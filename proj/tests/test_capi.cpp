#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "intvit.h"
#include "json.hpp"

TEST_SUITE("capi") {

TEST_CASE("version and status names") {
  CHECK(std::string(intvit_version()) == "0.1.0");
  CHECK(std::string(intvit_status_name(INTVIT_OK)) == "ok");
  CHECK(std::string(intvit_status_name(INTVIT_ERR_FORMAT)) == "format");
}

TEST_CASE("tensor create, inspect, and copy out") {
  const std::vector<int8_t> codes = {1, -2, 3, 0, -4, 2};
  const double scale = 0.5;
  intvit_tensor* t = nullptr;
  REQUIRE(intvit_tensor_from_codes(codes.data(), 2, 3, 3, &scale, 1, &t) == INTVIT_OK);
  int32_t kind = -1, nbit = -1;
  uint32_t rows = 0, cols = 0;
  REQUIRE(intvit_tensor_info(t, &kind, &rows, &cols, &nbit) == INTVIT_OK);
  CHECK(kind == 0);
  CHECK(rows == 2);
  CHECK(cols == 3);
  CHECK(nbit == 3);
  std::vector<int8_t> back(6);
  REQUIRE(intvit_tensor_copy_codes(t, back.data(), back.size()) == INTVIT_OK);
  CHECK(back == codes);
  CHECK(intvit_tensor_checksum(t) != 0);
  intvit_tensor_free(t);
}

TEST_CASE("null arguments are rejected with a message") {
  CHECK(intvit_tensor_from_codes(nullptr, 1, 1, 3, nullptr, 1, nullptr) ==
        INTVIT_ERR_NULL_POINTER);
  CHECK(std::string(intvit_last_error()).find("null") != std::string::npos);
}

TEST_CASE("out-of-range codes are rejected") {
  const std::vector<int8_t> codes = {7};  // outside 3-bit range
  const double scale = 1.0;
  intvit_tensor* t = nullptr;
  CHECK(intvit_tensor_from_codes(codes.data(), 1, 1, 3, &scale, 1, &t) ==
        INTVIT_ERR_INVALID_ARGUMENT);
}

TEST_CASE("save and load through the C surface") {
  intvit_tensor* t = nullptr;
  REQUIRE(intvit_tensor_random_codes(99, 4, 5, 3, 1, &t) == INTVIT_OK);
  const std::string path = testutil::temp_path("capi.qt");
  REQUIRE(intvit_tensor_save(t, path.c_str()) == INTVIT_OK);
  intvit_tensor* back = nullptr;
  REQUIRE(intvit_tensor_load(path.c_str(), &back) == INTVIT_OK);
  CHECK(intvit_tensor_checksum(back) == intvit_tensor_checksum(t));
  intvit_tensor_free(t);
  intvit_tensor_free(back);
}

TEST_CASE("random code generation is deterministic in the seed") {
  intvit_tensor* a = nullptr;
  intvit_tensor* b = nullptr;
  intvit_tensor* c = nullptr;
  REQUIRE(intvit_tensor_random_codes(5, 6, 6, 3, 1, &a) == INTVIT_OK);
  REQUIRE(intvit_tensor_random_codes(5, 6, 6, 3, 1, &b) == INTVIT_OK);
  REQUIRE(intvit_tensor_random_codes(6, 6, 6, 3, 1, &c) == INTVIT_OK);
  CHECK(intvit_tensor_checksum(a) == intvit_tensor_checksum(b));
  CHECK(intvit_tensor_checksum(a) != intvit_tensor_checksum(c));
  intvit_tensor_free(a);
  intvit_tensor_free(b);
  intvit_tensor_free(c);
}

TEST_CASE("malformed files surface format errors with offsets") {
  const std::string path = testutil::temp_path("capi_bad.qt");
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("NOPE", f);
    std::fclose(f);
  }
  intvit_tensor* t = nullptr;
  CHECK(intvit_tensor_load(path.c_str(), &t) == INTVIT_ERR_FORMAT);
  CHECK(std::string(intvit_last_error()).find("offset") != std::string::npos);
}

TEST_CASE("boundary refs fill a caller buffer") {
  double refs[7];
  size_t count = 0;
  REQUIRE(intvit_boundary_refs(3, 1.0, refs, 7, &count) == INTVIT_OK);
  REQUIRE(count == 7);
  CHECK(refs[0] == -3.5);
  CHECK(refs[6] == 2.5);
  CHECK(intvit_boundary_refs(3, 1.0, refs, 3, &count) == INTVIT_ERR_DIM_MISMATCH);
  CHECK(intvit_comparator_quantize(0.6, refs, 7, -4) == 1);
}

TEST_CASE("exp shift through the C surface") {
  double out = 0.0;
  REQUIRE(intvit_exp_shift(0, 0.5, INTVIT_EXP_SHIFT, &out) == INTVIT_OK);
  CHECK(out == 1.0);
  REQUIRE(intvit_exp_shift(4, 0.25, INTVIT_EXP_EXACT, &out) == INTVIT_OK);
  CHECK(out == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
}

TEST_CASE("preset fills the deit-s geometry") {
  intvit_run_config cfg;
  intvit_run_config_default(&cfg);
  REQUIRE(intvit_run_config_preset("deit-s", &cfg) == INTVIT_OK);
  CHECK(cfg.tokens == 198);
  CHECK(cfg.model_dim == 384);
  CHECK(cfg.head_dim == 64);
  CHECK(cfg.heads == 6);
  CHECK(intvit_run_config_preset("bogus", &cfg) == INTVIT_ERR_INVALID_ARGUMENT);
}

TEST_CASE("stats json carries the published counts") {
  intvit_run_config cfg;
  intvit_run_config_default(&cfg);
  REQUIRE(intvit_run_config_preset("deit-s", &cfg) == INTVIT_OK);
  char* out = nullptr;
  REQUIRE(intvit_stats_json(&cfg, nullptr, &out) == INTVIT_OK);
  const auto j = nlohmann::json::parse(out);
  intvit_string_free(out);
  REQUIRE(j.at("blocks").size() == 10);
  CHECK(j.at("blocks")[0].at("pe") == 24576);
  CHECK(j.at("blocks")[0].at("mac") == 4866048);
  CHECK(j.at("blocks")[8].at("pe") == 39204);
  CHECK(j.at("prng") == "mt19937_64");
}

TEST_CASE("compare run reports a tiny gap and full agreement in exact mode") {
  intvit_run_config cfg;
  intvit_run_config_default(&cfg);
  cfg.seed = 42;
  intvit_compare_result res;
  REQUIRE(intvit_compare_run(&cfg, &res) == INTVIT_OK);
  CHECK(res.gap_vs_mean_oracle <= 1e-9);
  CHECK(res.code_agreement == 1.0);
  CHECK(res.codes_compared > 0);
  CHECK(res.max_softmax_weight_dev == 0.0);
}

TEST_CASE("run writes deterministic outputs and a parsable manifest") {
  intvit_run_config cfg;
  intvit_run_config_default(&cfg);
  cfg.heads = 2;
  cfg.seed = 33;
  const std::string out1 = testutil::temp_path("capi_run1.qt");
  const std::string out2 = testutil::temp_path("capi_run2.qt");
  char* m1 = nullptr;
  char* m2 = nullptr;
  REQUIRE(intvit_run_heads(&cfg, nullptr, nullptr, out1.c_str(), &m1) == INTVIT_OK);
  REQUIRE(intvit_run_heads(&cfg, nullptr, nullptr, out2.c_str(), &m2) == INTVIT_OK);
  const auto j1 = nlohmann::json::parse(m1);
  const auto j2 = nlohmann::json::parse(m2);
  intvit_string_free(m1);
  intvit_string_free(m2);
  CHECK(j1.at("output").at("checksum") == j2.at("output").at("checksum"));
  CHECK(j1.at("output").at("head_checksums").size() == 2);
  CHECK(j1.at("cycles").at("total").get<std::uint64_t>() ==
        2 * j1.at("cycles").at("per_head").get<std::uint64_t>());
  CHECK(j1.at("prng") == "mt19937_64");
  CHECK(j1.at("input").at("source") == "generated");
}

TEST_CASE("run with a mismatched input tensor fails cleanly") {
  intvit_tensor* t = nullptr;
  REQUIRE(intvit_tensor_random_codes(1, 3, 4, 3, 1, &t) == INTVIT_OK);
  const std::string in = testutil::temp_path("capi_in.qt");
  REQUIRE(intvit_tensor_save(t, in.c_str()) == INTVIT_OK);
  intvit_tensor_free(t);

  intvit_run_config cfg;
  intvit_run_config_default(&cfg);  // expects 8 x 16
  char* manifest = nullptr;
  const std::string out = testutil::temp_path("capi_run3.qt");
  CHECK(intvit_run_heads(&cfg, in.c_str(), nullptr, out.c_str(), &manifest) ==
        INTVIT_ERR_DIM_MISMATCH);
}

TEST_CASE("kernel and simulated runs agree") {
  intvit_run_config cfg;
  intvit_run_config_default(&cfg);
  cfg.seed = 77;
  const std::string out1 = testutil::temp_path("capi_k.qt");
  const std::string out2 = testutil::temp_path("capi_s.qt");
  char* m1 = nullptr;
  char* m2 = nullptr;
  REQUIRE(intvit_run_heads(&cfg, nullptr, nullptr, out1.c_str(), &m1) == INTVIT_OK);
  cfg.simulate = 1;
  REQUIRE(intvit_run_heads(&cfg, nullptr, nullptr, out2.c_str(), &m2) == INTVIT_OK);
  const auto j1 = nlohmann::json::parse(m1);
  const auto j2 = nlohmann::json::parse(m2);
  intvit_string_free(m1);
  intvit_string_free(m2);
  CHECK(j1.at("output").at("head_checksums") == j2.at("output").at("head_checksums"));
  CHECK(j1.at("cycles") == j2.at("cycles"));
}

}  // TEST_SUITE
