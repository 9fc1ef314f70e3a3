#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "intvit/quant.hpp"

using namespace intvit;

namespace {

// Independent oracle: smallest code whose half-open step interval
// ((k - 1/2) d, (k + 1/2) d] contains x, clamped to the representable range.
int interval_scan_code(double x, int nbit, double delta) {
  const int qmin = -(1 << (nbit - 1));
  const int qmax = (1 << (nbit - 1)) - 1;
  if (x <= (qmin + 0.5) * delta) return qmin;
  if (x > (qmax - 0.5) * delta) return qmax;
  for (int k = qmin + 1; k <= qmax; ++k) {
    if (x > (k - 0.5) * delta && x <= (k + 0.5) * delta) return k;
  }
  return qmax;
}

}  // namespace

TEST_SUITE("quant") {

TEST_CASE("boundary refs for 3-bit unit step") {
  const auto refs = boundary_refs(3, 1.0);
  const std::vector<double> expect = {-3.5, -2.5, -1.5, -0.5, 0.5, 1.5, 2.5};
  REQUIRE(refs.size() == expect.size());
  for (std::size_t i = 0; i < refs.size(); ++i) CHECK(refs[i] == expect[i]);
}

TEST_CASE("boundary refs for 2-bit half step") {
  const auto refs = boundary_refs(2, 0.5);
  REQUIRE(refs.size() == 3);
  CHECK(refs[0] == -0.75);
  CHECK(refs[1] == -0.25);
  CHECK(refs[2] == 0.25);
}

TEST_CASE("boundary refs scale linearly with the step") {
  const auto unit = boundary_refs(3, 1.0);
  const auto twice = boundary_refs(3, 2.0);
  REQUIRE(twice.size() == 7);
  for (std::size_t i = 0; i < unit.size(); ++i) CHECK(twice[i] == doctest::Approx(2.0 * unit[i]));
}

TEST_CASE("boundary refs are strictly increasing with 2^n - 1 entries") {
  for (int nbit = 2; nbit <= 8; ++nbit) {
    const auto refs = boundary_refs(nbit, 0.37);
    CHECK(refs.size() == std::size_t((1 << nbit) - 1));
    for (std::size_t i = 1; i < refs.size(); ++i) CHECK(refs[i] > refs[i - 1]);
  }
}

TEST_CASE("boundary refs reject per-channel params") {
  const QuantParams p = QuantParams::channel_wise(3, {0.5, 1.0});
  CHECK_THROWS_WITH_AS(boundary_refs(p), "scalar scale required", Error);
}

TEST_CASE("comparator picks the enclosing step") {
  const auto refs = boundary_refs(3, 1.0);
  CHECK(comparator_quantize(0.6, refs, -4) == 1);
  CHECK(comparator_quantize(2.5, refs, -4) == 2);  // exact reference maps down
  CHECK(comparator_quantize(100.0, refs, -4) == 3);
  CHECK(comparator_quantize(-100.0, refs, -4) == -4);
}

TEST_CASE("comparator equals the interval-scan oracle on a dense grid") {
  for (int nbit : {2, 3, 4}) {
    for (double delta : {0.25, 1.0, 1.7}) {
      const auto refs = boundary_refs(nbit, delta);
      const int qmin = -(1 << (nbit - 1));
      const double lo = (qmin - 1.0) * delta;
      const double hi = -lo;
      for (double x = lo; x <= hi; x += delta / 64.0) {
        CAPTURE(nbit);
        CAPTURE(delta);
        CAPTURE(x);
        REQUIRE(comparator_quantize(x, refs, qmin) == interval_scan_code(x, nbit, delta));
      }
    }
  }
}

TEST_CASE("comparator is monotone in x") {
  Rng rng(11);
  const auto refs = boundary_refs(3, 0.73);
  for (int trial = 0; trial < 2000; ++trial) {
    const double a = rng.next_uniform(-5.0, 5.0);
    const double b = rng.next_uniform(-5.0, 5.0);
    const int ca = comparator_quantize(std::min(a, b), refs, -4);
    const int cb = comparator_quantize(std::max(a, b), refs, -4);
    CHECK(ca <= cb);
  }
}

TEST_CASE("quantize maps symmetric inputs to symmetric codes") {
  FloatTensor x(1, 2);
  x.at(0, 0) = 0.6;
  x.at(0, 1) = -0.6;
  const QuantTensor q = quantize(x, QuantParams::scalar(3, 1.0));
  CHECK(q.at(0, 0) == 1);
  CHECK(q.at(0, 1) == -1);
}

TEST_CASE("quantize of zeros is zero codes") {
  const FloatTensor x(3, 4);
  const QuantTensor q = quantize(x, QuantParams::scalar(3, 0.5));
  for (auto c : q.codes) CHECK(c == 0);
}

TEST_CASE("quantize rejects mismatched per-channel scales") {
  const FloatTensor x(2, 3);
  CHECK_THROWS_AS(quantize(x, QuantParams::channel_wise(3, {0.5, 1.0})), Error);
}

TEST_CASE("round trip stays within half a step inside the representable range") {
  for (int nbit : {2, 3}) {
    for (double delta : {0.5, 1.0, 2.0}) {
      const QuantParams p = QuantParams::scalar(nbit, delta);
      const double lo = p.qmin() * delta;
      const double hi = p.qmax() * delta;
      for (double x = lo; x <= hi; x += delta / 97.0) {
        FloatTensor t(1, 1);
        t.at(0, 0) = x;
        const double back = dequantize(quantize(t, p)).at(0, 0);
        CAPTURE(nbit);
        CAPTURE(delta);
        CAPTURE(x);
        REQUIRE(std::abs(back - x) <= delta / 2.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("dequantize applies scalar and per-channel steps") {
  QuantTensor a(1, 1, QuantParams::scalar(3, 0.5));
  a.at(0, 0) = 2;
  CHECK(dequantize(a).at(0, 0) == 1.0);

  QuantTensor b(1, 2, QuantParams::channel_wise(3, {0.5, 2.0}));
  b.at(0, 0) = 1;
  b.at(0, 1) = -1;
  const FloatTensor f = dequantize(b);
  CHECK(f.at(0, 0) == 0.5);
  CHECK(f.at(0, 1) == -2.0);
}

TEST_CASE("quantize is idempotent on codes") {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const QuantParams p = QuantParams::scalar(3, rng.next_log_uniform(0.05, 2.0));
    const FloatTensor x = testutil::random_float_tensor(rng, 4, 5, -6.0, 6.0);
    const QuantTensor q1 = quantize(x, p);
    const QuantTensor q2 = quantize(dequantize(q1), p);
    CHECK(q1.codes == q2.codes);
  }
}

TEST_CASE("codes are invariant to scaling x and the step together") {
  Rng rng(31);
  for (double c : {0.5, 2.0, 4.0}) {  // exact binary scalings
    const QuantParams p = QuantParams::scalar(3, 0.8);
    const QuantParams pc = QuantParams::scalar(3, 0.8 * c);
    const FloatTensor x = testutil::random_float_tensor(rng, 6, 6, -4.0, 4.0);
    FloatTensor xc = x;
    for (auto& v : xc.values) v *= c;
    CHECK(quantize(x, p).codes == quantize(xc, pc).codes);
  }
}

TEST_CASE("mean scale") {
  const std::vector<double> constant = {0.5, 0.5, 0.5};
  CHECK(mean_scale(constant) == 0.5);
  const std::vector<double> pair = {0.2, 0.4};
  CHECK(mean_scale(pair) == doctest::Approx(0.3).epsilon(1e-15));
  const std::vector<double> wide = {1e-3, 1.0};
  CHECK(mean_scale(wide) == doctest::Approx(0.5005).epsilon(1e-15));
}

TEST_CASE("mean scale geometric option") {
  const std::vector<double> s = {0.25, 1.0};
  CHECK(mean_scale(s, ScaleAggregate::geometric) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("mean scale rejects bad input") {
  CHECK_THROWS_AS(mean_scale(std::vector<double>{}), Error);
  CHECK_THROWS_AS(mean_scale(std::vector<double>{0.5, -0.1}), Error);
  CHECK_THROWS_AS(mean_scale(std::vector<double>{0.0}), Error);
}

TEST_CASE("params validation") {
  CHECK_THROWS_AS(QuantParams::scalar(1, 1.0), Error);
  CHECK_THROWS_AS(QuantParams::scalar(9, 1.0), Error);
  CHECK_THROWS_AS(QuantParams::scalar(3, -1.0), Error);
  CHECK_THROWS_AS(QuantParams::scalar(3, 0.0), Error);
  const QuantParams p = QuantParams::scalar(3, 1.0);
  CHECK(p.qmin() == -4);
  CHECK(p.qmax() == 3);
}

}  // TEST_SUITE
