#ifndef INTVIT_RNG_HPP
#define INTVIT_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace intvit {

// Seeded random source used everywhere inputs are generated. The engine is
// std::mt19937_64; all value derivations below are hand-rolled so that a given
// seed produces identical streams on every platform (the std::*_distribution
// classes are implementation-defined and would break cross-platform
// reproducibility of .qt outputs).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [lo, hi], inclusive. Rejection-free modulo is fine for
  // the tiny ranges used here (code grids of at most a few hundred levels).
  int next_int(int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(eng_() % span);
  }

  // Log-uniform over [lo, hi], lo > 0.
  double next_log_uniform(double lo, double hi) {
    return std::exp(std::log(lo) + next_unit() * (std::log(hi) - std::log(lo)));
  }

  double next_uniform(double lo, double hi) { return lo + next_unit() * (hi - lo); }

  // Box-Muller; deterministic given the engine state.
  double next_normal(double mean, double stddev) {
    double u1 = next_unit();
    double u2 = next_unit();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double mag = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * mag * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Decorrelated child seed (splitmix64 finalizer over seed ^ tag).
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t z = seed ^ (tag * 0x9E3779B97F4A7C15ull);
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  static constexpr const char* name() { return "mt19937_64"; }

private:
  std::mt19937_64 eng_;
};

}  // namespace intvit

#endif
