#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace sessrec {

// Deterministic RNG. mt19937_64 is bit-portable; the distributions are spelled
// out here instead of using std:: distribution objects, whose output is not
// specified by the standard and differs across library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), n > 0. Rejection sampling, modulo-bias free.
  std::uint64_t uniform_int(std::uint64_t n);

  // Standard normal via Box-Muller (no spare caching; two uniforms per draw).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  double exponential(double mean);

  // Poisson via inversion for small means (< 50), otherwise normal approx.
  std::int64_t poisson(double mean);

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

// Fans a global seed out to a stage-specific seed via a fixed hash of
// (seed, stage name), so stages stay isolated but reproducible.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view stage);

}  // namespace sessrec
