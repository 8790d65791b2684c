#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace so3kit {

// Deterministic RNG. mt19937_64 supplies the bit stream; the uniform and
// normal mappings are done by hand because std::normal_distribution is
// implementation-defined, which would break byte-identical reproducibility
// of datasets and checkpoints across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t bits() { return eng_(); }

  // uniform in [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // uniform in [0, n)
  int uniform_int(int n) {
    // rejection sampling keeps the draw unbiased
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % static_cast<std::uint64_t>(n);
    std::uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return static_cast<int>(v % static_cast<std::uint64_t>(n));
  }

  // standard normal via Box-Muller (cosine branch only, two draws per value)
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace so3kit
