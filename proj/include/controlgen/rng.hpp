#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace controlgen {

// mt19937_64 engine with a hand-rolled distribution layer. The std::
// distributions have implementation-defined output sequences; sampling from
// raw engine bits keeps every seeded run bit-identical across compilers, which
// the frozen test values and the CLI reproducibility contract rely on.
class Rng {
public:
  explicit Rng(uint64_t seed) : seed_(seed), eng_(seed) {}

  static uint64_t mix(uint64_t a, uint64_t b) {
    // splitmix64 finalizer over the combined word
    uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Independent stream for worker `index`; deterministic in (seed, index).
  Rng substream(uint64_t index) const { return Rng(mix(seed_, index)); }

  uint64_t bits() { return eng_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // [0, n)
  uint64_t uniform_int(uint64_t n) {
    // rejection sampling over the top multiple of n
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  double normal(double mu, double sigma) {
    // Box-Muller, cosine branch only
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mu + sigma * r * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Knuth's product method; fine for the small rates used here.
  int poisson(double lambda) {
    const double l = std::exp(-lambda);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > l);
    return k - 1;
  }

  // Index draw proportional to non-negative weights (need not be normalized).
  // Requires a positive total.
  std::size_t categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return weights.size() - 1;
  }

  // Deterministic Fisher-Yates (std::shuffle's algorithm is unspecified).
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_int(i);
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  uint64_t seed_;
  std::mt19937_64 eng_;
};

}  // namespace controlgen
