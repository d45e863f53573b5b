#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace hdpo::rng {

// splitmix64 finalizer; used both as a mixer and to expand seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from (root, tag, a, b, c).
// Pure function of its inputs, so parallel workers and resumed runs
// reconstruct identical streams without serializing engine state.
inline std::uint64_t derive(std::uint64_t root, std::string_view tag,
                            std::uint64_t a = 0, std::uint64_t b = 0,
                            std::uint64_t c = 0) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over the tag
  for (char ch : tag) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ull;
  }
  std::uint64_t s = root;
  h ^= splitmix64(s);
  s ^= h + a;
  h ^= splitmix64(s);
  s ^= h + b;
  h ^= splitmix64(s);
  s ^= h + c;
  h ^= splitmix64(s);
  return h;
}

// Deterministic random stream. mt19937_64 output is fully specified by the
// standard; all distributions below are implemented by hand so sequences are
// reproducible across standard libraries.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform in [0, 1) with 53 random bits
  double next_unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // uniform integer in [0, n)
  int next_int(int n) {
    return static_cast<int>(next_unit() * static_cast<double>(n)) % n;
  }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
  }

  // Box-Muller without caching the spare, so the draw count per sample is fixed.
  double next_gaussian() {
    double u1 = next_unit();
    double u2 = next_unit();
    while (u1 <= 0.0) u1 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

  // Samples an index from unnormalized nonnegative weights by a CDF walk.
  int next_weighted(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = next_unit() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hdpo::rng
