#pragma once

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace deniakit {

// Counter-based generator. Every stream is keyed by (seed, purpose tag,
// index tuple), so draws for different purposes or different codebook
// coordinates never share a stream and results are reproducible no matter
// in which order streams are consumed.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::string_view purpose,
             std::initializer_list<std::uint64_t> indices = {})
      : key_(seed) {
    key_ = absorb(key_, fnv1a(purpose));
    for (std::uint64_t ix : indices) key_ = absorb(key_, ix + 0x9e3779b97f4a7c15ULL);
  }

  std::uint64_t next_u64() { return mix64(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL); }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased uniform integer in [0, bound).
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("next_below: bound must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % bound;
  }

  // Index sampled from the weights by CDF inversion. Weights need not be
  // normalized; the caller guarantees a positive total.
  int sample(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw std::invalid_argument("sample: weights sum to zero");
    double u = next_double() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
  }

  static std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

 private:
  static std::uint64_t absorb(std::uint64_t key, std::uint64_t v) {
    return mix64(key ^ (v + 0x9e3779b97f4a7c15ULL + (key << 6) + (key >> 2)));
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace deniakit
