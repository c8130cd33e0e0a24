#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

// Seeded randomness. One global seed fans out to named substreams so each
// component (split, bootstrap, init, dropout, shuffle, ...) can be re-run
// independently and still reproduce. The standard <random> distributions are
// implementation-defined, so bounded draws are mapped by hand here.

namespace sentclass {

inline uint64_t mix64(uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t substream_seed(uint64_t seed, std::string_view name) {
  uint64_t h = 0xcbf29ce484222325ULL;  // fnv-1a over the stream name
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(seed ^ h);
}

inline uint64_t substream_seed(uint64_t seed, std::string_view name, uint64_t index) {
  return mix64(substream_seed(seed, name) + index);
}

inline std::mt19937_64 substream(uint64_t seed, std::string_view name) {
  return std::mt19937_64(substream_seed(seed, name));
}

inline std::mt19937_64 substream(uint64_t seed, std::string_view name, uint64_t index) {
  return std::mt19937_64(substream_seed(seed, name, index));
}

// unbiased draw from [0, n), n >= 1
inline uint64_t uniform_index(std::mt19937_64& rng, uint64_t n) {
  const uint64_t rem = (UINT64_MAX % n + 1) % n;  // 2^64 mod n
  uint64_t x = rng();
  if (rem != 0) {
    while (x > UINT64_MAX - rem) x = rng();
  }
  return x % n;
}

// [0, 1)
inline double uniform_real(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_real(rng);
}

// standard normal via Box-Muller (deterministic across platforms)
inline double gauss(std::mt19937_64& rng) {
  double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  double u2 = uniform_real(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

template <typename T>
void shuffle_vec(std::vector<T>& v, std::mt19937_64& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(uniform_index(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

// k distinct values from [0, n), ascending order
inline std::vector<int> sample_without_replacement(int n, int k, std::mt19937_64& rng) {
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = i;
  for (int i = 0; i < k; ++i) {
    int j = i + static_cast<int>(uniform_index(rng, static_cast<uint64_t>(n - i)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace sentclass
