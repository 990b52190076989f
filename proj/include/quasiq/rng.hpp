#pragma once
//
// Deterministic randomness.  Every randomized routine takes an explicit
// 64-bit seed; bounded draws and shuffles are pinned algorithms on top of
// std::mt19937_64 rather than std::uniform_int_distribution / std::shuffle,
// whose output sequences are implementation-defined.  Identical seeds must
// give byte-identical program output.

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace quasiq {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t raw() { return eng_(); }

  /// Uniform integer in [0, n); unbiased via rejection sampling.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below(0)");
    const std::uint64_t threshold = (-n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t x = eng_();
      if (x >= threshold) return x % n;
    }
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double unit() { return double(eng_() >> 11) * 0x1.0p-53; }

  /// Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = std::size_t(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Independent sub-stream derived from this stream and a salt; lets callers
  /// hand out per-task generators without coupling their consumption rates.
  Rng fork(std::uint64_t salt) { return Rng(splitmix64(raw() ^ splitmix64(salt))); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace quasiq
