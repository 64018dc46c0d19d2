#pragma once

#include <cstdint>
#include <vector>

namespace conceptvec {

// splitmix64 generator. All randomness in the toolkit flows through this so
// that a given seed reproduces the same run on any platform; the standard
// <random> distributions are implementation-defined and would not.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound), bound > 0 (Lemire reduction).
  uint64_t uniform_u64(uint64_t bound) {
    return static_cast<uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

  uint32_t uniform_u32(uint32_t bound) {
    return static_cast<uint32_t>(uniform_u64(bound));
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Derives an independent stream, e.g. one per worker or per group key.
  static uint64_t derive(uint64_t seed, uint64_t salt) {
    Rng r(seed ^ (0x6a09e667f3bcc909ULL + salt * 0x9e3779b97f4a7c15ULL));
    return r.next_u64();
  }

 private:
  uint64_t state_;
};

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = rng.uniform_u64(i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace conceptvec
