#pragma once

#include <cstdint>

namespace mcl::rng {

// splitmix64 finalizer; good avalanche, cheap.
inline std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based key derivation: combine a key with up to three counters.
// Used everywhere randomness must be reproducible from (seed, position)
// alone, independent of call order.
inline std::uint64_t derive(std::uint64_t key, std::uint64_t a,
                            std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t h = mix(key ^ 0x51afd54ed5d1d727ULL);
  h = mix(h ^ a);
  h = mix(h ^ b);
  h = mix(h ^ c);
  return h;
}

// Uniform double in [0, 1).
inline double uniform01(std::uint64_t key) {
  return static_cast<double>(mix(key) >> 11) * 0x1.0p-53;
}

// Uniform double in [-bound, bound).
inline double uniform_sym(std::uint64_t key, double bound) {
  return (2.0 * uniform01(key) - 1.0) * bound;
}

// Uniform integer in [0, n).
inline std::uint64_t below(std::uint64_t key, std::uint64_t n) {
  return mix(key) % n;
}

// Stateful convenience stream on top of the counter scheme.
class Stream {
 public:
  explicit Stream(std::uint64_t key) : key_(key) {}
  double uniform01() { return rng::uniform01(derive(key_, ctr_++)); }
  double uniform_sym(double bound) {
    return rng::uniform_sym(derive(key_, ctr_++), bound);
  }
  std::uint64_t below(std::uint64_t n) {
    return rng::below(derive(key_, ctr_++), n);
  }
  std::uint64_t next_key() { return derive(key_, ctr_++); }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

} // namespace mcl::rng
