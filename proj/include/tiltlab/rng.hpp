#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace tl {

// Counter-based stream: output i is splitmix64(key + i*gamma). Children are
// independent keys derived by mixing, so any (seed, path) pair is reproducible
// regardless of thread scheduling.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0)
      : key_(mix(mix(seed) ^ (stream + 0x632be59bd9b4e019ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + (ctr_++) * kGamma); }

  Rng split(std::uint64_t k) const {
    Rng r;
    r.key_ = mix(key_ ^ mix(k * 0xd1342543de82ef95ULL + 0x9e3779b97f4a7c15ULL));
    return r;
  }

  double uniform() { return ((*this)() >> 11) * 0x1.0p-53; }
  // (0,1], safe for log
  double uniform_pos() { return (((*this)() >> 11) + 1) * 0x1.0p-53; }
  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }
  int below(int n) { return int(uniform() * n); }
  long poisson(double mean) {
    if (mean <= 0) return 0;
    std::poisson_distribution<long> p(mean);
    return p(*this);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  std::uint64_t key_ = 0;
  std::uint64_t ctr_ = 0;
};

}  // namespace tl
