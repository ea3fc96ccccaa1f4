#pragma once

#include <cstdint>
#include <cmath>

namespace symrl {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256** with explicit double conversion. We own the bit-to-double
// mapping so results do not depend on libstdc++ distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t sm = seed ^ (0x632be59bd9b4e019ULL * (stream + 1));
    for (auto& s : s_) s = splitmix64(sm);
  }

  std::uint64_t next_u64() {
    std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

  // standard normal via Box-Muller, one spare cached
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4] = {};
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Stable stream derivation for (run seed, role, index) triples.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t role,
                                 std::uint64_t index = 0) {
  std::uint64_t s = seed;
  splitmix64(s);
  s ^= 0x9e3779b97f4a7c15ULL * (role + 1);
  splitmix64(s);
  s ^= 0xc2b2ae3d27d4eb4fULL * (index + 1);
  return splitmix64(s);
}

}  // namespace symrl
