#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace ddad {

// FNV-1a, used to hash stream labels for seed derivation.
inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// splitmix64 finalizer. Portable across compilers and platforms, which is
// what makes byte-identical reruns possible; std:: distributions are
// implementation-defined and never touch anything in this project.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// One global seed fans out to named substreams: every component (member
// init, shuffling, synthesis, ...) owns an independent stream addressed by
// a label, so a single integer reproduces a whole run.
inline uint64_t derive_seed(uint64_t base, std::string_view label) {
  uint64_t state = base ^ fnv1a64(label);
  return splitmix64(state);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() { return splitmix64(state_); }

  // uniform in [0,1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n), n > 0
  uint64_t below(uint64_t n) {
    return static_cast<uint64_t>(
        (static_cast<__uint128_t>(next_u64()) * n) >> 64);
  }

  // standard normal via Box-Muller, second draw cached
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Fisher-Yates
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline Rng derive_rng(uint64_t base, std::string_view label) {
  return Rng(derive_seed(base, label));
}

}  // namespace ddad
