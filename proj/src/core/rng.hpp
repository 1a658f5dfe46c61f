#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace nclln {

// All randomness flows from one 64-bit master seed. Per-task seeds are
// derived as splitmix64(master ^ fnv1a64(task-id)), so results do not
// depend on execution order or thread count.

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view task_id) {
  return splitmix64(master ^ fnv1a64(task_id));
}

// mt19937_64 output mapped to [0,1) with an explicit shift; avoids the
// implementation-defined std::uniform_real_distribution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  std::uint64_t next_u64() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace nclln
