#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace cmaudit {

// Portable random source. The engine is std::mt19937_64, whose output sequence
// is fixed by the standard; the distributions below are implemented here
// because the std:: ones are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer on [0, n); n > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  // Standard normal via the Box-Muller transform.
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// floor(p * n) with a small tolerance so that e.g. 0.29 * 100 yields 29.
std::size_t floor_count(double p, std::size_t n);

}  // namespace cmaudit
