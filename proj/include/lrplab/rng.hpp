#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "lrplab/errors.hpp"

namespace lrplab {

// splitmix64 step. Used to derive independent stream seeds from a base seed
// so that e.g. (run seed, iteration) always maps to the same draw no matter
// what happened in between.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                 std::uint64_t index = 0) {
  std::uint64_t s = base;
  std::uint64_t a = splitmix64(s);
  s ^= stream * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL;
  std::uint64_t b = splitmix64(s);
  s ^= index * 0x9e3779b97f4a7c15ULL + 0x6a09e667f3bcc909ULL;
  std::uint64_t c = splitmix64(s);
  return a ^ (b + 0x9e3779b97f4a7c15ULL) ^ (c << 1);
}

// Deterministic generator wrapper. All randomness in the library flows
// through this class so runs are reproducible from a single seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() {
    return std::generate_canonical<double, 53>(gen_);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal(double mean = 0.0, double stddev = 1.0) {
    return mean + stddev * normal_(gen_);
  }

  // Uniform integer in [0, n).
  std::int64_t below(std::int64_t n) {
    if (n <= 0) throw ArgumentError("Rng::below needs n > 0");
    std::uniform_int_distribution<std::int64_t> d(0, n - 1);
    return d(gen_);
  }

  // First k entries of a random permutation of [0, n): partial Fisher-Yates.
  std::vector<int> sample_indices(int n, int k) {
    if (n < 0 || k < 0 || k > n)
      throw ArgumentError("sample_indices needs 0 <= k <= n");
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = 0; i < k; ++i) {
      int j = i + static_cast<int>(below(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(static_cast<std::int64_t>(i)));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_;
};

}  // namespace lrplab
