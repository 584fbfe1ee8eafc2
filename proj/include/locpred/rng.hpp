#ifndef LOCPRED_RNG_HPP
#define LOCPRED_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace locpred {

/// Derives an independent 64-bit seed for a named sub-stream of `seed`.
/// The derivation is a pure function of its inputs, so every stage of the
/// pipeline can be rerun on its own with the same randomness.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Portable random source. std::mt19937_64 output is fixed by the standard;
/// the distribution helpers below are implemented here because the standard
/// library distributions are not required to agree across vendors.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform in [0, n). n must be positive.
  std::size_t index(std::size_t n);
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace locpred

#endif  // LOCPRED_RNG_HPP
