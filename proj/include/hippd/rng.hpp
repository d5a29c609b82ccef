#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hippd/tensor.hpp"

namespace hippd {

/// Seeded random source. The engine is std::mt19937_64, whose output sequence
/// is fixed by the standard; every conversion to reals or indices is done here
/// rather than through <random> distributions, whose algorithms are
/// implementation-defined.
class Rng {
 public:
  static constexpr double kUniformEpsilon = 1e-12;

  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [eps, 1 - eps], eps = 1e-12.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }

  /// Independent stream derived from this generator's seed and a stream id.
  /// Does not advance this generator.
  Rng fork(std::uint64_t stream) const;

  std::string serialize() const;
  static Rng deserialize(const std::string& text);

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.seed_ == b.seed_ && a.engine_ == b.engine_;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Fisher-Yates with Rng::below, so the order depends only on the seed.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[rng.below(i)]);
}

double gumbel_from_uniform(double u);

/// i.i.d. standard Gumbel samples, g = -log(-log(u)).
Tensor sample_gumbel(const Shape& shape, Rng& rng);

}  // namespace hippd
