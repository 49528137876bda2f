#pragma once

#include <cstdint>
#include <random>

namespace dcra {

/// Named substreams split from a master seed. Values are part of the reproducibility
/// contract: changing them changes every recorded result.
enum class StreamKind : std::uint32_t {
  Arrivals = 1,
  Policy = 2,
  Channel = 3,
  ParamSampling = 4,
  Group = 5,
};

/// 64-bit Mersenne Twister with explicitly defined uniform and Bernoulli draws so that
/// results do not depend on the standard library's distribution implementations.
class Rng {
 public:
  using engine_type = std::mt19937_64;

  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Deterministic child stream of (master, kind, index).
  static Rng substream(std::uint64_t master, StreamKind kind, std::uint64_t index = 0);
  static std::uint64_t derive_seed(std::uint64_t master, StreamKind kind, std::uint64_t index = 0);

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }
  std::uint32_t poisson(double mean) {
    std::poisson_distribution<std::uint32_t> dist(mean);
    return dist(engine_);
  }

  engine_type& engine() { return engine_; }

 private:
  engine_type engine_;
};

}  // namespace dcra
