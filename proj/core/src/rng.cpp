#include "dcra/rng.hpp"

#include <random>

namespace dcra {

std::uint64_t Rng::derive_seed(std::uint64_t master, StreamKind kind, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(kind), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

Rng Rng::substream(std::uint64_t master, StreamKind kind, std::uint64_t index) {
  return Rng(derive_seed(master, kind, index));
}

}  // namespace dcra
