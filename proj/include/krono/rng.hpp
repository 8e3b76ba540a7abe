#pragma once

#include <cstdint>
#include <random>

#include "krono/types.hpp"

namespace krono::rng {

using Engine = std::mt19937_64;

// Stream tags keep per-trial objects on disjoint seeds.
enum class Stream : std::uint64_t {
  trial = 0,
  unitary = 1,
  left_frame = 2,
  right_frame = 3,
  v_factor = 4,
  probe = 5,
};

std::uint64_t splitmix64(std::uint64_t& state);

// Stable 64-bit mix of (master, index, tag). Independent of platform and thread count.
Seed mix(Seed master, std::uint64_t index, std::uint64_t tag);
inline Seed mix(Seed master, std::uint64_t index, Stream tag) {
  return mix(master, index, static_cast<std::uint64_t>(tag));
}

Engine make_engine(Seed seed);

// Standard complex Gaussian: real and imaginary parts i.i.d. N(0, 1/2).
Complex complex_normal(Engine& engine);

}  // namespace krono::rng
