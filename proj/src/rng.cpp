#include "krono/rng.hpp"

#include <cmath>

namespace krono::rng {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Seed mix(Seed master, std::uint64_t index, std::uint64_t tag) {
  std::uint64_t state = master;
  std::uint64_t h = splitmix64(state);
  state = h ^ (index * 0xd6e8feb86659fd93ULL);
  h = splitmix64(state);
  state = h ^ (tag * 0xa0761d6478bd642fULL);
  return splitmix64(state);
}

Engine make_engine(Seed seed) {
  // Expand the seed so nearby seeds give unrelated Mersenne states.
  std::uint64_t state = seed;
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state))};
  return Engine(seq);
}

Complex complex_normal(Engine& engine) {
  // Box-Muller written out so the stream does not depend on the
  // standard library's normal_distribution.
  constexpr double two_pi = 6.283185307179586476925286766559;
  const double u1 = (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
  const double radius = std::sqrt(-std::log(u1));
  return {radius * std::cos(two_pi * u2), radius * std::sin(two_pi * u2)};
}

}  // namespace krono::rng
