#pragma once

#include <array>
#include <cstdint>

#include "eduopt/types.hpp"

namespace eduopt {

// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
// Stateless: the output block is a pure function of (key, counter).
struct Philox4x32 {
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Block generate(Block counter, Key key);
};

// Stream domains. Each consumer of randomness owns a domain so that, e.g.,
// population assignment never shares a counter with the shock draws.
enum class Stream : std::uint32_t {
  EmaxDraws = 1,
  PanelShocks = 2,
  Ability = 3,
  LatentType = 4,
  Proximity = 5,
  Bootstrap = 6,
  Optimizer = 7,
};

// Uniform deviates in the open interval (0, 1), two per (domain, a, b, lane).
std::array<double, 2> uniform_pair(std::uint64_t seed, Stream domain, std::uint32_t a, std::uint32_t b,
                                   std::uint32_t lane = 0);

double uniform01(std::uint64_t seed, Stream domain, std::uint32_t a, std::uint32_t b, std::uint32_t lane = 0);

// Four independent standard-normal deviates (Box-Muller on two uniform pairs).
ShockVec normal_shock(std::uint64_t seed, Stream domain, std::uint32_t a, std::uint32_t b);

}  // namespace eduopt
