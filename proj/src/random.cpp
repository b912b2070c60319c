#include "eduopt/random.hpp"

#include <cmath>
#include <numbers>

namespace eduopt {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53-bit mantissa mapped into (0, 1).
inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Block Philox4x32::generate(Block ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::array<double, 2> uniform_pair(std::uint64_t seed, Stream domain, std::uint32_t a, std::uint32_t b,
                                   std::uint32_t lane) {
  const Philox4x32::Key key = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  const Philox4x32::Block ctr = {static_cast<std::uint32_t>(domain), a, b, lane};
  const auto out = Philox4x32::generate(ctr, key);
  return {to_open_unit(out[0], out[1]), to_open_unit(out[2], out[3])};
}

double uniform01(std::uint64_t seed, Stream domain, std::uint32_t a, std::uint32_t b, std::uint32_t lane) {
  return uniform_pair(seed, domain, a, b, lane)[0];
}

ShockVec normal_shock(std::uint64_t seed, Stream domain, std::uint32_t a, std::uint32_t b) {
  const auto u = uniform_pair(seed, domain, a, b, 0);
  const auto v = uniform_pair(seed, domain, a, b, 1);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double r1 = std::sqrt(-2.0 * std::log(u[0]));
  const double r2 = std::sqrt(-2.0 * std::log(v[0]));
  return {r1 * std::cos(two_pi * u[1]), r1 * std::sin(two_pi * u[1]), r2 * std::cos(two_pi * v[1]),
          r2 * std::sin(two_pi * v[1])};
}

}  // namespace eduopt
