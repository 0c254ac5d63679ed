#pragma once

// Counter-based random streams.
//
// Every random quantity in the library is a pure function of a 64-bit seed
// and a position, so results do not depend on thread count or evaluation
// order. Streams are derived by hashing the parent seed with a tag and an
// index:
//
//   stream(seed, tag, i) = mix64(mix64(seed ^ tag) + (i + 1) * kGolden)
//
// where mix64 is the SplitMix64 finalizer. Walker streams in the direct
// solver use stream(stream(stream(seed, kRun, run), kStart, start), kWalker, w)
// and draw sequentially with SplitMix64. Spiking gates draw
// uniform_at(stream(seed, kTile, tile), neuron, t) so a draw is keyed by
// (tile, neuron, neural timestep).

#include <cstdint>

namespace spikewalk {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Tags keep sibling streams apart when indices collide.
enum class StreamTag : std::uint64_t {
  run = 0x52554e0000000001ULL,
  start = 0x5354415254000002ULL,
  walker = 0x57414c4b00000003ULL,
  tile = 0x54494c4500000004ULL,
  sweep = 0x5357454550000005ULL,
};

constexpr std::uint64_t derive_stream(std::uint64_t seed, StreamTag tag,
                                      std::uint64_t index) noexcept {
  return mix64(mix64(seed ^ static_cast<std::uint64_t>(tag)) + (index + 1) * kGolden);
}

// 53-bit mantissa mapping, identical on every platform.
constexpr double to_unit_interval(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Uniform in [0, 1) for a (stream, counter) pair.
constexpr double uniform_at(std::uint64_t stream, std::uint64_t a, std::uint64_t b) noexcept {
  return to_unit_interval(mix64(mix64(stream + (a + 1) * kGolden) ^ (b * 0xd1b54a32d192ed03ULL)));
}

// Sequential SplitMix64 generator. Satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  constexpr explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  constexpr result_type operator()() noexcept {
    state_ += kGolden;
    return mix64(state_);
  }

  constexpr double uniform() noexcept { return to_unit_interval((*this)()); }

 private:
  std::uint64_t state_;
};

}  // namespace spikewalk
