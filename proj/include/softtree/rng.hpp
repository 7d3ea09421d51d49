#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace softtree {

// Counter-based pseudo-random generator. A draw is a pure function of
// (seed, stream id, counter), so streams can be split per consumer and
// individual draws can be addressed by index without generating their
// predecessors. Integer arithmetic only in the core, hence identical
// output on every platform.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream_id)
      : key_(mix(mix(seed + kGolden) ^ mix(stream_id + kStreamSalt))) {}

  // Independent substream; substream(a) and substream(b) never share draws
  // for a != b.
  Rng substream(std::uint64_t id) const {
    Rng r = *this;
    r.key_ = mix(key_ ^ mix(id + kStreamSalt));
    r.counter_ = 0;
    return r;
  }

  // Random access by counter; does not advance the sequential position.
  std::uint64_t at(std::uint64_t counter) const {
    return mix(key_ + counter * kGolden);
  }

  std::uint64_t next_u64() { return at(counter_++); }

  // Uniform in [0,1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0,1]; safe under log().
  double next_open_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Uniform at counter index, in [lo,hi); for coordinate-addressed draws.
  double uniform_at(std::uint64_t counter, double lo, double hi) const {
    return lo + (hi - lo) * (static_cast<double>(at(counter) >> 11) * 0x1.0p-53);
  }

  // Inclusive integer range.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

  // Standard normal via Box-Muller; consumes two counters per draw.
  double normal() {
    const double u1 = next_open_unit();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  bool bernoulli(double p) { return next_unit() < p; }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
  static constexpr std::uint64_t kStreamSalt = 0xA24BAED4963EE407ull;

  // SplitMix64 finalizer.
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Stream ids used across the project so consumers never collide.
namespace streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kShuffle = 2;
inline constexpr std::uint64_t kSplit = 3;
inline constexpr std::uint64_t kSynthetic = 4;
inline constexpr std::uint64_t kSearch = 5;
}  // namespace streams

}  // namespace softtree
