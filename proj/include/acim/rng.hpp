#pragma once

#include <cstdint>

namespace acim {

// Coordinates of one ADC conversion. Every stochastic draw in the simulator
// is a pure function of (seed, RngContext, stream), so results do not depend
// on how work is scheduled across threads.
struct RngContext {
  std::uint64_t layer = 0;
  std::uint64_t tile = 0;
  std::uint64_t w_bit = 0;
  std::uint64_t act_group = 0;
  std::uint64_t batch = 0;
  std::uint64_t column = 0;
  std::uint64_t sample = 0;
};

enum class RngStream : std::uint64_t { Random = 1, Nonlinearity = 2, User = 3, Operands = 4, Training = 5 };

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t context_key(std::uint64_t seed, const RngContext& ctx, RngStream stream) noexcept;

// Counter-mode generator: output i is mix64(key ^ mix64(i)). Cheap to
// construct, so callers create one per conversion.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t next() noexcept { return mix64(key_ ^ mix64(counter_++)); }
  // Uniform in the open interval (0, 1).
  double uniform() noexcept;
  double normal() noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// One standard-normal draw for a conversion.
double standard_normal(std::uint64_t seed, const RngContext& ctx, RngStream stream) noexcept;

}  // namespace acim
