#include "acim/rng.hpp"

#include <cmath>
#include <initializer_list>
#include <numbers>

namespace acim {

std::uint64_t context_key(std::uint64_t seed, const RngContext& ctx, RngStream stream) noexcept {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t v : {static_cast<std::uint64_t>(stream), ctx.layer, ctx.tile, ctx.w_bit,
                          ctx.act_group, ctx.batch, ctx.column, ctx.sample})
    h = mix64(h ^ v);
  return h;
}

double CounterRng::uniform() noexcept {
  // 53 random mantissa bits, offset by half a step to exclude 0 and 1.
  return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal() noexcept {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double standard_normal(std::uint64_t seed, const RngContext& ctx, RngStream stream) noexcept {
  CounterRng rng(context_key(seed, ctx, stream));
  return rng.normal();
}

}  // namespace acim
