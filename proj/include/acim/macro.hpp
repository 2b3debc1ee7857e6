#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "acim/rng.hpp"

namespace acim {

// One analog macro column: `rows` cells share a compute bit-line, each cell
// contributes up to 2^enc_bits - 1 unit charges, and a k-bit ADC spans the
// full CBL range [0, N_fs] with step N_fs / 2^k.
struct MacroConfig {
  int rows = 256;
  int adc_bits = 8;
  int enc_bits = 1;

  void validate() const;
  std::int64_t full_scale() const;  // N_fs = rows * (2^y - 1)
  double lsb() const;               // Δ in counts
  std::int32_t max_code() const { return (std::int32_t{1} << adc_bits) - 1; }
  // Smallest k with 2^k >= N_fs + 1: every integer level gets its own code.
  int boundary_bits() const;
};

enum class NoiseUnit { VppPct, LsbRms };

struct NoiseLevel {
  double value = 0.0;
  NoiseUnit unit = NoiseUnit::LsbRms;
};

// Optional user noise model, applied after the built-in ones. Receives the
// CBL level in counts and returns the transformed level.
using LevelTransform =
    std::function<double(double level, const RngContext& ctx, const MacroConfig& cfg)>;

struct NoiseSpec {
  NoiseLevel random;
  NoiseLevel nonlin;
  std::uint64_t seed = 0;
  LevelTransform custom;

  void validate() const;
  bool noiseless() const { return random.value == 0.0 && nonlin.value == 0.0 && !custom; }
};

// Compute bit-line level in counts (one count = one fully charged unit cell).
struct CblLevel {
  double value = 0.0;
};

struct AdcReading {
  std::int32_t code = 0;
  double mac_counts = 0.0;  // code * Δ
};

// Result of an oversampled conversion. `code` is the mean of the sampled
// codes and keeps its fractional part.
struct VoteReading {
  double code = 0.0;
  double mac_counts = 0.0;
};

// Σ w_i * a_i over one column. Throws ConfigError when the vectors are longer
// than the macro or differ in length, DomainError for out-of-range inputs.
CblLevel ideal_level(std::span<const std::uint8_t> w_col, std::span<const std::int32_t> act_group,
                     const MacroConfig& cfg);

double sigma_to_counts(const NoiseLevel& s, const MacroConfig& cfg);
double sigma_to_lsb(const NoiseLevel& s, const MacroConfig& cfg);

CblLevel apply_random_noise(CblLevel v, const NoiseSpec& spec, const MacroConfig& cfg,
                            const RngContext& ctx);

// Capacitor-mismatch model: σ(v) = σ * sqrt(max(0, N_fs - v) / N_fs), largest
// with few active cells and vanishing at full scale.
double nonlinearity_sigma(double level, const NoiseSpec& spec, const MacroConfig& cfg);
CblLevel apply_nonlinearity(CblLevel v, const NoiseSpec& spec, const MacroConfig& cfg,
                            const RngContext& ctx);

// Full analog chain for one conversion: nonlinearity on the ideal level,
// then random noise, then the user transform.
CblLevel analog_level(CblLevel ideal, const NoiseSpec& spec, const MacroConfig& cfg,
                      const RngContext& ctx);

// code = clamp(round(v / Δ), 0, 2^k - 1).
AdcReading adc_readout(CblLevel v, const MacroConfig& cfg);

AdcReading noisy_readout(CblLevel ideal, const NoiseSpec& spec, const MacroConfig& cfg,
                         const RngContext& ctx);

// Averages `samples` independent conversions of the same ideal level
// (ctx.sample is overwritten with 0..samples-1).
VoteReading majority_vote_readout(CblLevel ideal, int samples, const NoiseSpec& spec,
                                  const MacroConfig& cfg, RngContext ctx);

// Value the digital back end accumulates for a reconstructed MAC. An ADC step
// finer than one count cannot add information about an integer level, so in
// that regime the value snaps to the nearest count.
double reconstruct_counts(double mac_counts, const MacroConfig& cfg);

}  // namespace acim
