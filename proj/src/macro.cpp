#include "acim/macro.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "acim/error.hpp"

namespace acim {

void MacroConfig::validate() const {
  if (rows < 1) throw ConfigError("macro rows must be >= 1");
  if (adc_bits < 1 || adc_bits > 16) throw ConfigError("adc_bits must be in [1,16]");
  if (enc_bits < 1 || enc_bits > 16) throw ConfigError("enc_bits must be in [1,16]");
}

std::int64_t MacroConfig::full_scale() const {
  return static_cast<std::int64_t>(rows) * ((std::int64_t{1} << enc_bits) - 1);
}

double MacroConfig::lsb() const {
  return static_cast<double>(full_scale()) / std::ldexp(1.0, adc_bits);
}

int MacroConfig::boundary_bits() const {
  int k = 0;
  while ((std::int64_t{1} << k) < full_scale() + 1) ++k;
  return k;
}

void NoiseSpec::validate() const {
  if (!(random.value >= 0.0) || !(nonlin.value >= 0.0))
    throw DomainError("noise sigma must be >= 0");
}

CblLevel ideal_level(std::span<const std::uint8_t> w_col, std::span<const std::int32_t> act_group,
                     const MacroConfig& cfg) {
  if (w_col.size() != act_group.size())
    throw ConfigError("weight column and activation group lengths differ");
  if (w_col.size() > static_cast<std::size_t>(cfg.rows))
    throw ConfigError("vector length " + std::to_string(w_col.size()) + " exceeds macro rows " +
                      std::to_string(cfg.rows));
  const std::int32_t amax = (std::int32_t{1} << cfg.enc_bits) - 1;
  std::int64_t acc = 0;
  for (std::size_t i = 0; i < w_col.size(); ++i) {
    if (w_col[i] > 1) throw DomainError("weight bits must be 0 or 1");
    if (act_group[i] < 0 || act_group[i] > amax)
      throw DomainError("activation group value outside [0, 2^y - 1]");
    acc += static_cast<std::int64_t>(w_col[i]) * act_group[i];
  }
  return {static_cast<double>(acc)};
}

double sigma_to_counts(const NoiseLevel& s, const MacroConfig& cfg) {
  if (!(s.value >= 0.0)) throw DomainError("noise sigma must be >= 0");
  switch (s.unit) {
    case NoiseUnit::VppPct:
      return s.value / 100.0 * static_cast<double>(cfg.full_scale());
    case NoiseUnit::LsbRms:
      return s.value * cfg.lsb();
  }
  return 0.0;
}

double sigma_to_lsb(const NoiseLevel& s, const MacroConfig& cfg) {
  return sigma_to_counts(s, cfg) / cfg.lsb();
}

CblLevel apply_random_noise(CblLevel v, const NoiseSpec& spec, const MacroConfig& cfg,
                            const RngContext& ctx) {
  const double sigma = sigma_to_counts(spec.random, cfg);
  if (sigma == 0.0) return v;
  return {v.value + sigma * standard_normal(spec.seed, ctx, RngStream::Random)};
}

double nonlinearity_sigma(double level, const NoiseSpec& spec, const MacroConfig& cfg) {
  const double sigma = sigma_to_counts(spec.nonlin, cfg);
  const auto fs = static_cast<double>(cfg.full_scale());
  return sigma * std::sqrt(std::max(0.0, fs - level) / fs);
}

CblLevel apply_nonlinearity(CblLevel v, const NoiseSpec& spec, const MacroConfig& cfg,
                            const RngContext& ctx) {
  const double sigma = nonlinearity_sigma(v.value, spec, cfg);
  if (sigma == 0.0) return v;
  return {v.value + sigma * standard_normal(spec.seed, ctx, RngStream::Nonlinearity)};
}

CblLevel analog_level(CblLevel ideal, const NoiseSpec& spec, const MacroConfig& cfg,
                      const RngContext& ctx) {
  CblLevel v = apply_nonlinearity(ideal, spec, cfg, ctx);
  v = apply_random_noise(v, spec, cfg, ctx);
  if (spec.custom) v.value = spec.custom(v.value, ctx, cfg);
  return v;
}

AdcReading adc_readout(CblLevel v, const MacroConfig& cfg) {
  const double delta = cfg.lsb();
  const double r = std::round(v.value / delta);
  const auto code = static_cast<std::int32_t>(std::clamp(r, 0.0, double(cfg.max_code())));
  return {code, code * delta};
}

AdcReading noisy_readout(CblLevel ideal, const NoiseSpec& spec, const MacroConfig& cfg,
                         const RngContext& ctx) {
  return adc_readout(analog_level(ideal, spec, cfg, ctx), cfg);
}

VoteReading majority_vote_readout(CblLevel ideal, int samples, const NoiseSpec& spec,
                                  const MacroConfig& cfg, RngContext ctx) {
  if (samples < 1) throw DomainError("majority voting needs at least one sample");
  std::int64_t sum = 0;
  for (int s = 0; s < samples; ++s) {
    ctx.sample = static_cast<std::uint64_t>(s);
    sum += noisy_readout(ideal, spec, cfg, ctx).code;
  }
  const double code = static_cast<double>(sum) / samples;
  return {code, code * cfg.lsb()};
}

double reconstruct_counts(double mac_counts, const MacroConfig& cfg) {
  return cfg.lsb() < 1.0 ? std::round(mac_counts) : mac_counts;
}

}  // namespace acim
