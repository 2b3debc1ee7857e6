#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "acim/engine.hpp"
#include "acim/macro.hpp"
#include "acim/quant.hpp"
#include "acim/tensor.hpp"

namespace acim {

// Power-ratio CSNR/SQNR. db is +inf for a perfect match and -inf when the
// ideal signal is identically zero but the simulated one is not.
struct CsnrReport {
  double db = 0.0;
  double signal_power = 0.0;
  double noise_power = 0.0;
  std::size_t trials = 0;
};

CsnrReport csnr_measure(const Tensor& ideal, const Tensor& simulated);

// Variance-ratio terms: σ²_y/σ²_yi (input quantization), σ²_y/σ²_yo (output
// quantization) and σ²_y/σ²_η (analog noise). A term whose error variance is
// zero is +inf and describes an absent error source; it is left out of the
// sums. Both sums are +inf when every term is.
struct VarianceCsnr {
  double input_term = 0.0;
  double output_term = 0.0;
  double noise_term = 0.0;
  double sqnr = 0.0;
  double csnr = 0.0;
  double sqnr_db = 0.0;
  double csnr_db = 0.0;
};

// ideal: full-precision output; quant_in: output with quantized operands;
// quant_out: quant_in additionally passed through the noiseless ADC path;
// noisy: quant_out with analog noise.
VarianceCsnr csnr_variance_form(const Tensor& ideal, const Tensor& quant_in,
                                const Tensor& quant_out, const Tensor& noisy);

struct MacHistogram {
  MacroConfig cfg;
  std::size_t tiles = 0;
  std::size_t batch = 0;
  std::size_t columns = 0;
  std::vector<CycleHistogram> cycles;

  std::uint64_t total_mass() const;
  double mean_level(std::size_t entry) const;
  // Highest level observed with nonzero count across all cycles.
  std::int64_t max_level() const;
};

MacHistogram mac_distribution(const QuantizedTensor& act, const QuantizedTensor& w,
                              const MacroConfig& cfg, const EngineMode& mode, int threads = 1);

// E[MAC] = rows * P(w=1) * P(x=1).
double expected_mac(double p_w, double p_x, int rows);

struct LinearityPoint {
  std::int64_t level = 0;
  std::int32_t ideal_code = 0;
  double mean_code = 0.0;
  double code_sigma = 0.0;    // spread of ADC output codes (LSB)
  double analog_sigma = 0.0;  // spread of the CBL level before the ADC (LSB)
};

struct LinearityOptions {
  int trials = 1000;
  int stride = 1;
  int voting_samples = 1;
};

// Sweeps every `stride`-th ideal level in [0, N_fs]. Trial t uses the same
// RngContext at every level, so the curves differ only through the level
// dependence of the noise model.
std::vector<LinearityPoint> linearity_sweep(const MacroConfig& cfg, const NoiseSpec& spec,
                                            const LinearityOptions& opts);

// Signed code error (noisy code - noiseless code) counts for conversions of
// random binary-weight / encoded-activation columns.
std::map<std::int32_t, std::uint64_t> error_histogram(const MacroConfig& cfg,
                                                      const NoiseSpec& spec, int trials);

double histogram_mean(const std::map<std::int32_t, std::uint64_t>& hist);

}  // namespace acim
