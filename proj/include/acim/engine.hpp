#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "acim/macro.hpp"
#include "acim/quant.hpp"
#include "acim/tensor.hpp"

namespace acim {

enum class Scheme { BitSerial, BitParallel };

struct VotingSpec {
  int boundary = 3;  // number of top shift levels that get oversampled
  int samples = 1;
};

struct EngineMode {
  Scheme scheme = Scheme::BitSerial;
  int enc_bits = 1;
  std::optional<int> hybrid_boundary;  // top shift levels computed digitally
  std::optional<VotingSpec> voting;

  static EngineMode bit_serial() { return {}; }
  static EngineMode bit_parallel(int y) { return {Scheme::BitParallel, y, {}, {}}; }

  void validate() const;
};

enum class Domain { Analog, Digital };

struct CycleEntry {
  int w_bit = 0;
  int w_sign = 1;
  int act_group = 0;
  int act_sign = 1;
  int shift = 0;
  Domain domain = Domain::Analog;
  int oversample = 1;

  int sign() const { return w_sign * act_sign; }
};

struct CyclePlan {
  int w_bits = 0;
  std::vector<GroupLayout> act_groups;
  std::vector<CycleEntry> entries;

  std::size_t analog_entries() const;
  std::size_t digital_entries() const;
  // Conversions per tile, counting every oversampled repeat.
  std::int64_t cycles_per_tile() const;
  double analog_ratio() const;
  int shift_levels() const;
};

// Weight bits are always streamed one per cycle; activations are encoded per
// the mode. Digital/oversample marks are assigned by distinct shift value,
// highest first.
CyclePlan plan_cycles(int w_bits, int x_bits, Signedness x_signedness, Signedness w_signedness,
                      const EngineMode& mode);

struct SimOptions {
  std::uint64_t layer_id = 0;
  std::uint64_t batch_offset = 0;  // added to batch indices in the RngContext
  int threads = 1;
  bool record_histograms = false;
};

// Ideal-level counts for one plan entry, indexed by level 0..N_fs.
struct CycleHistogram {
  int w_bit = 0;
  int act_group = 0;
  int shift = 0;
  std::vector<std::uint64_t> counts;
};

struct SimLayerResult {
  Tensor output;
  std::size_t tiles = 0;
  std::int64_t cycle_count = 0;  // per tile
  double analog_ratio = 1.0;
  std::vector<CycleHistogram> histograms;
};

// act[B,D] x w[D,M] on weight-stationary macros. D is split into
// ceil(D/rows) tiles; every (tile, plan entry, batch row, column) is
// converted independently and shift-accumulated.
SimLayerResult simulate_matmul(const QuantizedTensor& act, const QuantizedTensor& w,
                               const MacroConfig& cfg, const NoiseSpec& spec,
                               const EngineMode& mode, const SimOptions& opts = {});

// simulate_matmul plus a floating-point bias of shape [M].
SimLayerResult simulate_linear(const QuantizedTensor& act, const QuantizedTensor& w,
                               const std::optional<Tensor>& bias, const MacroConfig& cfg,
                               const NoiseSpec& spec, const EngineMode& mode,
                               const SimOptions& opts = {});

struct OperandBits {
  int w_bits = 8;
  int x_bits = 8;
  Signedness x_signedness = Signedness::TwosComplement;
};

// act[C,H,W], w[F,C,kh,kw] -> output[F,H',W'].
SimLayerResult simulate_conv2d(const Tensor& act, const Tensor& w, int stride, int padding,
                               const OperandBits& bits, const MacroConfig& cfg,
                               const NoiseSpec& spec, const EngineMode& mode,
                               const SimOptions& opts = {});

struct AttentionResult {
  Tensor output;  // [Tq, d]
  Tensor probs;   // softmax scores [Tq, Tk]
  QuantParams q_params, k_params, v_params, a_params;
  SimLayerResult scores_pass;  // Q stationary, K broadcast
  SimLayerResult values_pass;  // V stationary, A broadcast
};

// Single-head attention softmax(Q Kᵀ / sqrt(d)) V. Q, K, V are signed; the
// post-softmax scores are quantized unsigned. Softmax runs in floating point.
AttentionResult simulate_attention(const Tensor& q, const Tensor& k, const Tensor& v, int bits,
                                   const MacroConfig& cfg, const NoiseSpec& spec,
                                   const EngineMode& mode, const SimOptions& opts = {});

struct EnergyCoefficients {
  double analog_cycle = 0.0;
  double digital_cycle = 0.0;
  std::map<int, double> adc;  // per-conversion energy by ADC bits
};

struct CycleEnergy {
  std::int64_t cycles = 0;
  double energy = 0.0;
};

CycleEnergy estimate_cycles_energy(const CyclePlan& plan, std::size_t tiles,
                                   const EnergyCoefficients& coeffs, int adc_bits);

QuantizedTensor transpose(const QuantizedTensor& m);

}  // namespace acim
