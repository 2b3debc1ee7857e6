#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "acim/dataset.hpp"
#include "acim/engine.hpp"
#include "acim/quant.hpp"
#include "acim/tensor.hpp"

namespace acim {

struct LinearLayer {
  Tensor weights;  // [in, out]
  Tensor bias;     // [out]

  std::size_t in() const { return weights.dim(0); }
  std::size_t out() const { return weights.dim(1); }
};

struct ReluLayer {};

using Layer = std::variant<LinearLayer, ReluLayer>;

struct TinyModel {
  std::vector<Layer> layers;
  int w_bits = 8;
  int x_bits = 8;
  double nat_sigma = 0.0;

  void validate() const;
  std::size_t input_dim() const;
  std::size_t output_dim() const;
};

// Linear/ReLU stack with He-initialised weights, e.g. widths {16, 64, 4}.
TinyModel make_mlp(const std::vector<std::size_t>& widths, std::uint64_t seed);

// Activations entering a Linear layer that follows a ReLU are non-negative
// and quantized unsigned; every other operand is 2's complement.
Signedness input_signedness(const TinyModel& model, std::size_t layer);

struct TrainConfig {
  double lr = 0.05;
  int epochs = 50;
  int batch = 32;
  std::uint64_t seed = 1;
  int w_bits = 8;
  int x_bits = 8;
  double nat_sigma = 0.0;

  void validate() const;
};

enum class ForwardMode { Float, Qat, Nat };

struct NatNoise {
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t pass = 0;  // distinguishes forward passes
};

Tensor forward_float(const TinyModel& model, const Tensor& batch);
Tensor forward_qat(const TinyModel& model, const Tensor& batch);
// Fake-quantized forward with every Linear matmul output O replaced by
// O * (1 + η), η ~ N(0, σ²) drawn per element.
Tensor forward_nat(const TinyModel& model, const Tensor& batch, const NatNoise& noise);

// Straight-through mask for a fake quantizer: 1 where x/scale rounds inside
// the representable range, 0 where it clips.
std::vector<double> ste_mask(const Tensor& x, const QuantParams& params);

struct Gradients {
  std::vector<Tensor> weights;  // one entry per layer; empty Tensor for ReLU
  std::vector<Tensor> bias;
};

struct LossAndGrad {
  double loss = 0.0;
  Gradients grads;
};

// Mean softmax cross-entropy over the batch and its gradient w.r.t. every
// parameter.
LossAndGrad loss_and_gradients(const TinyModel& model, const Tensor& x,
                               const std::vector<int>& labels, ForwardMode mode,
                               const NatNoise& noise = {});

double cross_entropy(const Tensor& logits, const std::vector<int>& labels);

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
};

struct TrainResult {
  TinyModel model;
  std::vector<EpochStats> curve;
};

// Minibatch SGD on fake-quantized forwards (NAT when cfg.nat_sigma > 0).
// Throws TrainingError when the loss stops being finite.
TrainResult train(TinyModel model, const Dataset& data, const TrainConfig& cfg);

double accuracy(const Tensor& logits, const std::vector<int>& labels);

struct EvalOptions {
  std::size_t batch = 64;  // per-tensor quantization granularity
  int threads = 1;
};

double evaluate_float(const TinyModel& model, const Dataset& data);
double evaluate_digital(const TinyModel& model, const Dataset& data, const EvalOptions& opts = {});

struct EngineEval {
  double accuracy = 0.0;
  Tensor logits;
  std::int64_t cycles = 0;  // total conversions over all layers and tiles, one inference batch
  double analog_ratio = 1.0;
};

EngineEval evaluate_on_engine(const TinyModel& model, const Dataset& data, const MacroConfig& cfg,
                              const NoiseSpec& spec, const EngineMode& mode,
                              const EvalOptions& opts = {});

}  // namespace acim
