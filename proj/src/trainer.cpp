#include "acim/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "acim/error.hpp"
#include "acim/rng.hpp"

namespace acim {

void TinyModel::validate() const {
  if (layers.empty()) throw ShapeError("model has no layers");
  std::size_t width = 0;
  bool any_linear = false;
  for (const auto& layer : layers) {
    if (const auto* lin = std::get_if<LinearLayer>(&layer)) {
      if (lin->weights.rank() != 2 || lin->bias.size() != lin->out())
        throw ShapeError("linear layer weights/bias shapes are inconsistent");
      if (any_linear && lin->in() != width)
        throw ShapeError("layer input width " + std::to_string(lin->in()) +
                         " does not match previous output " + std::to_string(width));
      width = lin->out();
      any_linear = true;
    }
  }
  if (!any_linear) throw ShapeError("model has no linear layers");
  if (w_bits < 2 || w_bits > 16 || x_bits < 2 || x_bits > 16)
    throw ConfigError("model bit widths must be in [2,16]");
  if (!(nat_sigma >= 0.0)) throw ConfigError("nat_sigma must be >= 0");
}

std::size_t TinyModel::input_dim() const {
  for (const auto& layer : layers)
    if (const auto* lin = std::get_if<LinearLayer>(&layer)) return lin->in();
  return 0;
}

std::size_t TinyModel::output_dim() const {
  for (auto it = layers.rbegin(); it != layers.rend(); ++it)
    if (const auto* lin = std::get_if<LinearLayer>(&*it)) return lin->out();
  return 0;
}

TinyModel make_mlp(const std::vector<std::size_t>& widths, std::uint64_t seed) {
  if (widths.size() < 2) throw ConfigError("an MLP needs at least input and output widths");
  TinyModel model;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    RngContext ctx;
    ctx.layer = l;
    CounterRng rng(context_key(seed, ctx, RngStream::Training));
    const std::size_t in = widths[l], out = widths[l + 1];
    const double stddev = std::sqrt(2.0 / static_cast<double>(in));
    std::vector<double> w(in * out);
    for (auto& v : w) v = stddev * rng.normal();
    model.layers.emplace_back(LinearLayer{Tensor({in, out}, std::move(w)), Tensor({out})});
    if (l + 2 < widths.size()) model.layers.emplace_back(ReluLayer{});
  }
  return model;
}

Signedness input_signedness(const TinyModel& model, std::size_t layer) {
  if (layer > 0 && std::holds_alternative<ReluLayer>(model.layers.at(layer - 1)))
    return Signedness::Unsigned;
  return Signedness::TwosComplement;
}

void TrainConfig::validate() const {
  if (!(lr >= 0.0)) throw ConfigError("learning rate must be >= 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (w_bits < 2 || w_bits > 16 || x_bits < 2 || x_bits > 16)
    throw ConfigError("bit widths must be in [2,16]");
  if (!(nat_sigma >= 0.0)) throw ConfigError("nat_sigma must be >= 0");
}

std::vector<double> ste_mask(const Tensor& x, const QuantParams& params) {
  const double lo = (params.signedness == Signedness::Unsigned ? 0 : -params.max_code()) - 0.5;
  const double hi = params.max_code() + 0.5;
  std::vector<double> mask(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double u = x[i] / params.scale;
    mask[i] = (u >= lo && u <= hi) ? 1.0 : 0.0;
  }
  return mask;
}

namespace {

struct LinearTrace {
  Tensor x_hat;  // operand actually multiplied (fake-quantized unless Float)
  Tensor w_hat;
  std::vector<double> x_mask;
  std::vector<double> w_mask;
  std::vector<double> gain;  // 1 + η per output element, empty without NAT
};

struct ReluTrace {
  std::vector<std::uint8_t> active;
};

struct ForwardTrace {
  std::vector<LinearTrace> linear;  // indexed by layer; unused entries empty
  std::vector<ReluTrace> relu;
  Tensor logits;
};

struct FakeQuant {
  Tensor value;
  std::vector<double> mask;
};

FakeQuant fake_quantize(const Tensor& t, int bits, Signedness signedness) {
  const QuantizedTensor q = quantize(t, bits, signedness);
  return {dequantize(q), ste_mask(t, q.params)};
}

ForwardTrace run_forward(const TinyModel& model, const Tensor& x, ForwardMode mode,
                         const NatNoise& noise) {
  if (x.rank() != 2 || x.dim(1) != model.input_dim())
    throw ShapeError("input batch must be [N, " + std::to_string(model.input_dim()) + "]");
  ForwardTrace trace;
  trace.linear.resize(model.layers.size());
  trace.relu.resize(model.layers.size());
  Tensor h = x;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    if (const auto* lin = std::get_if<LinearLayer>(&model.layers[l])) {
      LinearTrace& lt = trace.linear[l];
      if (mode == ForwardMode::Float) {
        lt.x_hat = h;
        lt.w_hat = lin->weights;
      } else {
        auto fx = fake_quantize(h, model.x_bits, input_signedness(model, l));
        auto fw = fake_quantize(lin->weights, model.w_bits, Signedness::TwosComplement);
        lt.x_hat = std::move(fx.value);
        lt.x_mask = std::move(fx.mask);
        lt.w_hat = std::move(fw.value);
        lt.w_mask = std::move(fw.mask);
      }
      Tensor y = matmul(lt.x_hat, lt.w_hat);
      if (mode == ForwardMode::Nat && noise.sigma > 0.0) {
        RngContext ctx;
        ctx.layer = l;
        ctx.sample = noise.pass;
        CounterRng rng(context_key(noise.seed, ctx, RngStream::Training));
        lt.gain.resize(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
          lt.gain[i] = 1.0 + noise.sigma * rng.normal();
          y[i] *= lt.gain[i];
        }
      }
      const std::size_t out = lin->out();
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += lin->bias[i % out];
      h = std::move(y);
    } else {
      ReluTrace& rt = trace.relu[l];
      rt.active.resize(h.size());
      for (std::size_t i = 0; i < h.size(); ++i) {
        rt.active[i] = h[i] > 0.0;
        if (!rt.active[i]) h[i] = 0.0;
      }
    }
  }
  trace.logits = std::move(h);
  return trace;
}

}  // namespace

Tensor forward_float(const TinyModel& model, const Tensor& batch) {
  return run_forward(model, batch, ForwardMode::Float, {}).logits;
}

Tensor forward_qat(const TinyModel& model, const Tensor& batch) {
  return run_forward(model, batch, ForwardMode::Qat, {}).logits;
}

Tensor forward_nat(const TinyModel& model, const Tensor& batch, const NatNoise& noise) {
  if (!(noise.sigma >= 0.0)) throw DomainError("NAT sigma must be >= 0");
  return run_forward(model, batch, ForwardMode::Nat, noise).logits;
}

namespace {

// Row-wise softmax probabilities and mean cross-entropy.
double softmax_xent(const Tensor& logits, const std::vector<int>& labels, Tensor* probs) {
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  if (labels.size() != n) throw ShapeError("label count does not match batch");
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double peak = logits.at(i, 0);
    for (std::size_t j = 1; j < c; ++j) peak = std::max(peak, logits.at(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(logits.at(i, j) - peak);
    const auto label = static_cast<std::size_t>(labels[i]);
    if (label >= c) throw ShapeError("label outside the model's class range");
    loss += std::log(z) - (logits.at(i, label) - peak);
    if (probs)
      for (std::size_t j = 0; j < c; ++j) probs->at(i, j) = std::exp(logits.at(i, j) - peak) / z;
  }
  return loss / static_cast<double>(n);
}

}  // namespace

double cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  return softmax_xent(logits, labels, nullptr);
}

LossAndGrad loss_and_gradients(const TinyModel& model, const Tensor& x,
                               const std::vector<int>& labels, ForwardMode mode,
                               const NatNoise& noise) {
  const ForwardTrace trace = run_forward(model, x, mode, noise);
  const std::size_t n = x.dim(0);
  Tensor grad(trace.logits.shape());
  LossAndGrad out;
  out.loss = softmax_xent(trace.logits, labels, &grad);
  for (std::size_t i = 0; i < n; ++i) grad.at(i, static_cast<std::size_t>(labels[i])) -= 1.0;
  for (auto& g : grad.mutable_data()) g /= static_cast<double>(n);

  out.grads.weights.resize(model.layers.size());
  out.grads.bias.resize(model.layers.size());
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    if (const auto* lin = std::get_if<LinearLayer>(&model.layers[l])) {
      const LinearTrace& lt = trace.linear[l];
      const std::size_t out_w = lin->out();
      Tensor db({out_w});
      for (std::size_t i = 0; i < grad.size(); ++i) db[i % out_w] += grad[i];
      Tensor gmm = grad;
      if (!lt.gain.empty())
        for (std::size_t i = 0; i < gmm.size(); ++i) gmm[i] *= lt.gain[i];
      Tensor dw = matmul(transpose(lt.x_hat), gmm);
      if (!lt.w_mask.empty())
        for (std::size_t i = 0; i < dw.size(); ++i) dw[i] *= lt.w_mask[i];
      Tensor dx = matmul(gmm, transpose(lt.w_hat));
      if (!lt.x_mask.empty())
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= lt.x_mask[i];
      out.grads.weights[l] = std::move(dw);
      out.grads.bias[l] = std::move(db);
      grad = std::move(dx);
    } else {
      const auto& active = trace.relu[l].active;
      for (std::size_t i = 0; i < grad.size(); ++i)
        if (!active[i]) grad[i] = 0.0;
    }
  }
  return out;
}

double accuracy(const Tensor& logits, const std::vector<int>& labels) {
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  if (labels.size() != n) throw ShapeError("label count does not match batch");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j)
      if (logits.at(i, j) > logits.at(i, best)) best = j;
    correct += static_cast<int>(best) == labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

TrainResult train(TinyModel model, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  model.w_bits = cfg.w_bits;
  model.x_bits = cfg.x_bits;
  model.nat_sigma = cfg.nat_sigma;
  model.validate();
  const std::size_t n = data.size();
  const std::size_t f = data.feature_dim();
  const auto batch = static_cast<std::size_t>(cfg.batch);
  const ForwardMode mode = cfg.nat_sigma > 0.0 ? ForwardMode::Nat : ForwardMode::Qat;

  TrainResult result;
  std::vector<std::size_t> order(n);
  std::uint64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    RngContext shuffle_ctx;
    shuffle_ctx.sample = static_cast<std::uint64_t>(epoch);
    CounterRng shuffle(context_key(cfg.seed, shuffle_ctx, RngStream::Operands));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.next() % i]);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t m = std::min(batch, n - start);
      std::vector<double> xb(m * f);
      std::vector<int> yb(m);
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t src = order[start + i];
        std::copy_n(data.features.data().begin() + static_cast<std::ptrdiff_t>(src * f), f,
                    xb.begin() + static_cast<std::ptrdiff_t>(i * f));
        yb[i] = data.labels[src];
      }
      const NatNoise noise{cfg.nat_sigma, cfg.seed, step++};
      LossAndGrad lg;
      try {
        lg = loss_and_gradients(model, Tensor({m, f}, std::move(xb)), yb, mode, noise);
      } catch (const DomainError& e) {
        // Overflowing activations surface as non-finite tensors.
        throw TrainingError(std::string("training became numerically invalid: ") + e.what(), epoch);
      }
      if (!std::isfinite(lg.loss)) throw TrainingError("training loss is not finite", epoch);
      loss_sum += lg.loss * static_cast<double>(m);
      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        auto* lin = std::get_if<LinearLayer>(&model.layers[l]);
        if (!lin) continue;
        auto w = lin->weights.mutable_data();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= cfg.lr * lg.grads.weights[l][i];
        auto b = lin->bias.mutable_data();
        for (std::size_t i = 0; i < b.size(); ++i) b[i] -= cfg.lr * lg.grads.bias[l][i];
        const auto finite = [](double v) { return std::isfinite(v); };
        if (!std::all_of(w.begin(), w.end(), finite) || !std::all_of(b.begin(), b.end(), finite))
          throw TrainingError("parameters diverged to non-finite values", epoch);
      }
    }
    const double mean_loss = loss_sum / static_cast<double>(n);
    if (!std::isfinite(mean_loss)) throw TrainingError("training loss is not finite", epoch);
    result.curve.push_back({epoch, mean_loss, accuracy(forward_qat(model, data.features), data.labels)});
  }
  result.model = std::move(model);
  return result;
}

double evaluate_float(const TinyModel& model, const Dataset& data) {
  return accuracy(forward_float(model, data.features), data.labels);
}

double evaluate_digital(const TinyModel& model, const Dataset& data, const EvalOptions& opts) {
  const std::size_t step = std::max<std::size_t>(1, opts.batch);
  std::size_t correct = 0;
  for (std::size_t start = 0; start < data.size(); start += step) {
    const Dataset chunk = data.slice(start, start + step);
    correct += static_cast<std::size_t>(
        std::llround(accuracy(forward_qat(model, chunk.features), chunk.labels) * chunk.size()));
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

EngineEval evaluate_on_engine(const TinyModel& model, const Dataset& data, const MacroConfig& cfg,
                              const NoiseSpec& spec, const EngineMode& mode,
                              const EvalOptions& opts) {
  model.validate();
  if (data.feature_dim() != model.input_dim())
    throw ShapeError("dataset feature width does not match the model input");
  const std::size_t step = std::max<std::size_t>(1, opts.batch);

  // Weights are stationary: quantize once.
  std::vector<std::optional<QuantizedTensor>> qweights(model.layers.size());
  EngineEval eval;
  double analog_weighted = 0.0, entries_weighted = 0.0;
  for (std::size_t l = 0; l < model.layers.size(); ++l)
    if (const auto* lin = std::get_if<LinearLayer>(&model.layers[l])) {
      qweights[l] = quantize(lin->weights, model.w_bits, Signedness::TwosComplement);
      const CyclePlan plan = plan_cycles(model.w_bits, model.x_bits, input_signedness(model, l),
                                         Signedness::TwosComplement, mode);
      const auto tiles = static_cast<double>((lin->in() + static_cast<std::size_t>(cfg.rows) - 1) /
                                             static_cast<std::size_t>(cfg.rows));
      eval.cycles += static_cast<std::int64_t>(tiles) * plan.cycles_per_tile();
      analog_weighted += tiles * static_cast<double>(plan.analog_entries());
      entries_weighted += tiles * static_cast<double>(plan.entries.size());
    }
  eval.analog_ratio = entries_weighted > 0.0 ? analog_weighted / entries_weighted : 1.0;

  std::vector<double> logits;
  logits.reserve(data.size() * model.output_dim());
  for (std::size_t start = 0; start < data.size(); start += step) {
    const Dataset chunk = data.slice(start, start + step);
    Tensor h = chunk.features;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      if (const auto* lin = std::get_if<LinearLayer>(&model.layers[l])) {
        SimOptions so;
        so.layer_id = l;
        so.batch_offset = start;
        so.threads = opts.threads;
        const QuantizedTensor qa = quantize(h, model.x_bits, input_signedness(model, l));
        h = simulate_linear(qa, *qweights[l], lin->bias, cfg, spec, mode, so).output;
      } else {
        for (auto& v : h.mutable_data()) v = std::max(v, 0.0);
      }
    }
    logits.insert(logits.end(), h.data().begin(), h.data().end());
  }
  eval.logits = Tensor({data.size(), model.output_dim()}, std::move(logits));
  eval.accuracy = accuracy(eval.logits, data.labels);
  return eval;
}

}  // namespace acim
