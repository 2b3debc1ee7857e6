#include "acim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <string>

#include "acim/error.hpp"
#include "acim/parallel.hpp"

namespace acim {

void EngineMode::validate() const {
  if (scheme == Scheme::BitSerial && enc_bits != 1)
    throw ConfigError("bit-serial mode requires enc_bits = 1");
  if (scheme == Scheme::BitParallel && enc_bits < 2)
    throw ConfigError("bit-parallel mode requires enc_bits >= 2");
  if (hybrid_boundary && *hybrid_boundary < 1) throw ConfigError("hybrid boundary must be >= 1");
  if (voting) {
    if (voting->boundary < 1) throw ConfigError("voting boundary must be >= 1");
    if (voting->samples < 1) throw ConfigError("voting samples must be >= 1");
  }
}

std::size_t CyclePlan::analog_entries() const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const auto& e) {
    return e.domain == Domain::Analog;
  }));
}

std::size_t CyclePlan::digital_entries() const { return entries.size() - analog_entries(); }

std::int64_t CyclePlan::cycles_per_tile() const {
  std::int64_t n = 0;
  for (const auto& e : entries) n += e.oversample;
  return n;
}

double CyclePlan::analog_ratio() const {
  if (entries.empty()) return 1.0;
  return static_cast<double>(analog_entries()) / static_cast<double>(entries.size());
}

int CyclePlan::shift_levels() const {
  std::set<int> shifts;
  for (const auto& e : entries) shifts.insert(e.shift);
  return static_cast<int>(shifts.size());
}

CyclePlan plan_cycles(int w_bits, int x_bits, Signedness x_signedness, Signedness w_signedness,
                      const EngineMode& mode) {
  mode.validate();
  if (w_bits < 2 || w_bits > 16 || x_bits < 2 || x_bits > 16)
    throw ConfigError("bit widths must be in [2,16]");
  CyclePlan plan;
  plan.w_bits = w_bits;
  plan.act_groups = activation_group_layout(x_bits, x_signedness, mode.enc_bits);
  for (int q = 0; q < w_bits; ++q) {
    const int w_sign = (w_signedness == Signedness::TwosComplement && q == w_bits - 1) ? -1 : 1;
    for (std::size_t g = 0; g < plan.act_groups.size(); ++g) {
      const auto& layout = plan.act_groups[g];
      plan.entries.push_back({q, w_sign, static_cast<int>(g), layout.sign_group ? -1 : 1,
                              q + layout.shift, Domain::Analog, 1});
    }
  }

  std::set<int, std::greater<>> shifts;
  for (const auto& e : plan.entries) shifts.insert(e.shift);
  const auto top_threshold = [&](int levels, const char* what) {
    if (levels > static_cast<int>(shifts.size()))
      throw ConfigError(std::string(what) + " boundary " + std::to_string(levels) +
                        " exceeds the " + std::to_string(shifts.size()) + " available shift levels");
    return *std::next(shifts.begin(), levels - 1);
  };
  if (mode.hybrid_boundary) {
    const int lowest = top_threshold(*mode.hybrid_boundary, "hybrid");
    for (auto& e : plan.entries)
      if (e.shift >= lowest) e.domain = Domain::Digital;
  }
  if (mode.voting) {
    const int lowest = top_threshold(mode.voting->boundary, "voting");
    for (auto& e : plan.entries)
      if (e.shift >= lowest && e.domain == Domain::Analog) e.oversample = mode.voting->samples;
  }
  return plan;
}

namespace {

std::int64_t dot_levels(const std::uint8_t* w, const std::int32_t* a, std::size_t n) {
  std::int64_t acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += static_cast<std::int64_t>(w[i]) * a[i];
  return acc;
}

}  // namespace

SimLayerResult simulate_matmul(const QuantizedTensor& act, const QuantizedTensor& w,
                               const MacroConfig& cfg, const NoiseSpec& spec,
                               const EngineMode& mode, const SimOptions& opts) {
  cfg.validate();
  spec.validate();
  mode.validate();
  if (mode.enc_bits != cfg.enc_bits)
    throw ConfigError("engine mode encoding width " + std::to_string(mode.enc_bits) +
                      " differs from macro enc_bits " + std::to_string(cfg.enc_bits));
  if (act.shape.size() != 2 || w.shape.size() != 2)
    throw ShapeError("simulate_matmul expects act[B,D] and w[D,M]");
  const std::size_t batch = act.shape[0], depth = act.shape[1], cols = w.shape[1];
  if (w.shape[0] != depth)
    throw ShapeError("inner dimension mismatch: act has " + std::to_string(depth) +
                     ", weights have " + std::to_string(w.shape[0]));

  const CyclePlan plan = plan_cycles(w.params.bits, act.params.bits, act.params.signedness,
                                     w.params.signedness, mode);
  const ActivationGroups groups = encode_activation_groups(decompose_bits(act), mode.enc_bits);
  const BitPlanes wplanes = decompose_bits(w);

  // Column-major copies of the weight planes so each CBL is contiguous.
  std::vector<std::vector<std::uint8_t>> wcols(wplanes.planes.size(),
                                               std::vector<std::uint8_t>(depth * cols));
  for (std::size_t q = 0; q < wplanes.planes.size(); ++q)
    for (std::size_t d = 0; d < depth; ++d)
      for (std::size_t m = 0; m < cols; ++m) wcols[q][m * depth + d] = wplanes.planes[q][d * cols + m];

  const auto rows = static_cast<std::size_t>(cfg.rows);
  const std::size_t tiles = (depth + rows - 1) / rows;
  const bool noiseless = spec.noiseless();
  const auto levels = static_cast<std::size_t>(cfg.full_scale()) + 1;

  std::vector<double> acc(batch * cols, 0.0);
  const int workers = std::max(1, opts.threads);
  std::vector<std::vector<std::vector<std::uint64_t>>> local_hist;
  if (opts.record_histograms)
    local_hist.assign(static_cast<std::size_t>(workers),
                      std::vector<std::vector<std::uint64_t>>(plan.entries.size(),
                                                              std::vector<std::uint64_t>(levels, 0)));

  parallel_for(cols, workers, [&](std::size_t worker, std::size_t begin, std::size_t end) {
    RngContext ctx;
    ctx.layer = opts.layer_id;
    for (std::size_t m = begin; m < end; ++m) {
      ctx.column = m;
      for (std::size_t t = 0; t < tiles; ++t) {
        const std::size_t start = t * rows;
        const std::size_t n = std::min(rows, depth - start);
        ctx.tile = t;
        for (std::size_t b = 0; b < batch; ++b) {
          ctx.batch = opts.batch_offset + b;
          double sum = 0.0;
          for (std::size_t ei = 0; ei < plan.entries.size(); ++ei) {
            const auto& e = plan.entries[ei];
            const std::int64_t level =
                dot_levels(wcols[static_cast<std::size_t>(e.w_bit)].data() + m * depth + start,
                           groups.groups[static_cast<std::size_t>(e.act_group)].values.data() +
                               b * depth + start,
                           n);
            if (opts.record_histograms) ++local_hist[worker][ei][static_cast<std::size_t>(level)];
            double value;
            if (e.domain == Domain::Digital) {
              value = static_cast<double>(level);
            } else {
              ctx.w_bit = static_cast<std::uint64_t>(e.w_bit);
              ctx.act_group = static_cast<std::uint64_t>(e.act_group);
              ctx.sample = 0;
              const CblLevel ideal{static_cast<double>(level)};
              double mac;
              if (e.oversample > 1)
                mac = majority_vote_readout(ideal, e.oversample, spec, cfg, ctx).mac_counts;
              else if (noiseless)
                mac = adc_readout(ideal, cfg).mac_counts;
              else
                mac = noisy_readout(ideal, spec, cfg, ctx).mac_counts;
              value = reconstruct_counts(mac, cfg);
            }
            sum += e.sign() * std::ldexp(value, e.shift);
          }
          acc[b * cols + m] += sum;
        }
      }
    }
  });

  SimLayerResult result;
  result.tiles = tiles;
  result.cycle_count = plan.cycles_per_tile();
  result.analog_ratio = plan.analog_ratio();
  Tensor out({batch, cols});
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = acc[i] * act.params.scale * w.params.scale;
  result.output = std::move(out);

  if (opts.record_histograms) {
    for (std::size_t ei = 0; ei < plan.entries.size(); ++ei) {
      const auto& e = plan.entries[ei];
      CycleHistogram h{e.w_bit, e.act_group, e.shift, std::vector<std::uint64_t>(levels, 0)};
      for (const auto& worker_hist : local_hist)
        for (std::size_t l = 0; l < levels; ++l) h.counts[l] += worker_hist[ei][l];
      result.histograms.push_back(std::move(h));
    }
  }
  return result;
}

SimLayerResult simulate_linear(const QuantizedTensor& act, const QuantizedTensor& w,
                               const std::optional<Tensor>& bias, const MacroConfig& cfg,
                               const NoiseSpec& spec, const EngineMode& mode,
                               const SimOptions& opts) {
  const std::size_t cols = w.shape.size() == 2 ? w.shape[1] : 0;
  if (bias && bias->size() != cols)
    throw ShapeError("bias length " + std::to_string(bias->size()) + " does not match " +
                     std::to_string(cols) + " output columns");
  SimLayerResult r = simulate_matmul(act, w, cfg, spec, mode, opts);
  if (bias) {
    auto out = r.output.mutable_data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += (*bias)[i % cols];
  }
  return r;
}

namespace {

QuantizedTensor codes_to_matrix(const Tensor& codes, const QuantParams& params) {
  std::vector<std::int32_t> out(codes.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::int32_t>(codes[i]);
  return {codes.shape(), std::move(out), params};
}

Tensor codes_as_tensor(const QuantizedTensor& q) {
  std::vector<double> data(q.codes.begin(), q.codes.end());
  return {q.shape, std::move(data)};
}

}  // namespace

QuantizedTensor transpose(const QuantizedTensor& m) {
  if (m.shape.size() != 2) throw ShapeError("transpose expects a rank-2 tensor");
  const std::size_t r = m.shape[0], c = m.shape[1];
  std::vector<std::int32_t> out(m.codes.size());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = m.codes[i * c + j];
  return {{c, r}, std::move(out), m.params};
}

SimLayerResult simulate_conv2d(const Tensor& act, const Tensor& w, int stride, int padding,
                               const OperandBits& bits, const MacroConfig& cfg,
                               const NoiseSpec& spec, const EngineMode& mode,
                               const SimOptions& opts) {
  if (act.rank() != 3) throw ShapeError("conv2d input must be [C,H,W]");
  if (w.rank() != 4) throw ShapeError("conv2d weights must be [F,C,kh,kw]");
  if (w.dim(1) != act.dim(0)) throw ShapeError("conv2d channel mismatch");
  const std::size_t filters = w.dim(0);
  const Shape2D kernel{w.dim(2), w.dim(3)};
  const auto geo = conv_output_geometry(act.dim(1), act.dim(2), kernel, stride, padding);

  const QuantizedTensor qa = quantize(act, bits.x_bits, bits.x_signedness);
  const QuantizedTensor qw = quantize(w, bits.w_bits, Signedness::TwosComplement);
  const QuantizedTensor cols = codes_to_matrix(im2col(codes_as_tensor(qa), kernel, stride, padding),
                                               qa.params);
  const std::size_t fan_in = w.size() / filters;
  QuantizedTensor wmat = transpose(QuantizedTensor({filters, fan_in}, qw.codes, qw.params));

  SimLayerResult r = simulate_matmul(cols, wmat, cfg, spec, mode, opts);
  const std::size_t patches = geo.out_h * geo.out_w;
  Tensor out({filters, geo.out_h, geo.out_w});
  for (std::size_t p = 0; p < patches; ++p)
    for (std::size_t f = 0; f < filters; ++f) out[f * patches + p] = r.output.at(p, f);
  r.output = std::move(out);
  return r;
}

AttentionResult simulate_attention(const Tensor& q, const Tensor& k, const Tensor& v, int bits,
                                   const MacroConfig& cfg, const NoiseSpec& spec,
                                   const EngineMode& mode, const SimOptions& opts) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2)
    throw ShapeError("attention expects rank-2 Q, K, V");
  if (q.dim(1) != k.dim(1)) throw ShapeError("Q and K feature dimensions differ");
  if (k.dim(0) != v.dim(0)) throw ShapeError("K and V sequence lengths differ");
  const std::size_t tq = q.dim(0), tk = k.dim(0);

  AttentionResult res;
  const QuantizedTensor qq = quantize(q, bits, Signedness::TwosComplement);
  const QuantizedTensor kq = quantize(k, bits, Signedness::TwosComplement);
  const QuantizedTensor vq = quantize(v, bits, Signedness::TwosComplement);
  res.q_params = qq.params;
  res.k_params = kq.params;
  res.v_params = vq.params;

  // Q resident in the array, K rows broadcast: yields (Q Kᵀ)ᵀ = K Qᵀ.
  SimOptions score_opts = opts;
  res.scores_pass = simulate_matmul(kq, transpose(qq), cfg, spec, mode, score_opts);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.dim(1)));

  Tensor probs({tq, tk});
  for (std::size_t i = 0; i < tq; ++i) {
    double peak = -INFINITY;
    for (std::size_t j = 0; j < tk; ++j) {
      probs.at(i, j) = res.scores_pass.output.at(j, i) * inv_sqrt_d;
      peak = std::max(peak, probs.at(i, j));
    }
    double z = 0.0;
    for (std::size_t j = 0; j < tk; ++j) z += (probs.at(i, j) = std::exp(probs.at(i, j) - peak));
    for (std::size_t j = 0; j < tk; ++j) probs.at(i, j) /= z;
  }

  const QuantizedTensor aq = quantize(probs, bits, Signedness::Unsigned);
  res.a_params = aq.params;
  SimOptions value_opts = opts;
  value_opts.layer_id = opts.layer_id + 1;
  res.values_pass = simulate_matmul(aq, vq, cfg, spec, mode, value_opts);
  res.output = res.values_pass.output;
  res.probs = std::move(probs);
  return res;
}

CycleEnergy estimate_cycles_energy(const CyclePlan& plan, std::size_t tiles,
                                   const EnergyCoefficients& coeffs, int adc_bits) {
  if (coeffs.analog_cycle < 0.0 || coeffs.digital_cycle < 0.0)
    throw DomainError("energy coefficients must be >= 0");
  const auto adc = coeffs.adc.find(adc_bits);
  if (adc == coeffs.adc.end())
    throw ConfigError("no ADC energy coefficient for " + std::to_string(adc_bits) + " bits");
  if (adc->second < 0.0) throw DomainError("energy coefficients must be >= 0");
  CycleEnergy out;
  double per_tile = 0.0;
  for (const auto& e : plan.entries) {
    if (e.domain == Domain::Digital)
      per_tile += coeffs.digital_cycle;
    else
      per_tile += e.oversample * (coeffs.analog_cycle + adc->second);
  }
  out.cycles = static_cast<std::int64_t>(tiles) * plan.cycles_per_tile();
  out.energy = static_cast<double>(tiles) * per_tile;
  return out;
}

}  // namespace acim
