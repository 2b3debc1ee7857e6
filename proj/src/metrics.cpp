#include "acim/metrics.hpp"

#include <cmath>
#include <limits>

#include "acim/error.hpp"

namespace acim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) throw ShapeError(std::string(what) + ": shapes differ");
}

double variance(const Tensor& a, const Tensor* minus = nullptr) {
  const std::size_t n = a.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - (minus ? (*minus)[i] : 0.0);
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - (minus ? (*minus)[i] : 0.0) - mean;
    ss += d * d;
  }
  return ss / static_cast<double>(n);
}

double ratio_term(double signal_var, double error_var) {
  return error_var == 0.0 ? kInf : signal_var / error_var;
}

double to_db(double ratio) { return std::isinf(ratio) ? kInf : 10.0 * std::log10(ratio); }

}  // namespace

CsnrReport csnr_measure(const Tensor& ideal, const Tensor& simulated) {
  require_same_shape(ideal, simulated, "csnr_measure");
  CsnrReport r;
  r.trials = ideal.size();
  for (std::size_t i = 0; i < ideal.size(); ++i) {
    const double e = ideal[i] - simulated[i];
    r.signal_power += ideal[i] * ideal[i];
    r.noise_power += e * e;
  }
  if (r.noise_power == 0.0)
    r.db = kInf;
  else if (r.signal_power == 0.0)
    r.db = -kInf;
  else
    r.db = 10.0 * std::log10(r.signal_power / r.noise_power);
  return r;
}

VarianceCsnr csnr_variance_form(const Tensor& ideal, const Tensor& quant_in,
                                const Tensor& quant_out, const Tensor& noisy) {
  require_same_shape(ideal, quant_in, "csnr_variance_form");
  require_same_shape(ideal, quant_out, "csnr_variance_form");
  require_same_shape(ideal, noisy, "csnr_variance_form");
  const double signal = variance(ideal);
  VarianceCsnr r;
  r.input_term = ratio_term(signal, variance(quant_in, &ideal));
  r.output_term = ratio_term(signal, variance(quant_out, &quant_in));
  r.noise_term = ratio_term(signal, variance(noisy, &quant_out));

  const auto finite_sum = [](std::initializer_list<double> terms) {
    double sum = 0.0;
    bool any = false;
    for (double t : terms)
      if (!std::isinf(t)) {
        sum += t;
        any = true;
      }
    return any ? sum : kInf;
  };
  r.sqnr = finite_sum({r.input_term, r.output_term});
  r.csnr = finite_sum({r.input_term, r.output_term, r.noise_term});
  r.sqnr_db = to_db(r.sqnr);
  r.csnr_db = to_db(r.csnr);
  return r;
}

std::uint64_t MacHistogram::total_mass() const {
  std::uint64_t total = 0;
  for (const auto& c : cycles)
    for (auto n : c.counts) total += n;
  return total;
}

double MacHistogram::mean_level(std::size_t entry) const {
  const auto& counts = cycles.at(entry).counts;
  double mass = 0.0, weighted = 0.0;
  for (std::size_t l = 0; l < counts.size(); ++l) {
    mass += static_cast<double>(counts[l]);
    weighted += static_cast<double>(l) * static_cast<double>(counts[l]);
  }
  return mass > 0.0 ? weighted / mass : 0.0;
}

std::int64_t MacHistogram::max_level() const {
  std::int64_t top = 0;
  for (const auto& c : cycles)
    for (std::size_t l = 0; l < c.counts.size(); ++l)
      if (c.counts[l] && static_cast<std::int64_t>(l) > top) top = static_cast<std::int64_t>(l);
  return top;
}

MacHistogram mac_distribution(const QuantizedTensor& act, const QuantizedTensor& w,
                              const MacroConfig& cfg, const EngineMode& mode, int threads) {
  SimOptions opts;
  opts.record_histograms = true;
  opts.threads = threads;
  const SimLayerResult r = simulate_matmul(act, w, cfg, NoiseSpec{}, mode, opts);
  MacHistogram h;
  h.cfg = cfg;
  h.tiles = r.tiles;
  h.batch = act.shape[0];
  h.columns = w.shape[1];
  h.cycles = r.histograms;
  return h;
}

double expected_mac(double p_w, double p_x, int rows) {
  if (p_w < 0.0 || p_w > 1.0 || p_x < 0.0 || p_x > 1.0)
    throw DomainError("bit probabilities must lie in [0,1]");
  return rows * p_w * p_x;
}

std::vector<LinearityPoint> linearity_sweep(const MacroConfig& cfg, const NoiseSpec& spec,
                                            const LinearityOptions& opts) {
  cfg.validate();
  spec.validate();
  if (opts.trials < 100) throw DomainError("linearity sweep needs at least 100 trials");
  if (opts.stride < 1) throw DomainError("linearity stride must be >= 1");
  if (opts.voting_samples < 1) throw DomainError("voting samples must be >= 1");
  const double delta = cfg.lsb();
  std::vector<LinearityPoint> out;
  for (std::int64_t level = 0; level <= cfg.full_scale(); level += opts.stride) {
    const CblLevel ideal{static_cast<double>(level)};
    LinearityPoint p;
    p.level = level;
    p.ideal_code = adc_readout(ideal, cfg).code;
    double code_sum = 0.0, code_sq = 0.0, an_sum = 0.0, an_sq = 0.0;
    for (int t = 0; t < opts.trials; ++t) {
      RngContext ctx;
      ctx.batch = static_cast<std::uint64_t>(t);
      const double code =
          opts.voting_samples > 1
              ? majority_vote_readout(ideal, opts.voting_samples, spec, cfg, ctx).code
              : static_cast<double>(noisy_readout(ideal, spec, cfg, ctx).code);
      const double analog = (analog_level(ideal, spec, cfg, ctx).value - ideal.value) / delta;
      code_sum += code;
      code_sq += code * code;
      an_sum += analog;
      an_sq += analog * analog;
    }
    const double n = opts.trials;
    p.mean_code = code_sum / n;
    p.code_sigma = std::sqrt(std::max(0.0, (code_sq - code_sum * code_sum / n) / (n - 1)));
    p.analog_sigma = std::sqrt(std::max(0.0, (an_sq - an_sum * an_sum / n) / (n - 1)));
    out.push_back(p);
  }
  return out;
}

std::map<std::int32_t, std::uint64_t> error_histogram(const MacroConfig& cfg,
                                                      const NoiseSpec& spec, int trials) {
  cfg.validate();
  spec.validate();
  if (trials < 1000) throw DomainError("error histogram needs at least 1000 trials");
  const auto rows = static_cast<std::size_t>(cfg.rows);
  const std::uint64_t act_levels = std::uint64_t{1} << cfg.enc_bits;
  std::vector<std::uint8_t> w(rows);
  std::vector<std::int32_t> a(rows);
  std::map<std::int32_t, std::uint64_t> hist;
  for (int t = 0; t < trials; ++t) {
    RngContext ctx;
    ctx.batch = static_cast<std::uint64_t>(t);
    CounterRng operands(context_key(spec.seed, ctx, RngStream::Operands));
    for (std::size_t i = 0; i < rows; ++i) {
      w[i] = static_cast<std::uint8_t>(operands.next() & 1u);
      a[i] = static_cast<std::int32_t>(operands.next() % act_levels);
    }
    const CblLevel ideal = ideal_level(w, a, cfg);
    const std::int32_t reference = adc_readout(ideal, cfg).code;
    ++hist[noisy_readout(ideal, spec, cfg, ctx).code - reference];
  }
  return hist;
}

double histogram_mean(const std::map<std::int32_t, std::uint64_t>& hist) {
  double mass = 0.0, weighted = 0.0;
  for (const auto& [err, n] : hist) {
    mass += static_cast<double>(n);
    weighted += static_cast<double>(err) * static_cast<double>(n);
  }
  return mass > 0.0 ? weighted / mass : 0.0;
}

}  // namespace acim
