#include "acim/cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include "acim/checkpoint.hpp"
#include "acim/error.hpp"
#include "acim/metrics.hpp"
#include "acim/quant.hpp"
#include "acim/rng.hpp"

namespace acim::cli {

namespace {

using Path = std::filesystem::path;

double db(double ratio) { return std::isinf(ratio) ? ratio : 10.0 * std::log10(ratio); }

Dataset blob_split(const ExperimentConfig& cfg, bool test) {
  BlobSpec spec = cfg.data.blobs;
  spec.sample_seed = test ? 1 : 0;
  if (test) spec.per_class = cfg.data.test_per_class;
  return make_blobs(spec);
}

Dataset train_set(const ExperimentConfig& cfg) {
  if (cfg.data.source == "idx") {
    if (cfg.data.train_images.empty() || cfg.data.train_labels.empty())
      throw ConfigError("[data] idx source needs train_images and train_labels for training");
    return load_idx(cfg.data.train_images.string(), cfg.data.train_labels.string());
  }
  return blob_split(cfg, false);
}

Dataset test_set(const ExperimentConfig& cfg) {
  if (cfg.data.source == "idx")
    return load_idx(cfg.data.test_images.string(), cfg.data.test_labels.string());
  return blob_split(cfg, true);
}

TinyModel fresh_model(const ExperimentConfig& cfg, const Dataset& train) {
  std::vector<std::size_t> widths{train.feature_dim()};
  widths.insert(widths.end(), cfg.model.hidden.begin(), cfg.model.hidden.end());
  widths.push_back(static_cast<std::size_t>(train.num_classes));
  return make_mlp(widths, cfg.train.seed);
}

// The configured checkpoint, or the builtin blob MLP trained on the spot.
TinyModel obtain_model(const ExperimentConfig& cfg, std::string* source) {
  if (!cfg.model.checkpoint.empty()) {
    *source = cfg.model.checkpoint.filename().string();
    return load_checkpoint(cfg.model.checkpoint.string());
  }
  *source = cfg.model.builtin;
  const Dataset data = train_set(cfg);
  return train(fresh_model(cfg, data), data, cfg.train).model;
}

struct GridPoint {
  MacroConfig macro;
  NoiseSpec noise;
  EngineMode mode;
};

std::vector<GridPoint> grid(const ExperimentConfig& cfg) {
  const auto axis = [](const auto& values, auto base) {
    return values.empty() ? std::vector<decltype(base)>{base} : values;
  };
  std::vector<GridPoint> points;
  for (int k : axis(cfg.sweep.adc_bits, cfg.macro.adc_bits))
    for (int y : axis(cfg.sweep.enc_bits, cfg.macro.enc_bits))
      for (double r : axis(cfg.sweep.random, cfg.noise.random.value))
        for (double n : axis(cfg.sweep.nonlin, cfg.noise.nonlin.value))
          for (std::uint64_t s : axis(cfg.sweep.seeds, cfg.noise.seed)) {
            GridPoint p{cfg.macro, cfg.noise, cfg.mode};
            p.macro.adc_bits = k;
            p.macro.enc_bits = y;
            p.mode.enc_bits = y;
            if (y != cfg.macro.enc_bits)
              p.mode.scheme = y > 1 ? Scheme::BitParallel : Scheme::BitSerial;
            p.noise.random.value = r;
            p.noise.nonlin.value = n;
            p.noise.seed = s;
            try {
              p.macro.validate();
              p.mode.validate();
              p.noise.validate();
            } catch (const ConfigError&) {
              throw;
            } catch (const Error& e) {
              throw ConfigError(std::string("[sweep]: ") + e.what());
            }
            points.push_back(p);
          }
  return points;
}

const std::vector<std::string> kPointColumns{"adc_bits", "enc_bits", "random", "nonlin",
                                             "noise_seed"};

std::vector<Cell> point_cells(const GridPoint& p) {
  return {std::int64_t{p.macro.adc_bits}, std::int64_t{p.macro.enc_bits}, p.noise.random.value,
          p.noise.nonlin.value, static_cast<std::int64_t>(p.noise.seed)};
}

std::vector<std::string> with_point_columns(std::vector<std::string> metrics) {
  std::vector<std::string> cols = kPointColumns;
  cols.insert(cols.end(), metrics.begin(), metrics.end());
  return cols;
}

CommandOutput cmd_simulate(const ExperimentConfig& cfg, int threads, bool require_axes) {
  if (require_axes && cfg.sweep.empty())
    throw ConfigError("sweep needs at least one axis in the [sweep] section");
  std::string source;
  const TinyModel model = obtain_model(cfg, &source);
  const Dataset test = test_set(cfg);
  const EvalOptions eval{cfg.eval_batch, threads};
  const double digital = evaluate_digital(model, test, eval);
  const Tensor reference = forward_float(model, test.features);

  CommandOutput out;
  out.table.columns = with_point_columns(
      {"accuracy", "digital_accuracy", "logit_csnr_db", "cycles", "analog_ratio"});
  for (const GridPoint& p : grid(cfg)) {
    const EngineEval r = evaluate_on_engine(model, test, p.macro, p.noise, p.mode, eval);
    auto row = point_cells(p);
    row.insert(row.end(), {r.accuracy, digital, csnr_measure(reference, r.logits).db,
                           std::int64_t{r.cycles}, r.analog_ratio});
    out.table.add(std::move(row));
  }
  out.summary.columns = {"model", "test_samples", "float_accuracy", "digital_accuracy"};
  out.summary.add({source, static_cast<std::int64_t>(test.size()), evaluate_float(model, test),
                   digital});
  return out;
}

CommandOutput cmd_train(const ExperimentConfig& cfg, const Path& out_dir) {
  const Dataset train_data = train_set(cfg);
  TinyModel initial = cfg.model.checkpoint.empty() ? fresh_model(cfg, train_data)
                                                   : load_checkpoint(cfg.model.checkpoint.string());
  const TrainResult result = train(std::move(initial), train_data, cfg.train);

  const Path ckpt =
      cfg.train_checkpoint.is_absolute() ? cfg.train_checkpoint : out_dir / cfg.train_checkpoint;
  std::filesystem::create_directories(ckpt.parent_path().empty() ? Path(".") : ckpt.parent_path());
  save_checkpoint(result.model, ckpt.string());

  CommandOutput out;
  out.table.columns = {"epoch", "loss", "train_accuracy"};
  for (const EpochStats& e : result.curve)
    out.table.add({std::int64_t{e.epoch}, e.loss, e.train_accuracy});
  const Dataset test = test_set(cfg);
  out.summary.columns = {"checkpoint", "nat_sigma", "float_accuracy", "digital_accuracy"};
  out.summary.add({ckpt.filename().string(), cfg.train.nat_sigma, evaluate_float(result.model, test),
                   evaluate_digital(result.model, test, {cfg.eval_batch, 1})});
  return out;
}

struct Operands {
  Tensor act;  // [batch, inner]
  Tensor w;    // [inner, columns]
  QuantizedTensor qa, qw;
};

Operands make_operands(const ExperimentConfig& cfg) {
  const OperandConfig& o = cfg.operands;
  const bool act_signed = o.x_signedness == Signedness::TwosComplement;
  const bool gaussian = o.distribution == "gaussian";
  const auto draw = [&](std::uint64_t which, std::size_t n, bool is_signed) {
    RngContext ctx;
    ctx.layer = which;
    CounterRng rng(context_key(cfg.seed, ctx, RngStream::Operands));
    std::vector<double> v(n);
    for (auto& x : v) {
      x = gaussian ? rng.normal() : 2.0 * rng.uniform() - 1.0;
      if (!is_signed) x = std::abs(x);
    }
    return v;
  };
  Operands ops;
  ops.act = Tensor({o.batch, o.inner}, draw(0, o.batch * o.inner, act_signed));
  ops.w = Tensor({o.inner, o.columns}, draw(1, o.inner * o.columns, true));
  ops.qa = quantize(ops.act, o.x_bits, o.x_signedness);
  ops.qw = quantize(ops.w, o.w_bits, Signedness::TwosComplement);
  return ops;
}

CommandOutput cmd_csnr(const ExperimentConfig& cfg, int threads) {
  const Operands ops = make_operands(cfg);
  const Tensor ideal = matmul(ops.act, ops.w);
  // Integer matmul scaled in the engine's order, so a lossless ADC path
  // reproduces it bit for bit.
  const auto codes = [](const QuantizedTensor& q) {
    return Tensor(q.shape, std::vector<double>(q.codes.begin(), q.codes.end()));
  };
  Tensor quant_in = matmul(codes(ops.qa), codes(ops.qw));
  for (auto& v : quant_in.mutable_data()) v = v * ops.qa.params.scale * ops.qw.params.scale;
  SimOptions so;
  so.threads = threads;

  CommandOutput out;
  out.table.columns = with_point_columns({"sqnr_db", "csnr_db", "input_term_db", "output_term_db",
                                          "noise_term_db", "variance_sqnr_db",
                                          "variance_csnr_db"});
  for (const GridPoint& p : grid(cfg)) {
    NoiseSpec clean;
    clean.seed = p.noise.seed;
    const Tensor quant_out = simulate_matmul(ops.qa, ops.qw, p.macro, clean, p.mode, so).output;
    const Tensor noisy = simulate_matmul(ops.qa, ops.qw, p.macro, p.noise, p.mode, so).output;
    const VarianceCsnr v = csnr_variance_form(ideal, quant_in, quant_out, noisy);
    auto row = point_cells(p);
    row.insert(row.end(), {csnr_measure(ideal, quant_out).db, csnr_measure(ideal, noisy).db,
                           db(v.input_term), db(v.output_term), db(v.noise_term), v.sqnr_db,
                           v.csnr_db});
    out.table.add(std::move(row));
  }
  out.summary.columns = {"batch", "inner", "columns", "w_bits", "x_bits"};
  out.summary.add({static_cast<std::int64_t>(cfg.operands.batch),
                   static_cast<std::int64_t>(cfg.operands.inner),
                   static_cast<std::int64_t>(cfg.operands.columns),
                   std::int64_t{cfg.operands.w_bits}, std::int64_t{cfg.operands.x_bits}});
  return out;
}

CommandOutput cmd_linearity(const ExperimentConfig& cfg) {
  CommandOutput out;
  out.table.columns = {"level", "ideal_code", "mean_code", "code_sigma", "analog_sigma"};
  double sigma_sum = 0.0;
  const auto points = linearity_sweep(cfg.macro, cfg.noise, cfg.linearity);
  for (const LinearityPoint& p : points) {
    out.table.add({std::int64_t{p.level}, std::int64_t{p.ideal_code}, p.mean_code, p.code_sigma,
                   p.analog_sigma});
    sigma_sum += p.code_sigma;
  }
  out.summary.columns = {"levels", "mean_code_sigma", "trials", "voting_samples"};
  out.summary.add({static_cast<std::int64_t>(points.size()),
                   sigma_sum / static_cast<double>(points.size()),
                   std::int64_t{cfg.linearity.trials}, std::int64_t{cfg.linearity.voting_samples}});
  return out;
}

CommandOutput cmd_distribution(const ExperimentConfig& cfg, int threads) {
  const Operands ops = make_operands(cfg);
  const MacHistogram h = mac_distribution(ops.qa, ops.qw, cfg.macro, cfg.mode, threads);
  CommandOutput out;
  out.table.columns = {"w_bit", "act_group", "shift", "level", "count"};
  for (const CycleHistogram& c : h.cycles)
    for (std::size_t level = 0; level < c.counts.size(); ++level)
      if (c.counts[level] != 0)
        out.table.add({std::int64_t{c.w_bit}, std::int64_t{c.act_group}, std::int64_t{c.shift},
                       static_cast<std::int64_t>(level), static_cast<std::int64_t>(c.counts[level])});
  out.summary.columns = {"cycles", "tiles", "total_mass", "max_level", "full_scale"};
  out.summary.add({static_cast<std::int64_t>(h.cycles.size()), static_cast<std::int64_t>(h.tiles),
                   static_cast<std::int64_t>(h.total_mass()), std::int64_t{h.max_level()},
                   std::int64_t{cfg.macro.full_scale()}});
  return out;
}

void add_sparsity_rows(Table& t, const std::string& name, const QuantizedTensor& q) {
  const std::vector<double> s = bit_sparsity(decompose_bits(q));
  for (std::size_t b = 0; b < s.size(); ++b)
    t.add({name, static_cast<std::int64_t>(b), s[b]});
}

CommandOutput cmd_sparsity(const ExperimentConfig& cfg) {
  CommandOutput out;
  out.table.columns = {"tensor", "bit", "sparsity"};
  std::string source = "random";
  if (cfg.sparsity_source == "random") {
    const Operands ops = make_operands(cfg);
    add_sparsity_rows(out.table, "activations", ops.qa);
    add_sparsity_rows(out.table, "weights", ops.qw);
  } else {
    const TinyModel model = obtain_model(cfg, &source);
    Tensor h = test_set(cfg).features;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      const auto* lin = std::get_if<LinearLayer>(&model.layers[l]);
      if (!lin) {
        for (auto& v : h.mutable_data()) v = std::max(v, 0.0);
        continue;
      }
      const std::string prefix = "layer" + std::to_string(l);
      add_sparsity_rows(out.table, prefix + ".inputs",
                        quantize(h, model.x_bits, input_signedness(model, l)));
      add_sparsity_rows(out.table, prefix + ".weights",
                        quantize(lin->weights, model.w_bits, Signedness::TwosComplement));
      h = matmul(h, lin->weights);
      for (std::size_t i = 0; i < h.size(); ++i) h[i] += lin->bias[i % lin->out()];
    }
  }
  out.summary.columns = {"source"};
  out.summary.add({source});
  return out;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate", "sweep",        "train",   "csnr",
                                              "linearity", "distribution", "sparsity"};
  return names;
}

CommandOutput run_command(const std::string& command, const ExperimentConfig& cfg, int threads,
                          const Path& out_dir) {
  if (command == "simulate") return cmd_simulate(cfg, threads, false);
  if (command == "sweep") return cmd_simulate(cfg, threads, true);
  if (command == "train") return cmd_train(cfg, out_dir);
  if (command == "csnr") return cmd_csnr(cfg, threads);
  if (command == "linearity") return cmd_linearity(cfg);
  if (command == "distribution") return cmd_distribution(cfg, threads);
  if (command == "sparsity") return cmd_sparsity(cfg);
  throw ConfigError("unknown command '" + command + "'");
}

namespace {

void write_file(const Path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace

void run(const RunOptions& opts) {
  if (opts.threads < 1) throw ConfigError("--threads must be >= 1");
  ConfigFile file = read_config_file(opts.config);
  if (opts.seed) file.sections[""]["seed"] = {std::to_string(*opts.seed), 0};
  const ExperimentConfig cfg = build_experiment(file, opts.config.parent_path());
  const Path out_dir = opts.out_dir.value_or(cfg.output.dir);
  std::filesystem::create_directories(out_dir);

  const auto start = std::chrono::steady_clock::now();
  const CommandOutput result = run_command(opts.command, cfg, opts.threads, out_dir);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

  if (cfg.output.csv) write_file(out_dir / (opts.command + ".csv"), to_csv(result.table));
  if (cfg.output.json)
    write_file(out_dir / (opts.command + ".json"),
               to_json(opts.command, cfg, result.table, result.summary,
                       {elapsed.count(), opts.threads}));
}

}  // namespace acim::cli
