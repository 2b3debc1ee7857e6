// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <unistd.h>

#include <fmt/core.h>

#include "acim/cli/commands.hpp"
#include "acim/cli/config.hpp"
#include "acim/engine.hpp"
#include "acim/macro.hpp"
#include "acim/metrics.hpp"
#include "acim/quant.hpp"
#include "acim/trainer.hpp"
#include "oracles.hpp"

using namespace acim;
namespace fs = std::filesystem;

namespace {

constexpr auto U = Signedness::Unsigned;
constexpr auto S = Signedness::TwosComplement;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

MacroConfig boundary_cfg(int rows, int y) {
  MacroConfig c{rows, 1, y};
  c.adc_bits = c.boundary_bits();
  return c;
}

EngineMode mode_for(int y) { return y == 1 ? EngineMode::bit_serial() : EngineMode::bit_parallel(y); }

NoiseSpec lsb_noise(double sigma, std::uint64_t seed) {
  NoiseSpec s;
  s.random = {sigma, NoiseUnit::LsbRms};
  s.seed = seed;
  return s;
}

std::vector<std::int32_t> all_codes(const QuantParams& p) {
  std::vector<std::int32_t> c;
  for (auto v = p.min_code(); v <= p.max_code(); ++v) c.push_back(v);
  return c;
}

// Every D-long code vector as the rows of a [n^D, D] matrix.
std::vector<std::int32_t> all_vectors(const std::vector<std::int32_t>& codes, std::size_t D) {
  std::size_t n = 1;
  for (std::size_t i = 0; i < D; ++i) n *= codes.size();
  std::vector<std::int32_t> out(n * D);
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t idx = r;
    for (std::size_t d = 0; d < D; ++d) {
      out[r * D + d] = codes[idx % codes.size()];
      idx /= codes.size();
    }
  }
  return out;
}

struct RandomCase {
  QuantizedTensor a, w;
};

// 8b/8b operands with mixed signedness; the list starts with the multi-tile
// shapes and continues with random inner dimensions.
std::vector<RandomCase> random_cases(int count) {
  CounterRng rng(2024);
  std::vector<RandomCase> cases;
  for (int i = 0; i < count; ++i) {
    std::size_t D;
    if (i < 4)
      D = i % 2 ? 512 : 300;
    else
      D = 1 + rng.next() % 600;
    const std::size_t B = 1 + rng.next() % 3, M = 1 + rng.next() % 4;
    const auto as = rng.next() % 2 ? U : S;
    const auto ws = rng.next() % 4 ? S : U;
    cases.push_back({oracle::random_codes({B, D}, 8, as, rng, 0.01 + 0.001 * (i % 7)),
                     oracle::random_codes({D, M}, 8, ws, rng, 0.02 + 0.003 * (i % 5))});
  }
  return cases;
}

const std::vector<RandomCase>& shared_cases() {
  static const std::vector<RandomCase> cases = random_cases(1000);
  return cases;
}

Outcome oracle_exactness() {
  const auto t0 = Clock::now();
  std::size_t checked = 0, mismatches = 0;
  for (auto as : {U, S})
    for (auto ws : {U, S}) {
      const QuantParams ap{1.0, 3, as}, wp{1.0, 3, ws};
      const auto acodes = all_codes(ap), wcodes = all_codes(wp);
      for (int rows : {4, 256}) {  // 4 rows splits D > 4 across tiles
        const MacroConfig cfg = boundary_cfg(rows, 1);
        for (std::size_t D = 1; D <= 8; ++D) {
          QuantizedTensor qa, qw;
          if (D <= 3) {
            // Every activation vector against every weight vector.
            const auto av = all_vectors(acodes, D), wv = all_vectors(wcodes, D);
            const std::size_t na = av.size() / D, nw = wv.size() / D;
            std::vector<std::int32_t> w(D * nw);
            for (std::size_t m = 0; m < nw; ++m)
              for (std::size_t d = 0; d < D; ++d) w[d * nw + m] = wv[m * D + d];
            qa = QuantizedTensor({na, D}, av, ap);
            qw = QuantizedTensor({D, nw}, std::move(w), wp);
          } else {
            // Latin layout: every code pair meets at every row position.
            const std::size_t na = acodes.size(), nw = wcodes.size();
            std::vector<std::int32_t> a(na * D), w(D * nw);
            for (std::size_t b = 0; b < na; ++b)
              for (std::size_t d = 0; d < D; ++d) a[b * D + d] = acodes[(b + d) % na];
            for (std::size_t d = 0; d < D; ++d)
              for (std::size_t m = 0; m < nw; ++m) w[d * nw + m] = wcodes[(m + 3 * d) % nw];
            qa = QuantizedTensor({na, D}, std::move(a), ap);
            qw = QuantizedTensor({D, nw}, std::move(w), wp);
          }
          const auto r = simulate_matmul(qa, qw, cfg, {}, EngineMode::bit_serial());
          const Tensor ref = oracle::int_matmul(qa, qw);
          checked += ref.size();
          if (!oracle::identical(r.output, ref)) ++mismatches;
        }
      }
    }
  const MacroConfig cfg = boundary_cfg(256, 1);
  std::size_t random_bad = 0;
  for (const auto& c : shared_cases()) {
    const auto r = simulate_matmul(c.a, c.w, cfg, {}, EngineMode::bit_serial());
    if (!oracle::identical(r.output, oracle::int_matmul(c.a, c.w))) ++random_bad;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && random_bad == 0 && secs < 60.0,
          fmt::format("3b/3b outputs {} with {} mismatching blocks; 1000 random 8b/8b cases, {} "
                      "mismatching; {:.1f} s",
                      checked, mismatches, random_bad, secs)};
}

Outcome scheme_equivalence() {
  std::size_t bad = 0;
  for (const auto& c : shared_cases()) {
    const Tensor serial =
        simulate_matmul(c.a, c.w, boundary_cfg(256, 1), {}, EngineMode::bit_serial()).output;
    for (int y : {2, 4})
      if (!oracle::identical(serial,
                             simulate_matmul(c.a, c.w, boundary_cfg(256, y), {}, mode_for(y)).output))
        ++bad;
  }
  return {bad == 0, fmt::format("1000 cases x y in {{2, 4}}, {} differ from bit-serial", bad)};
}

Outcome cycle_accounting() {
  bool ok = true;
  std::string detail;
  for (auto xs : {U, S}) {
    const auto n = plan_cycles(8, 8, xs, S, EngineMode::bit_serial()).cycles_per_tile();
    ok = ok && n == 64;
    detail += fmt::format("8b/8b {} = {}; ", xs == U ? "unsigned" : "signed", n);
  }
  const auto n9 = plan_cycles(8, 9, S, S, EngineMode::bit_parallel(4)).cycles_per_tile();
  ok = ok && n9 == 24;
  detail += fmt::format("9b signed y=4 = {}; groups", n9);
  for (auto xs : {U, S}) {
    std::size_t previous = 0;
    for (int y : {1, 2, 4, 8}) {
      const auto layout = activation_group_layout(xs == U ? 8 : 9, xs, y);
      const auto plain = static_cast<std::size_t>(
          std::count_if(layout.begin(), layout.end(), [](const GroupLayout& g) { return !g.sign_group; }));
      if (previous) ok = ok && plain * 2 == previous;
      const auto cycles = plan_cycles(8, xs == U ? 8 : 9, xs, S, mode_for(y)).cycles_per_tile();
      ok = ok && cycles == static_cast<std::int64_t>(8 * layout.size());
      previous = plain;
      detail += fmt::format(" {}", plain);
    }
    detail += xs == U ? " (unsigned 8b);" : " (signed 9b, plus sign group)";
  }
  return {ok, detail};
}

Outcome hybrid_split() {
  EngineMode m;
  m.hybrid_boundary = 3;
  const CyclePlan plan = plan_cycles(8, 8, S, S, m);
  const bool split_ok = plan.digital_entries() == 6 && plan.analog_entries() == 58 &&
                        plan.analog_ratio() == 58.0 / 64.0;

  EngineMode full;
  full.hybrid_boundary = plan_cycles(8, 8, S, S, full).shift_levels();
  CounterRng rng(31);
  std::size_t bad = 0;
  for (int i = 0; i < 20; ++i) {
    const std::size_t D = i < 2 ? (i ? 512 : 300) : 1 + rng.next() % 600;
    const auto a = oracle::random_codes({3, D}, 8, i % 2 ? S : U, rng, 0.05);
    const auto w = oracle::random_codes({D, 4}, 8, S, rng, 0.02);
    const auto r = simulate_matmul(a, w, MacroConfig{256, 8, 1}, lsb_noise(2.0, 40 + i), full);
    if (r.analog_ratio != 0.0 || !oracle::identical(r.output, oracle::int_matmul(a, w))) ++bad;
  }
  return {split_ok && bad == 0,
          fmt::format("L=3: {} digital, {} analog, ratio {:.5f}; full boundary at 2 LSB_rms: {}/20 "
                      "inexact",
                      plan.digital_entries(), plan.analog_entries(), plan.analog_ratio(), bad)};
}

double stddev(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

Outcome voting_statistics() {
  const auto t0 = Clock::now();
  const MacroConfig cfg{256, 8, 1};
  const NoiseSpec spec = lsb_noise(1.0, 77);
  const int trials = 20000;
  std::vector<double> single(trials), voted(trials);
  for (int t = 0; t < trials; ++t) {
    RngContext ctx;
    ctx.batch = static_cast<std::uint64_t>(t);
    voted[t] = majority_vote_readout(CblLevel{128.0}, 5, spec, cfg, ctx).code;
    single[t] = noisy_readout(CblLevel{128.0}, spec, cfg, ctx).code;
  }
  const double sv = stddev(voted), s1 = stddev(single), secs = seconds_since(t0);
  return {sv >= 0.40 && sv <= 0.50 && secs < 30.0,
          fmt::format("{} trials: voted code sigma {:.4f} (single conversion {:.4f}); {:.1f} s",
                      trials, sv, s1, secs)};
}

Outcome linearity() {
  LinearityOptions opts;
  opts.trials = 100000;
  const MacroConfig cfg{256, 8, 1};
  const auto pts = linearity_sweep(cfg, lsb_noise(1.0, 5), opts);
  double an_lo = 1e9, an_hi = 0.0, code_lo = 1e9, code_hi = 0.0;
  for (const auto& p : pts) {
    an_lo = std::min(an_lo, p.analog_sigma);
    an_hi = std::max(an_hi, p.analog_sigma);
    // Codes within a few LSB of either rail are truncated by the clamp.
    if (p.ideal_code >= 4 && p.ideal_code <= cfg.max_code() - 4) {
      code_lo = std::min(code_lo, p.code_sigma);
      code_hi = std::max(code_hi, p.code_sigma);
    }
  }
  const bool random_ok = an_lo >= 0.95 && an_hi <= 1.05 && code_lo >= 0.95 && code_hi <= 1.05;

  NoiseSpec nl;
  nl.nonlin = {1.0, NoiseUnit::LsbRms};
  nl.seed = 6;
  LinearityOptions nopts;
  nopts.trials = 20000;
  const MacroConfig small{16, 4, 1};
  const auto curve = linearity_sweep(small, nl, nopts);
  bool monotone = true;
  for (std::size_t i = 1; i < curve.size(); ++i)
    monotone = monotone && curve[i].analog_sigma <= curve[i - 1].analog_sigma * (1.0 + 1e-12);
  const double s0 = curve.front().analog_sigma;
  const bool nonlin_ok = monotone && std::abs(s0 - 1.0) <= 0.1 && curve.back().analog_sigma == 0.0;
  return {random_ok && nonlin_ok,
          fmt::format("random: analog sigma [{:.4f}, {:.4f}], interior code sigma [{:.4f}, {:.4f}]; "
                      "nonlinearity: sigma(0) {:.4f}, {}monotone",
                      an_lo, an_hi, code_lo, code_hi, s0, monotone ? "" : "not ")};
}

Outcome unit_conversion() {
  const double lsb = sigma_to_lsb({0.15, NoiseUnit::VppPct}, MacroConfig{256, 8, 1});
  return {std::abs(lsb - 0.384) <= 1e-12, fmt::format("0.15 Vpp% at k=8 = {:.12f} LSB_rms", lsb)};
}

Outcome mac_expectation() {
  const MacroConfig cfg{256, 8, 1};
  const int calls = 4000;
  const QuantParams p{1.0, 8, U};
  CounterRng rng(88);
  std::vector<std::vector<double>> per_cycle(64);
  std::vector<double> per_call(calls);
  for (int t = 0; t < calls; ++t) {
    // Uniform 8-bit codes have independent Bernoulli(0.5) bit planes.
    std::vector<std::int32_t> a(256), w(256);
    for (auto& c : a) c = static_cast<std::int32_t>(rng.next() & 0xff);
    for (auto& c : w) c = static_cast<std::int32_t>(rng.next() & 0xff);
    const auto h = mac_distribution(QuantizedTensor({1, 256}, a, p), QuantizedTensor({256, 1}, w, p),
                                    cfg, EngineMode::bit_serial());
    double sum = 0.0;
    for (std::size_t e = 0; e < h.cycles.size(); ++e) {
      const double level = h.mean_level(e);
      per_cycle[e].push_back(level);
      sum += level;
    }
    per_call[t] = sum / static_cast<double>(h.cycles.size());
  }
  const double target = expected_mac(0.5, 0.5, 256);
  const auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  // Calls are independent; the 64 cycles of one call share bit planes, so
  // the pooled test uses per-call averages.
  const double pooled = mean_of(per_call);
  const double pooled_se = stddev(per_call) / std::sqrt(static_cast<double>(calls));
  double worst = 0.0;
  for (const auto& v : per_cycle) {
    const double z = std::abs(mean_of(v) - target) / (stddev(v) / std::sqrt(static_cast<double>(calls)));
    worst = std::max(worst, z);
  }
  const double pooled_z = std::abs(pooled - target) / pooled_se;
  return {target == 64.0 && pooled_z <= 3.0 && worst <= 3.0,
          fmt::format("E[MAC] = {}; pooled mean {:.3f} ({:.2f} SE); worst of 64 cycles {:.2f} SE",
                      target, pooled, pooled_z, worst)};
}

Outcome adc_contract() {
  std::size_t levels = 0, bad = 0;
  for (int y : {1, 4})
    for (int k : {8, 10, 12}) {
      const MacroConfig cfg{256, k, y};
      const double lsb = cfg.lsb();
      const double rail = (cfg.max_code() + 0.5) * lsb;
      for (std::int64_t v = 0; v <= cfg.full_scale(); ++v) {
        if (static_cast<double>(v) > rail) continue;
        const auto r = adc_readout(CblLevel{static_cast<double>(v)}, cfg);
        const double recon = reconstruct_counts(r.mac_counts, cfg);
        ++levels;
        if (std::abs(recon - static_cast<double>(v)) > lsb / 2) ++bad;
      }
    }
  return {levels > 0 && bad == 0,
          fmt::format("{} non-saturating levels over 6 configs, {} outside half a step", levels, bad)};
}

std::string config_dir() { return ACIM_CONFIG_DIR; }

Dataset blob_split(const cli::ExperimentConfig& cfg, bool test) {
  BlobSpec spec = cfg.data.blobs;
  spec.sample_seed = test ? 1 : 0;
  if (test) spec.per_class = cfg.data.test_per_class;
  return make_blobs(spec);
}

TinyModel fresh(const cli::ExperimentConfig& cfg, const Dataset& data) {
  std::vector<std::size_t> widths{data.feature_dim()};
  widths.insert(widths.end(), cfg.model.hidden.begin(), cfg.model.hidden.end());
  widths.push_back(static_cast<std::size_t>(data.num_classes));
  return make_mlp(widths, cfg.train.seed);
}

QuantizedTensor unit_scale(QuantizedTensor q) {
  q.params.scale = 1.0;
  return q;
}

Outcome desk_scale() {
  const auto cfg = cli::load_experiment(config_dir() + "/train.ini");
  const Dataset tr = blob_split(cfg, false), te = blob_split(cfg, true);
  const auto t0 = Clock::now();
  TrainConfig plain = cfg.train;
  plain.nat_sigma = 0.0;
  TrainConfig noisy = cfg.train;
  noisy.nat_sigma = 0.5;
  const TinyModel base = train(fresh(cfg, tr), tr, plain).model;
  const TinyModel nat = train(fresh(cfg, tr), tr, noisy).model;
  const double train_secs = seconds_since(t0);

  const EvalOptions eo{cfg.eval_batch, 1};
  const double digital = evaluate_digital(base, te, eo);
  const MacroConfig boundary{256, 1, 1};
  const MacroConfig bcfg{256, boundary.boundary_bits(), 1};
  const double exact = evaluate_on_engine(base, te, bcfg, {}, EngineMode::bit_serial(), eo).accuracy;
  const bool a_ok = std::abs(exact - digital) <= 0.01;

  const MacroConfig mc{256, 8, 1};
  const int seeds = 10;
  const auto mean_acc = [&](const TinyModel& m, double sigma) {
    double s = 0.0;
    for (int seed = 0; seed < seeds; ++seed)
      s += evaluate_on_engine(m, te, mc, lsb_noise(sigma, 1000 + seed), EngineMode::bit_serial(), eo)
               .accuracy;
    return s / seeds;
  };
  std::vector<double> curve;
  bool b_ok = true;
  for (double sigma : {0.0, 0.25, 0.5, 1.0}) {
    curve.push_back(mean_acc(base, sigma));
    if (curve.size() > 1) b_ok = b_ok && curve.back() <= curve[curve.size() - 2];
  }
  const double nat_at_1 = mean_acc(nat, 1.0);
  const bool c_ok = nat_at_1 >= curve.back();

  // Forced one-step errors on the first layer, with unit scales so the
  // displacement is counted in exact integers.
  const auto& lin = std::get<LinearLayer>(base.layers.front());
  const auto x = unit_scale(quantize(te.slice(0, 64).features, base.x_bits, input_signedness(base, 0)));
  const auto w = unit_scale(quantize(lin.weights, base.w_bits, S));
  const CyclePlan plan = plan_cycles(base.w_bits, base.x_bits, x.params.signedness, S, EngineMode::bit_serial());
  int shift_max = 0;
  std::uint64_t msb_group = 0;
  for (const auto& e : plan.entries)
    if (e.shift > shift_max) {
      shift_max = e.shift;
      msb_group = static_cast<std::uint64_t>(e.act_group);
    }
  const Tensor clean = simulate_matmul(x, w, mc, {}, EngineMode::bit_serial()).output;
  const auto displaced = [&](std::uint64_t w_bit, std::uint64_t group) {
    NoiseSpec s;
    s.custom = [=](double v, const RngContext& ctx, const MacroConfig& c) {
      return ctx.w_bit == w_bit && ctx.act_group == group ? v + c.lsb() : v;
    };
    return simulate_matmul(x, w, mc, s, EngineMode::bit_serial()).output;
  };
  const Tensor msb = displaced(static_cast<std::uint64_t>(base.w_bits - 1), msb_group);
  const Tensor lsb = displaced(0, 0);
  bool d_ok = shift_max == 14;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double dm = std::abs(msb[i] - clean[i]), dl = std::abs(lsb[i] - clean[i]);
    d_ok = d_ok && dl == 1.0 && dm == std::ldexp(dl, shift_max);
  }

  const bool t_ok = train_secs < 120.0;
  return {t_ok && a_ok && b_ok && c_ok && d_ok,
          fmt::format("train {:.1f} s; (a) digital {:.4f} vs boundary ADC {:.4f}; (b) sigma 0/0.25/0.5/1 "
                      "-> {:.4f} {:.4f} {:.4f} {:.4f}; (c) NAT {:.4f} vs plain {:.4f} at 1.0; (d) "
                      "ratio 2^{} over {} outputs {}",
                      train_secs, digital, exact, curve[0], curve[1], curve[2], curve[3], nat_at_1,
                      curve[3], shift_max, clean.size(), d_ok ? "exact" : "NOT exact")};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return {};
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / fmt::format("acim_acceptance_{}", ::getpid());
  fs::remove_all(root);
  const auto config_for = [](const std::string& cmd) -> std::string {
    if (cmd == "simulate" || cmd == "sweep" || cmd == "train") return cmd + ".ini";
    return "analysis.ini";
  };
  std::vector<std::string> differing;
  std::size_t compared = 0;
  for (const auto& cmd : cli::command_names()) {
    const std::string base = fmt::format("{} {} --config {}/{} --seed 5", ACIM_SIM_BIN, cmd,
                                         config_dir(), config_for(cmd));
    const fs::path d1 = root / cmd / "t1", d4 = root / cmd / "t4", de = root / cmd / "env";
    const int r1 = std::system(fmt::format("{} --threads 1 --out {} >/dev/null", base, d1.string()).c_str());
    const int r4 = std::system(fmt::format("{} --threads 4 --out {} >/dev/null", base, d4.string()).c_str());
    const int re = std::system(
        fmt::format("ACIM_SIM_THREADS=3 {} --out {} >/dev/null", base, de.string()).c_str());
    const std::string ref = slurp(d1 / (cmd + ".csv"));
    if (r1 != 0 || r4 != 0 || re != 0 || ref.empty() || ref != slurp(d4 / (cmd + ".csv")) ||
        ref != slurp(de / (cmd + ".csv")))
      differing.push_back(cmd);
    ++compared;
  }
  fs::remove_all(root);
  std::string which;
  for (const auto& d : differing) which += " " + d;
  return {differing.empty(),
          fmt::format("{} subcommands at 1, 4 and env=3 threads; differing:{}", compared,
                      differing.empty() ? " none" : which)};
}

Outcome gradient_check() {
  double worst = 0.0;
  const std::vector<std::vector<std::size_t>> shapes{{4, 6, 3}, {5, 7, 3}, {3, 8, 8, 2}, {6, 4, 5},
                                                     {2, 9, 2}};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CounterRng rng(500 + seed);
    const auto& widths = shapes[seed % shapes.size()];
    TinyModel m = make_mlp(widths, 900 + seed);
    for (auto& layer : m.layers)
      if (auto* lin = std::get_if<LinearLayer>(&layer))
        for (auto& b : lin->bias.mutable_data()) b = 0.1 * rng.normal();
    const std::size_t batch = 4 + seed % 5;
    const Tensor x = oracle::random_normal({batch, widths.front()}, rng);
    std::vector<int> labels(batch);
    for (auto& l : labels) l = static_cast<int>(rng.next() % widths.back());
    const LossAndGrad g = loss_and_gradients(m, x, labels, ForwardMode::Float);
    const double h = 1e-6;
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      auto* lin = std::get_if<LinearLayer>(&m.layers[l]);
      if (!lin) continue;
      for (int which = 0; which < 2; ++which) {
        Tensor& param = which == 0 ? lin->weights : lin->bias;
        const Tensor& analytic = which == 0 ? g.grads.weights[l] : g.grads.bias[l];
        for (std::size_t i = 0; i < param.size(); ++i) {
          const double keep = param[i];
          param[i] = keep + h;
          const double up = cross_entropy(forward_float(m, x), labels);
          param[i] = keep - h;
          const double down = cross_entropy(forward_float(m, x), labels);
          param[i] = keep;
          const double numeric = (up - down) / (2 * h);
          const double scale = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-3});
          worst = std::max(worst, std::abs(numeric - analytic[i]) / scale);
        }
      }
    }
  }
  return {worst <= 1e-5, fmt::format("10 models, worst relative error {:.2e}", worst)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle exactness", oracle_exactness},
      {"scheme equivalence", scheme_equivalence},
      {"cycle accounting", cycle_accounting},
      {"hybrid split", hybrid_split},
      {"majority voting", voting_statistics},
      {"linearity", linearity},
      {"unit conversion", unit_conversion},
      {"expected MAC", mac_expectation},
      {"ADC contract", adc_contract},
      {"desk-scale model", desk_scale},
      {"determinism", determinism},
      {"gradient check", gradient_check},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
