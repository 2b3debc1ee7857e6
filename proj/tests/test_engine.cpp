#include <doctest.h>

#include <cmath>

#include "acim/engine.hpp"
#include "acim/error.hpp"
#include "oracles.hpp"

using namespace acim;

namespace {

constexpr auto U = Signedness::Unsigned;
constexpr auto S = Signedness::TwosComplement;

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

}  // namespace

TEST_CASE("bit-serial 8b/8b plan") {
  const CyclePlan p = plan_cycles(8, 8, S, S, EngineMode::bit_serial());
  CHECK(p.entries.size() == 64);
  CHECK(p.cycles_per_tile() == 64);
  CHECK(p.shift_levels() == 15);
  int max_shift = 0;
  for (const auto& e : p.entries) {
    CHECK(e.shift == e.w_bit + e.act_group);
    max_shift = std::max(max_shift, e.shift);
    const bool w_msb = e.w_bit == 7, x_msb = e.act_group == 7;
    CHECK(e.sign() == ((w_msb != x_msb) ? -1 : 1));
  }
  CHECK(max_shift == 14);
}

TEST_CASE("hybrid and voting plans") {
  EngineMode m;
  m.hybrid_boundary = 3;
  const CyclePlan h = plan_cycles(8, 8, S, S, m);
  CHECK(h.digital_entries() == 6);
  CHECK(h.analog_entries() == 58);
  CHECK(h.analog_ratio() == doctest::Approx(58.0 / 64.0));
  for (const auto& e : h.entries) CHECK((e.domain == Domain::Digital) == (e.shift >= 12));

  EngineMode v;
  v.voting = VotingSpec{3, 7};
  const CyclePlan vp = plan_cycles(8, 8, S, S, v);
  CHECK(vp.cycles_per_tile() == 58 + 6 * 7);
  v.voting = VotingSpec{3, 5};
  CHECK(plan_cycles(8, 8, S, S, v).cycles_per_tile() == 88);

  m.hybrid_boundary = 16;
  CHECK_THROWS_AS(plan_cycles(8, 8, S, S, m), ConfigError);
  m.hybrid_boundary = 15;
  CHECK(plan_cycles(8, 8, S, S, m).analog_entries() == 0);
}

TEST_CASE("bit-parallel plans") {
  CHECK(plan_cycles(8, 9, S, S, EngineMode::bit_parallel(4)).entries.size() == 24);
  CHECK(plan_cycles(8, 9, S, S, EngineMode::bit_serial()).entries.size() == 72);
  for (int bits : {4, 6, 8})
    CHECK(plan_cycles(8, bits, U, S, EngineMode::bit_parallel(2)).act_groups.size() * 2 ==
          plan_cycles(8, bits, U, S, EngineMode::bit_serial()).act_groups.size());
  CHECK_THROWS_AS((EngineMode{Scheme::BitSerial, 2, {}, {}}.validate()), ConfigError);
  CHECK_THROWS_AS(EngineMode::bit_parallel(1).validate(), ConfigError);
}

TEST_CASE("simulate_matmul basics") {
  CounterRng rng(1);
  const MacroConfig cfg = boundary_cfg(256, 1);
  SUBCASE("zero activations") {
    const QuantizedTensor a({2, 40}, std::vector<std::int32_t>(80, 0), QuantParams{0.1, 8, S});
    const auto w = oracle::random_codes({40, 3}, 8, S, rng, 0.02);
    const auto r = simulate_matmul(a, w, cfg, {}, EngineMode::bit_serial());
    for (double v : r.output.data()) CHECK(v == 0.0);
  }
  SUBCASE("signed single product") {
    const QuantizedTensor a({1, 1}, {-3}, QuantParams{0.5, 4, S});
    const QuantizedTensor w({1, 1}, {2}, QuantParams{0.25, 4, S});
    CHECK(simulate_matmul(a, w, cfg, {}, EngineMode::bit_serial()).output[0] == -6 * 0.5 * 0.25);
  }
  SUBCASE("two tiles equal the integer oracle") {
    const auto a = oracle::random_codes({3, 300}, 4, U, rng, 0.3);
    const auto w = oracle::random_codes({300, 5}, 4, S, rng, 0.7);
    const auto r = simulate_matmul(a, w, cfg, {}, EngineMode::bit_serial());
    CHECK(r.tiles == 2);
    CHECK(oracle::identical(r.output, oracle::int_matmul(a, w)));
  }
  SUBCASE("shape and mode errors") {
    const auto a = oracle::random_codes({2, 4}, 4, U, rng);
    const auto w = oracle::random_codes({5, 2}, 4, S, rng);
    CHECK_THROWS_AS(simulate_matmul(a, w, cfg, {}, EngineMode::bit_serial()), ShapeError);
    const auto w4 = oracle::random_codes({4, 2}, 4, S, rng);
    CHECK_THROWS_AS(simulate_matmul(a, w4, cfg, {}, EngineMode::bit_parallel(2)), ConfigError);
  }
}

TEST_CASE("exactness across schemes and signedness, exhaustive pairs at 3b/3b") {
  for (int y : {1, 2, 3})
    for (auto as : {U, S})
      for (auto ws : {U, S}) {
        const MacroConfig cfg = boundary_cfg(3, y);
        const QuantParams ap{1.0, 3, as}, wp{1.0, 3, ws};
        std::vector<std::int32_t> acodes, wcodes;
        for (auto c = ap.min_code(); c <= ap.max_code(); ++c) acodes.push_back(c);
        for (auto c = wp.min_code(); c <= wp.max_code(); ++c) wcodes.push_back(c);
        for (std::size_t D = 1; D <= 8; ++D) {
          const std::size_t na = acodes.size(), nw = wcodes.size();
          // Every (activation, weight) code pair meets at every row position.
          std::vector<std::int32_t> a(na * D), w(D * nw);
          for (std::size_t b = 0; b < na; ++b)
            for (std::size_t d = 0; d < D; ++d) a[b * D + d] = acodes[(b + d) % na];
          for (std::size_t d = 0; d < D; ++d)
            for (std::size_t m = 0; m < nw; ++m) w[d * nw + m] = wcodes[(m + 3 * d) % nw];
          const QuantizedTensor qa({na, D}, a, ap), qw({D, nw}, w, wp);
          const auto r = simulate_matmul(qa, qw, cfg, {}, mode_for(y));
          CHECK(oracle::identical(r.output, oracle::int_matmul(qa, qw)));
        }
      }
}

TEST_CASE("scheme equivalence at boundary precision") {
  CounterRng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t D = trial % 2 ? 300 : 37;
    const auto a = oracle::random_codes({2, D}, 8, trial % 3 ? U : S, rng, 0.01);
    const auto w = oracle::random_codes({D, 3}, 8, S, rng, 0.03);
    const Tensor serial = simulate_matmul(a, w, boundary_cfg(256, 1), {}, EngineMode::bit_serial()).output;
    for (int y : {2, 3, 4})
      CHECK(oracle::identical(serial,
                              simulate_matmul(a, w, boundary_cfg(256, y), {}, mode_for(y)).output));
  }
}

TEST_CASE("full hybrid boundary ignores analog noise") {
  CounterRng rng(3);
  const auto a = oracle::random_codes({4, 300}, 8, S, rng, 0.1);
  const auto w = oracle::random_codes({300, 4}, 8, S, rng, 0.2);
  EngineMode m;
  m.hybrid_boundary = plan_cycles(8, 8, S, S, m).shift_levels();
  const MacroConfig cfg{256, 6, 1};  // coarse ADC would otherwise lose information
  const auto r = simulate_matmul(a, w, cfg, lsb_noise(2.0, 9), m);
  CHECK(r.analog_ratio == 0.0);
  CHECK(oracle::identical(r.output, oracle::int_matmul(a, w)));
}

TEST_CASE("mean squared error grows with noise") {
  CounterRng rng(4);
  const auto a = oracle::random_codes({4, 256}, 8, U, rng, 0.01);
  const auto w = oracle::random_codes({256, 8}, 8, S, rng, 0.01);
  const Tensor exact = oracle::int_matmul(a, w);
  const MacroConfig cfg{256, 8, 1};
  double previous = -1.0;
  for (double sigma : {0.0, 0.25, 0.5, 1.0}) {
    double mse = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Tensor y = simulate_matmul(a, w, cfg, lsb_noise(sigma, seed), EngineMode::bit_serial()).output;
      for (std::size_t i = 0; i < y.size(); ++i) mse += (y[i] - exact[i]) * (y[i] - exact[i]);
    }
    CHECK(mse >= previous);
    previous = mse;
  }
}

TEST_CASE("a forced error is amplified by its shift") {
  const MacroConfig cfg{256, 8, 1};  // Δ = 1 count
  CounterRng rng(5);
  const auto a = oracle::random_codes({1, 64}, 8, U, rng, 1.0);
  const auto w = oracle::random_codes({64, 1}, 8, S, rng, 1.0);
  const Tensor clean = simulate_matmul(a, w, cfg, {}, EngineMode::bit_serial()).output;
  const auto displaced = [&](std::uint64_t w_bit, std::uint64_t group) {
    NoiseSpec s;
    s.custom = [=](double v, const RngContext& ctx, const MacroConfig& c) {
      return ctx.w_bit == w_bit && ctx.act_group == group ? v + c.lsb() : v;
    };
    return simulate_matmul(a, w, cfg, s, EngineMode::bit_serial()).output[0] - clean[0];
  };
  // The MSB weight plane carries the negative sign; the displacement keeps
  // the entry's sign, so compare magnitudes.
  const double msb = displaced(7, 7), lsb = displaced(0, 0);
  CHECK(std::abs(lsb) == 1.0);
  CHECK(std::abs(msb) == std::ldexp(1.0, 14));
}

TEST_CASE("results do not depend on the worker count") {
  CounterRng rng(6);
  const auto a = oracle::random_codes({3, 300}, 8, S, rng, 0.1);
  const auto w = oracle::random_codes({300, 17}, 8, S, rng, 0.1);
  NoiseSpec s = lsb_noise(1.0, 77);
  s.nonlin = {0.5, NoiseUnit::LsbRms};
  EngineMode m;
  m.voting = VotingSpec{2, 3};
  const MacroConfig cfg{256, 8, 1};
  const Tensor one = simulate_matmul(a, w, cfg, s, m, {0, 0, 1, false}).output;
  for (int threads : {2, 4, 16})
    CHECK(oracle::identical(one, simulate_matmul(a, w, cfg, s, m, {0, 0, threads, false}).output));
  CHECK_FALSE(oracle::identical(one, simulate_matmul(a, w, cfg, s, m, {1, 0, 1, false}).output));
}

TEST_CASE("simulate_linear") {
  CounterRng rng(7);
  const MacroConfig cfg = boundary_cfg(256, 1);
  const Tensor bias({3}, {0.5, -1.0, 2.0});
  SUBCASE("zero weights broadcast the bias") {
    const auto a = oracle::random_codes({2, 10}, 8, S, rng, 0.1);
    const QuantizedTensor w({10, 3}, std::vector<std::int32_t>(30, 0), QuantParams{1.0, 8, S});
    const Tensor y = simulate_linear(a, w, bias, cfg, {}, EngineMode::bit_serial()).output;
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == bias[i % 3]);
  }
  SUBCASE("matmul plus bias") {
    const auto a = oracle::random_codes({2, 20}, 8, S, rng, 0.1);
    const auto w = oracle::random_codes({20, 3}, 8, S, rng, 0.1);
    const NoiseSpec s = lsb_noise(0.5, 3);
    const Tensor plain = simulate_matmul(a, w, cfg, s, EngineMode::bit_serial()).output;
    const Tensor with_bias = simulate_linear(a, w, bias, cfg, s, EngineMode::bit_serial()).output;
    for (std::size_t i = 0; i < plain.size(); ++i) CHECK(with_bias[i] == plain[i] + bias[i % 3]);
    CHECK_THROWS_AS(simulate_linear(a, w, Tensor({2}), cfg, s, EngineMode::bit_serial()), ShapeError);
  }
  SUBCASE("close to the float layer") {
    const Tensor x = oracle::random_normal({8, 200}, rng), wf = oracle::random_normal({200, 6}, rng);
    const Tensor ref = matmul(x, wf);
    const auto qa = quantize(x, 8, S), qw = quantize(wf, 8, S);
    const Tensor y = simulate_linear(qa, qw, std::nullopt, cfg, {}, EngineMode::bit_serial()).output;
    double err = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      err = std::max(err, std::abs(y[i] - ref[i]));
      norm = std::max(norm, std::abs(ref[i]));
    }
    CHECK(err / norm < 0.02);
  }
}

TEST_CASE("simulate_conv2d against direct convolution of the codes") {
  CounterRng rng(8);
  const Tensor x = oracle::random_normal({2, 5, 5}, rng);
  const Tensor w = oracle::random_normal({3, 2, 3, 3}, rng);
  const OperandBits bits{8, 8, S};
  const auto r = simulate_conv2d(x, w, 2, 1, bits, boundary_cfg(256, 1), {}, EngineMode::bit_serial());
  REQUIRE(r.output.shape() == std::vector<std::size_t>{3, 3, 3});
  const auto qx = quantize(x, 8, S), qw = quantize(w, 8, S);
  for (std::size_t f = 0; f < 3; ++f)
    for (long oh = 0; oh < 3; ++oh)
      for (long ow = 0; ow < 3; ++ow) {
        std::int64_t acc = 0;
        for (std::size_t c = 0; c < 2; ++c)
          for (long i = 0; i < 3; ++i)
            for (long j = 0; j < 3; ++j) {
              const long rr = oh * 2 + i - 1, cc = ow * 2 + j - 1;
              if (rr < 0 || cc < 0 || rr >= 5 || cc >= 5) continue;
              acc += std::int64_t{qx.codes[(c * 5 + static_cast<std::size_t>(rr)) * 5 + static_cast<std::size_t>(cc)]} *
                     qw.codes[((f * 2 + c) * 3 + static_cast<std::size_t>(i)) * 3 + static_cast<std::size_t>(j)];
            }
        const double expect = static_cast<double>(acc) * qx.params.scale * qw.params.scale;
        CHECK(r.output[(f * 3 + static_cast<std::size_t>(oh)) * 3 + static_cast<std::size_t>(ow)] == expect);
      }

  const auto zero = simulate_conv2d(Tensor({2, 5, 5}), w, 1, 0, bits, boundary_cfg(256, 1), {},
                                    EngineMode::bit_serial());
  for (double v : zero.output.data()) CHECK(v == 0.0);

  // 1x1 kernel on a single pixel is a scalar product.
  const auto one = simulate_conv2d(Tensor({1, 1, 1}, {0.5}), Tensor({1, 1, 1, 1}, {-2.0}), 1, 0,
                                   bits, boundary_cfg(256, 1), {}, EngineMode::bit_serial());
  CHECK(one.output[0] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("simulate_attention") {
  CounterRng rng(9);
  const MacroConfig cfg = boundary_cfg(256, 1);
  SUBCASE("single token returns the value row") {
    const Tensor q = oracle::random_normal({1, 8}, rng), k = oracle::random_normal({1, 8}, rng);
    const Tensor v = oracle::random_normal({1, 8}, rng);
    const auto r = simulate_attention(q, k, v, 8, cfg, {}, EngineMode::bit_serial());
    CHECK(r.probs[0] == 1.0);
    for (std::size_t i = 0; i < 8; ++i) CHECK(r.output[i] == doctest::Approx(v[i]).epsilon(0.01));
    CHECK(r.a_params.signedness == Signedness::Unsigned);
    CHECK(r.q_params.signedness == S);
    CHECK(r.k_params.signedness == S);
    CHECK(r.v_params.signedness == S);
  }
  SUBCASE("close to float attention") {
    const std::size_t T = 6, d = 16;
    const Tensor q = oracle::random_normal({T, d}, rng), k = oracle::random_normal({T, d}, rng);
    const Tensor v = oracle::random_normal({T, d}, rng);
    const auto r = simulate_attention(q, k, v, 8, cfg, {}, EngineMode::bit_serial());
    Tensor s = matmul(q, transpose(k));
    for (std::size_t i = 0; i < T; ++i) {
      double peak = -1e300, z = 0.0;
      for (std::size_t j = 0; j < T; ++j) peak = std::max(peak, s.at(i, j) / 4.0);
      for (std::size_t j = 0; j < T; ++j) z += (s.at(i, j) = std::exp(s.at(i, j) / 4.0 - peak));
      for (std::size_t j = 0; j < T; ++j) s.at(i, j) /= z;
    }
    const Tensor ref = matmul(s, v);
    double vmax = 0.0;
    for (double x : v.data()) vmax = std::max(vmax, std::abs(x));
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(r.output[i] - ref[i]) < 0.05 * vmax);
    CHECK_THROWS_AS(simulate_attention(q, oracle::random_normal({T, 3}, rng), v, 8, cfg, {},
                                       EngineMode::bit_serial()),
                    ShapeError);
  }
}

TEST_CASE("cycle and energy estimate") {
  const CyclePlan p = plan_cycles(8, 8, S, S, EngineMode::bit_serial());
  EnergyCoefficients zero;
  zero.adc[8] = 0.0;
  const auto e0 = estimate_cycles_energy(p, 3, zero, 8);
  CHECK(e0.cycles == 3 * 64);
  CHECK(e0.energy == 0.0);
  CHECK_THROWS_AS(estimate_cycles_energy(p, 1, zero, 6), ConfigError);

  EngineMode m;
  m.hybrid_boundary = 3;
  const CyclePlan h = plan_cycles(8, 8, S, S, m);
  EnergyCoefficients c;
  c.analog_cycle = 1.0;
  c.digital_cycle = 10.0;
  c.adc[8] = 0.5;
  CHECK(estimate_cycles_energy(h, 2, c, 8).energy == doctest::Approx(2 * (58 * 1.5 + 6 * 10.0)));

  const auto y1 = plan_cycles(8, 8, U, S, EngineMode::bit_serial());
  const auto y2 = plan_cycles(8, 8, U, S, EngineMode::bit_parallel(2));
  CHECK(estimate_cycles_energy(y2, 1, zero, 8).cycles * 2 == estimate_cycles_energy(y1, 1, zero, 8).cycles);
}
