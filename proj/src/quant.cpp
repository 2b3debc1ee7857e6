#include "acim/quant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "acim/error.hpp"

namespace acim {

std::int32_t QuantParams::min_code() const {
  return signedness == Signedness::Unsigned ? 0 : -(std::int32_t{1} << (bits - 1));
}

std::int32_t QuantParams::max_code() const {
  return signedness == Signedness::Unsigned ? (std::int32_t{1} << bits) - 1
                                            : (std::int32_t{1} << (bits - 1)) - 1;
}

void QuantParams::validate() const {
  if (bits < 2 || bits > 16)
    throw DomainError("quantization bits must be in [2,16], got " + std::to_string(bits));
  if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("quantization scale must be > 0");
}

QuantizedTensor::QuantizedTensor(std::vector<std::size_t> s, std::vector<std::int32_t> c,
                                 QuantParams p)
    : shape(std::move(s)), codes(std::move(c)), params(p) {
  params.validate();
  if (codes.size() != shape_volume(shape)) throw ShapeError("code count does not match shape");
  const auto lo = params.min_code(), hi = params.max_code();
  for (auto v : codes)
    if (v < lo || v > hi)
      throw DomainError("code " + std::to_string(v) + " outside [" + std::to_string(lo) + "," +
                        std::to_string(hi) + "]");
}

QuantizedTensor quantize(const Tensor& t, int bits, Signedness signedness) {
  QuantParams p{1.0, bits, signedness};
  p.validate();
  double peak = 0.0;
  for (double v : t.data()) {
    if (signedness == Signedness::Unsigned && v < 0.0)
      throw DomainError("unsigned quantization of a tensor with negative values");
    peak = std::max(peak, std::abs(v));
  }
  const double levels = signedness == Signedness::Unsigned ? std::ldexp(1.0, bits) - 1.0
                                                           : std::ldexp(1.0, bits - 1) - 1.0;
  if (peak > 0.0) p.scale = peak / levels;
  return quantize_with(t, p);
}

QuantizedTensor quantize_with(const Tensor& t, const QuantParams& params) {
  params.validate();
  // Symmetric range: the most-negative 2's-complement code is never produced.
  const std::int32_t hi = params.max_code();
  const std::int32_t lo = params.signedness == Signedness::Unsigned ? 0 : -hi;
  std::vector<std::int32_t> codes(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = std::round(t[i] / params.scale);
    codes[i] = static_cast<std::int32_t>(std::clamp(r, double(lo), double(hi)));
  }
  return {t.shape(), std::move(codes), params};
}

Tensor dequantize(const QuantizedTensor& q) {
  std::vector<double> out(q.codes.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = q.codes[i] * q.params.scale;
  return {q.shape, std::move(out)};
}

BitPlanes decompose_bits(const QuantizedTensor& q) {
  BitPlanes b{q.shape, {}, q.params};
  const int bits = q.params.bits;
  const std::uint32_t mask = (1u << bits) - 1u;
  b.planes.assign(static_cast<std::size_t>(bits), std::vector<std::uint8_t>(q.codes.size()));
  for (std::size_t i = 0; i < q.codes.size(); ++i) {
    // Two's-complement bit pattern truncated to `bits`; identical for unsigned codes.
    const auto pattern = static_cast<std::uint32_t>(q.codes[i]) & mask;
    for (int p = 0; p < bits; ++p) b.planes[p][i] = static_cast<std::uint8_t>((pattern >> p) & 1u);
  }
  return b;
}

std::vector<std::int32_t> recompose_bits(const BitPlanes& b) {
  const int bits = static_cast<int>(b.planes.size());
  std::vector<std::int32_t> codes(b.elements(), 0);
  for (int p = 0; p < bits; ++p) {
    std::int32_t weight = std::int32_t{1} << p;
    if (b.params.signedness == Signedness::TwosComplement && p == bits - 1) weight = -weight;
    for (std::size_t i = 0; i < codes.size(); ++i) codes[i] += weight * b.planes[p][i];
  }
  return codes;
}

std::vector<GroupLayout> activation_group_layout(int bits, Signedness signedness, int y) {
  if (y < 1) throw DomainError("encoding width must be >= 1");
  if (y > bits) throw DomainError("encoding width exceeds activation bit width");
  const bool has_sign = signedness == Signedness::TwosComplement;
  const int plain_bits = has_sign ? bits - 1 : bits;
  std::vector<GroupLayout> out;
  for (int lo = 0; lo < plain_bits; lo += y) out.push_back({std::min(y, plain_bits - lo), lo, false});
  if (has_sign) out.push_back({1, bits - 1, true});
  return out;
}

ActivationGroups encode_activation_groups(const BitPlanes& b, int y) {
  const int bits = static_cast<int>(b.planes.size());
  ActivationGroups g{b.shape, {}};
  for (const auto& layout : activation_group_layout(bits, b.params.signedness, y)) {
    ActivationGroup group{layout, std::vector<std::int32_t>(b.elements(), 0)};
    for (int j = 0; j < layout.width; ++j) {
      const auto& plane = b.planes[static_cast<std::size_t>(layout.shift + j)];
      for (std::size_t i = 0; i < plane.size(); ++i) group.values[i] += plane[i] << j;
    }
    g.groups.push_back(std::move(group));
  }
  return g;
}

std::vector<std::int32_t> recompose_groups(const ActivationGroups& g) {
  std::vector<std::int32_t> codes(shape_volume(g.shape), 0);
  for (const auto& group : g.groups) {
    const std::int32_t weight =
        (group.layout.sign_group ? -1 : 1) * (std::int32_t{1} << group.layout.shift);
    for (std::size_t i = 0; i < codes.size(); ++i) codes[i] += weight * group.values[i];
  }
  return codes;
}

std::vector<double> bit_sparsity(const BitPlanes& b) {
  if (b.planes.empty() || b.elements() == 0) throw DomainError("bit_sparsity needs nonempty planes");
  std::vector<double> out;
  out.reserve(b.planes.size());
  for (const auto& plane : b.planes) {
    std::size_t ones = 0;
    for (auto v : plane) ones += v;
    out.push_back(static_cast<double>(ones) / static_cast<double>(plane.size()));
  }
  return out;
}

}  // namespace acim
