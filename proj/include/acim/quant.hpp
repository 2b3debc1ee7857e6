#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "acim/tensor.hpp"

namespace acim {

enum class Signedness { Unsigned, TwosComplement };

struct QuantParams {
  double scale = 1.0;  // real value of one integer step
  int bits = 8;
  Signedness signedness = Signedness::TwosComplement;

  // Most-negative code of a 2's-complement range. quantize() never emits it
  // (symmetric clipping), but hand-built tensors may carry it.
  std::int32_t min_code() const;
  std::int32_t max_code() const;
  void validate() const;
};

struct QuantizedTensor {
  std::vector<std::size_t> shape;
  std::vector<std::int32_t> codes;
  QuantParams params;

  QuantizedTensor() = default;
  QuantizedTensor(std::vector<std::size_t> shape, std::vector<std::int32_t> codes,
                  QuantParams params);

  std::size_t size() const noexcept { return codes.size(); }
  std::size_t dim(std::size_t axis) const { return shape.at(axis); }
};

// Binary planes ordered LSB to MSB, one byte (0/1) per element.
struct BitPlanes {
  std::vector<std::size_t> shape;
  std::vector<std::vector<std::uint8_t>> planes;
  QuantParams params;

  std::size_t elements() const noexcept { return planes.empty() ? 0 : planes.front().size(); }
};

struct GroupLayout {
  int width = 1;
  int shift = 0;  // index of the group's lowest bit
  bool sign_group = false;
};

struct ActivationGroup {
  GroupLayout layout;
  std::vector<std::int32_t> values;  // each in [0, 2^width - 1]
};

struct ActivationGroups {
  std::vector<std::size_t> shape;
  std::vector<ActivationGroup> groups;
};

// Per-tensor symmetric quantization calibrated on max|t|.
QuantizedTensor quantize(const Tensor& t, int bits, Signedness signedness);

// Quantizes with a caller-supplied step; values outside the range clip.
QuantizedTensor quantize_with(const Tensor& t, const QuantParams& params);

Tensor dequantize(const QuantizedTensor& q);

BitPlanes decompose_bits(const QuantizedTensor& q);
std::vector<std::int32_t> recompose_bits(const BitPlanes& b);

// Group widths/shifts for a given activation format and encoding width y.
// Plain groups come LSB first; a 2's-complement sign bit is appended last as
// a width-1 sign group.
std::vector<GroupLayout> activation_group_layout(int bits, Signedness signedness, int y);

ActivationGroups encode_activation_groups(const BitPlanes& b, int y);
std::vector<std::int32_t> recompose_groups(const ActivationGroups& g);

std::vector<double> bit_sparsity(const BitPlanes& b);

}  // namespace acim
