#pragma once

#include <string>

#include "acim/trainer.hpp"

namespace acim {

// Binary container: "ACIMCKPT", u32 version, payload, u32 CRC-32 of the
// version and payload. All integers and doubles are little-endian.
//
// payload: u32 w_bits, u32 x_bits, f64 nat_sigma, u32 layer count, then per
// layer a u8 kind (1 = linear: u32 in, u32 out, in*out weights, out biases;
// 2 = relu).
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const TinyModel& model, const std::string& path);
TinyModel load_checkpoint(const std::string& path);

}  // namespace acim
