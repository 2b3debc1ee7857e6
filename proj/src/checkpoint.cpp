#include "acim/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "acim/error.hpp"

namespace acim {

namespace {

constexpr char kMagic[8] = {'A', 'C', 'I', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint8_t kLinear = 1;
constexpr std::uint8_t kRelu = 2;

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t>& bytes() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& buf, std::size_t begin, std::size_t end)
      : buf_(buf), pos_(begin), end_(end) {}

  std::uint8_t u8() {
    need(1);
    return buf_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{buf_[pos_++]} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{buf_[pos_++]} << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  bool done() const { return pos_ == end_; }

 private:
  void need(std::size_t n) const {
    if (end_ - pos_ < n) throw DataError("checkpoint payload is truncated");
  }

  const std::vector<std::uint8_t>& buf_;
  std::size_t pos_;
  std::size_t end_;
};

std::uint32_t crc_of(const std::uint8_t* data, std::size_t n) {
  return static_cast<std::uint32_t>(crc32(crc32(0L, Z_NULL, 0), data, static_cast<uInt>(n)));
}

}  // namespace

void save_checkpoint(const TinyModel& model, const std::string& path) {
  model.validate();
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(model.w_bits));
  w.u32(static_cast<std::uint32_t>(model.x_bits));
  w.f64(model.nat_sigma);
  w.u32(static_cast<std::uint32_t>(model.layers.size()));
  for (const auto& layer : model.layers) {
    if (const auto* lin = std::get_if<LinearLayer>(&layer)) {
      w.u8(kLinear);
      w.u32(static_cast<std::uint32_t>(lin->in()));
      w.u32(static_cast<std::uint32_t>(lin->out()));
      for (double v : lin->weights.data()) w.f64(v);
      for (double v : lin->bias.data()) w.f64(v);
    } else {
      w.u8(kRelu);
    }
  }
  auto& bytes = w.bytes();
  const std::uint32_t crc = crc_of(bytes.data() + sizeof kMagic, bytes.size() - sizeof kMagic);
  w.u32(crc);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing " + path);
}

TinyModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw DataError(path + ": not an ACIMCKPT checkpoint");
  if (bytes.size() < sizeof kMagic + 8) throw DataError(path + ": checkpoint is truncated");

  const std::size_t body_end = bytes.size() - 4;
  Reader trailer(bytes, body_end, bytes.size());
  const std::uint32_t stored = trailer.u32();
  Reader r(bytes, sizeof kMagic, body_end);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));
  if (crc_of(bytes.data() + sizeof kMagic, body_end - sizeof kMagic) != stored)
    throw DataError(path + ": checksum mismatch (corrupt or truncated file)");

  TinyModel model;
  model.w_bits = static_cast<int>(r.u32());
  model.x_bits = static_cast<int>(r.u32());
  model.nat_sigma = r.f64();
  const std::uint32_t n_layers = r.u32();
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    const std::uint8_t kind = r.u8();
    if (kind == kLinear) {
      const std::size_t rows = r.u32(), cols = r.u32();
      std::vector<double> w(rows * cols), b(cols);
      for (auto& v : w) v = r.f64();
      for (auto& v : b) v = r.f64();
      try {
        model.layers.emplace_back(
            LinearLayer{Tensor({rows, cols}, std::move(w)), Tensor({cols}, std::move(b))});
      } catch (const Error& e) {
        throw DataError(path + ": layer " + std::to_string(l) + ": " + e.what());
      }
    } else if (kind == kRelu) {
      model.layers.emplace_back(ReluLayer{});
    } else {
      throw DataError(path + ": unknown layer kind " + std::to_string(kind));
    }
  }
  if (!r.done()) throw DataError(path + ": trailing bytes after the last layer");
  try {
    model.validate();
  } catch (const Error& e) {
    throw DataError(path + ": " + e.what());
  }
  return model;
}

}  // namespace acim
