#include "acim/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "acim/error.hpp"
#include "acim/rng.hpp"

namespace acim {

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
  end = std::min(end, size());
  if (begin >= end) throw ShapeError("empty dataset slice");
  const std::size_t f = feature_dim();
  auto first = features.data().begin() + static_cast<std::ptrdiff_t>(begin * f);
  Dataset out;
  out.features = Tensor({end - begin, f}, std::vector<double>(first, first + static_cast<std::ptrdiff_t>((end - begin) * f)));
  out.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(begin),
                    labels.begin() + static_cast<std::ptrdiff_t>(end));
  out.num_classes = num_classes;
  return out;
}

Dataset make_blobs(const BlobSpec& spec) {
  if (spec.classes < 2 || spec.dim < 1 || spec.per_class < 1)
    throw ConfigError("blob dataset needs >= 2 classes, dim >= 1 and per_class >= 1");
  const auto classes = static_cast<std::size_t>(spec.classes);
  const auto dim = static_cast<std::size_t>(spec.dim);
  const auto per_class = static_cast<std::size_t>(spec.per_class);

  CounterRng centers_rng(context_key(spec.seed, {}, RngStream::Operands));
  std::vector<double> centers(classes * dim);
  for (auto& c : centers) c = spec.separation * centers_rng.normal();

  // Samples are interleaved by class so any prefix is roughly balanced.
  const std::size_t n = classes * per_class;
  std::vector<double> x(n * dim);
  std::vector<int> y(n);
  RngContext ctx;
  ctx.layer = 1;
  ctx.batch = spec.sample_seed;
  CounterRng sample_rng(context_key(spec.seed, ctx, RngStream::Operands));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % classes;
    y[i] = static_cast<int>(c);
    for (std::size_t d = 0; d < dim; ++d)
      x[i * dim + d] = centers[c * dim + d] + spec.spread * sample_rng.normal();
  }
  return {Tensor({n, dim}, std::move(x)), std::move(y), spec.classes};
}

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);
  if (img.size() < 16 || be32(img, 0) != 0x00000803u)
    throw DataError(images_path + ": not an IDX3 unsigned-byte file");
  if (lab.size() < 8 || be32(lab, 0) != 0x00000801u)
    throw DataError(labels_path + ": not an IDX1 unsigned-byte file");
  const std::size_t n = be32(img, 4), rows = be32(img, 8), cols = be32(img, 12);
  if (be32(lab, 4) != n) throw DataError("image and label counts differ");
  const std::size_t f = rows * cols;
  if (n == 0 || f == 0) throw DataError(images_path + ": empty dataset");
  if (img.size() != 16 + n * f) throw DataError(images_path + ": truncated or oversized payload");
  if (lab.size() != 8 + n) throw DataError(labels_path + ": truncated or oversized payload");

  std::vector<double> x(n * f);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = img[16 + i] / 255.0;
  std::vector<int> y(n);
  int classes = 0;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = lab[8 + i];
    classes = std::max(classes, y[i] + 1);
  }
  return {Tensor({n, f}, std::move(x)), std::move(y), std::max(classes, 2)};
}

}  // namespace acim
