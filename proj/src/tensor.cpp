#include "acim/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "acim/error.hpp"

namespace acim {

namespace {

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void check_shape(const std::vector<std::size_t>& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
  for (auto d : shape)
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_str(shape));
}

}  // namespace

std::size_t shape_volume(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(shape_volume(shape_), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (data_.size() != shape_volume(shape_))
    throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_str(shape_));
  for (double v : data_)
    if (!std::isfinite(v)) throw DomainError("tensor values must be finite");
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) throw ShapeError("axis out of range");
  return shape_[axis];
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
  check_shape(shape);
  if (shape_volume(shape) != data_.size())
    throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  Tensor out;
  out.shape_ = std::move(shape);
  out.data_ = data_;
  return out;
}

Tensor transpose(const Tensor& m) {
  if (m.rank() != 2) throw ShapeError("transpose expects a rank-2 tensor");
  const std::size_t r = m.dim(0), c = m.dim(1);
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(j, i) = m.at(i, j);
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) throw ShapeError("matmul expects rank-2 tensors");
  if (a.dim(1) != b.dim(0))
    throw ShapeError("matmul inner dimensions differ: " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  Tensor out({n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a.at(i, p);
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) out.at(i, j) += av * b.at(p, j);
    }
  return out;
}

ConvGeometry conv_output_geometry(std::size_t h, std::size_t w, Shape2D kernel, int stride,
                                  int padding) {
  if (stride < 1) throw ShapeError("stride must be >= 1");
  if (padding < 0) throw ShapeError("padding must be >= 0");
  if (kernel.rows == 0 || kernel.cols == 0) throw ShapeError("kernel must be non-empty");
  const std::size_t ph = h + 2 * static_cast<std::size_t>(padding);
  const std::size_t pw = w + 2 * static_cast<std::size_t>(padding);
  if (kernel.rows > ph || kernel.cols > pw)
    throw ShapeError("kernel larger than padded input");
  const auto s = static_cast<std::size_t>(stride);
  return {(ph - kernel.rows) / s + 1, (pw - kernel.cols) / s + 1};
}

Tensor im2col(const Tensor& input, Shape2D kernel, int stride, int padding) {
  if (input.rank() != 3) throw ShapeError("im2col expects a [C,H,W] input");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const auto geo = conv_output_geometry(h, w, kernel, stride, padding);
  const std::size_t cols = c * kernel.rows * kernel.cols;
  Tensor out({geo.out_h * geo.out_w, cols});
  const auto pad = static_cast<std::ptrdiff_t>(padding);
  for (std::size_t oy = 0; oy < geo.out_h; ++oy)
    for (std::size_t ox = 0; ox < geo.out_w; ++ox) {
      const std::size_t row = oy * geo.out_w + ox;
      std::size_t col = 0;
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t ky = 0; ky < kernel.rows; ++ky)
          for (std::size_t kx = 0; kx < kernel.cols; ++kx, ++col) {
            const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - pad;
            const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - pad;
            if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(h) ||
                ix >= static_cast<std::ptrdiff_t>(w))
              continue;
            out.at(row, col) = input[(ch * h + static_cast<std::size_t>(iy)) * w +
                                     static_cast<std::size_t>(ix)];
          }
    }
  return out;
}

std::vector<Tensor> split_rows(const Tensor& t, std::size_t chunk) {
  if (chunk < 1) throw ShapeError("chunk must be >= 1");
  if (t.rank() != 2) throw ShapeError("split_rows expects a rank-2 tensor");
  const std::size_t d = t.dim(0), m = t.dim(1);
  std::vector<Tensor> out;
  for (std::size_t start = 0; start < d; start += chunk) {
    const std::size_t n = std::min(chunk, d - start);
    auto first = t.data().begin() + static_cast<std::ptrdiff_t>(start * m);
    out.emplace_back(std::vector<std::size_t>{n, m},
                     std::vector<double>(first, first + static_cast<std::ptrdiff_t>(n * m)));
  }
  return out;
}

}  // namespace acim
