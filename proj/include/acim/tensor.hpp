#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace acim {

struct Shape2D {
  std::size_t rows = 0;
  std::size_t cols = 0;
};

// Dense row-major real tensor. Values are validated finite on construction
// and the object is immutable afterwards except through explicit mutators
// used while building results.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> mutable_data() noexcept { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  // 2-D accessors; the tensor must be rank 2.
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }

  Tensor reshaped(std::vector<std::size_t> shape) const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::size_t shape_volume(const std::vector<std::size_t>& shape);

Tensor transpose(const Tensor& m);
Tensor matmul(const Tensor& a, const Tensor& b);

// Lowers a [C,H,W] input to a [patches, C*kh*kw] matrix. Row r holds the
// receptive field of output position r (row-major over H', W'), with zeros
// where the window reaches into the padding.
Tensor im2col(const Tensor& input, Shape2D kernel, int stride, int padding);

struct ConvGeometry {
  std::size_t out_h = 0;
  std::size_t out_w = 0;
};
ConvGeometry conv_output_geometry(std::size_t h, std::size_t w, Shape2D kernel, int stride,
                                  int padding);

// Splits the leading axis of a [D, M] tensor into ceil(D/chunk) pieces. The
// last piece keeps its true (possibly short) row count.
std::vector<Tensor> split_rows(const Tensor& t, std::size_t chunk);

}  // namespace acim
