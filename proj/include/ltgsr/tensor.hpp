#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ltgsr {

/// NCHW extents. Every tensor in the library is four-dimensional; scalars are 1x1x1x1.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Dense row-major float64 tensor with value semantics.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor(Shape{}, v); }

  const Shape& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double* plane(int n, int c) { return data_.data() + offset(n, c, 0, 0); }
  const double* plane(int n, int c) const { return data_.data() + offset(n, c, 0, 0); }

  double& at(int n, int c, int y, int x) { return data_[offset(n, c, y, x)]; }
  double at(int n, int c, int y, int x) const { return data_[offset(n, c, y, x)]; }
  double item() const;

  std::size_t offset(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }

  /// Sample `i` as a standalone 1xCxHxW tensor.
  Tensor sample(int i) const;
  bool all_finite() const;
  double max_abs() const;

 private:
  Shape shape_{0, 0, 0, 0};
  std::vector<double> data_;
};

/// Stack 1xCxHxW tensors along N.
Tensor stack(std::span<const Tensor> samples);

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace ltgsr
