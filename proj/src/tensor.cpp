#include "ltgsr/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "ltgsr/errors.hpp"

namespace ltgsr {

std::string Shape::str() const {
  return "[" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
         std::to_string(w) + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(shape), data_(shape.numel(), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(shape), data_(std::move(values)) {
  if (data_.size() != shape_.numel()) {
    throw InvalidArgument("tensor value count does not match shape " + shape_.str());
  }
}

double Tensor::item() const {
  if (data_.size() != 1) throw InvalidArgument("item() on non-scalar tensor " + shape_.str());
  return data_[0];
}

Tensor Tensor::sample(int i) const {
  Shape s = shape_;
  s.n = 1;
  const std::size_t len = s.numel();
  std::vector<double> v(data_.begin() + static_cast<std::ptrdiff_t>(i * len),
                        data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * len));
  return Tensor(s, std::move(v));
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

Tensor stack(std::span<const Tensor> samples) {
  if (samples.empty()) throw InvalidArgument("stack of zero tensors");
  Shape s = samples.front().shape();
  for (const auto& t : samples) {
    if (t.n() != 1 || t.c() != s.c || t.h() != s.h || t.w() != s.w) {
      throw InvalidArgument("stack: inconsistent sample shapes");
    }
  }
  s.n = static_cast<int>(samples.size());
  std::vector<double> v;
  v.reserve(s.numel());
  for (const auto& t : samples) v.insert(v.end(), t.values().begin(), t.values().end());
  return Tensor(s, std::move(v));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw InvalidArgument("max_abs_diff: " + a.shape().str() + " vs " + b.shape().str());
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace ltgsr
