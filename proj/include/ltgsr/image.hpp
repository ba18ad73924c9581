#pragma once

#include <span>
#include <vector>

#include "ltgsr/tensor.hpp"

namespace ltgsr {

/// Single-channel row-major image. Pixels nominally lie in [0,1].
class Image {
 public:
  Image() = default;
  Image(int height, int width, double fill = 0.0);
  Image(int height, int width, std::vector<double> pixels);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return pixels_.size(); }

  double& at(int y, int x) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int y, int x) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<double> pixels() { return pixels_; }
  std::span<const double> pixels() const { return pixels_; }

  bool same_dims(const Image& o) const { return height_ == o.height_ && width_ == o.width_; }
  bool operator==(const Image&) const = default;

  /// Checks the Image invariants: finite values in [0,1], dims >= 8.
  bool valid() const;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> pixels_;
};

struct Shift {
  int dy = 0;
  int dx = 0;
  bool operator==(const Shift&) const = default;
};

Image clamp01(Image img);
/// out(y, x) = img((y - dy) mod H, (x - dx) mod W).
Image circular_shift(const Image& img, int dy, int dx);
Image crop(const Image& img, int top, int left, int height, int width);
std::size_t count_differing(const Image& a, const Image& b);

/// 1x1xHxW tensor view of an image and back.
Tensor to_tensor(const Image& img);
Tensor to_tensor(std::span<const Image> batch);
Image to_image(const Tensor& t, int sample = 0, bool clamp = false);

}  // namespace ltgsr
