#include "ltgsr/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ltgsr/errors.hpp"

namespace ltgsr {

Image::Image(int height, int width, double fill) : height_(height), width_(width) {
  if (height < 1 || width < 1) throw InvalidArgument("image dims must be positive");
  pixels_.assign(static_cast<std::size_t>(height) * width, fill);
}

Image::Image(int height, int width, std::vector<double> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (height < 1 || width < 1) throw InvalidArgument("image dims must be positive");
  if (pixels_.size() != static_cast<std::size_t>(height) * width) {
    throw InvalidArgument("pixel count does not match " + std::to_string(height) + "x" + std::to_string(width));
  }
}

bool Image::valid() const {
  if (height_ < 8 || width_ < 8) return false;
  return std::all_of(pixels_.begin(), pixels_.end(),
                     [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; });
}

Image clamp01(Image img) {
  for (double& v : img.pixels()) v = std::clamp(v, 0.0, 1.0);
  return img;
}

Image circular_shift(const Image& img, int dy, int dx) {
  const int h = img.height(), w = img.width();
  Image out(h, w);
  for (int y = 0; y < h; ++y) {
    const int sy = ((y - dy) % h + h) % h;
    for (int x = 0; x < w; ++x) out.at(y, x) = img.at(sy, ((x - dx) % w + w) % w);
  }
  return out;
}

Image crop(const Image& img, int top, int left, int height, int width) {
  if (top < 0 || left < 0 || height < 1 || width < 1 || top + height > img.height() ||
      left + width > img.width()) {
    throw InvalidArgument("crop rectangle outside image");
  }
  Image out(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) out.at(y, x) = img.at(top + y, left + x);
  }
  return out;
}

std::size_t count_differing(const Image& a, const Image& b) {
  if (!a.same_dims(b)) throw InvalidArgument("count_differing: dims differ");
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += a.pixels()[i] != b.pixels()[i];
  return n;
}

Tensor to_tensor(const Image& img) {
  return Tensor(Shape{1, 1, img.height(), img.width()}, std::vector<double>(img.pixels().begin(), img.pixels().end()));
}

Tensor to_tensor(std::span<const Image> batch) {
  std::vector<Tensor> parts;
  parts.reserve(batch.size());
  for (const auto& img : batch) parts.push_back(to_tensor(img));
  return stack(parts);
}

Image to_image(const Tensor& t, int sample, bool clamp) {
  if (t.c() != 1) throw InvalidArgument("to_image: expected one channel, got " + t.shape().str());
  const double* p = t.plane(sample, 0);
  std::vector<double> v(p, p + t.shape().plane());
  if (clamp) {
    for (double& x : v) x = std::clamp(x, 0.0, 1.0);
  }
  return Image(t.h(), t.w(), std::move(v));
}

}  // namespace ltgsr
