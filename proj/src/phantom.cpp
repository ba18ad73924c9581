#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "ltgsr/errors.hpp"
#include "ltgsr/imaging.hpp"
#include "ltgsr/random.hpp"
#include "ltgsr/resample.hpp"

namespace ltgsr {
namespace {

struct Canvas {
  int h, w;
  std::vector<double> v;
  // Soft disk with a Gaussian cross-section, combined by max.
  void splat(double cy, double cx, double sigma, double intensity) {
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    const int y0 = std::max(0, static_cast<int>(cy) - r), y1 = std::min(h - 1, static_cast<int>(cy) + r);
    const int x0 = std::max(0, static_cast<int>(cx) - r), x1 = std::min(w - 1, static_cast<int>(cx) + r);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        double& dst = v[static_cast<std::size_t>(y) * w + x];
        dst = std::max(dst, intensity * std::exp(-d2 * inv));
      }
    }
  }
};

struct Branch {
  double y, x, angle, width, intensity;
  int depth;
};

void grow_vessels(Canvas& canvas, std::mt19937_64& rng, double cy, double cx, double faz_radius) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  const int trunks = 6 + static_cast<int>(u(rng) * 4);
  std::vector<Branch> pending;
  for (int t = 0; t < trunks; ++t) {
    const double theta = two_pi * (t + 0.7 * u(rng)) / trunks;
    const double start = faz_radius * (1.05 + 0.3 * u(rng));
    pending.push_back({cy + start * std::sin(theta), cx + start * std::cos(theta), theta + 0.3 * n(rng),
                       1.3 + 0.8 * u(rng), 0.7 + 0.25 * u(rng), 0});
  }
  const int max_steps = 4 * (canvas.h + canvas.w);
  std::size_t budget = 400;  // total branches
  while (!pending.empty() && budget > 0) {
    Branch b = pending.back();
    pending.pop_back();
    --budget;
    double curvature = 0.0;
    for (int step = 0; step < max_steps; ++step) {
      canvas.splat(b.y, b.x, 0.5 * b.width, b.intensity);
      curvature = 0.85 * curvature + 0.06 * n(rng);
      b.angle += curvature;
      b.y += std::sin(b.angle);
      b.x += std::cos(b.angle);
      if (b.y < -2 || b.x < -2 || b.y > canvas.h + 1 || b.x > canvas.w + 1) break;
      if (std::hypot(b.y - cy, b.x - cx) < faz_radius) break;
      if (b.depth < 5 && u(rng) < 0.035) {
        const double side = u(rng) < 0.5 ? -1.0 : 1.0;
        pending.push_back({b.y, b.x, b.angle + side * (0.5 + 0.5 * u(rng)), b.width * 0.72,
                           b.intensity * (0.85 + 0.1 * u(rng)), b.depth + 1});
        b.width *= 0.9;
      }
      b.width *= 0.998;
      if (b.width < 0.5) break;
    }
  }
}

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

Image generate_phantom(std::uint64_t seed, int height, int width) {
  if (height < 32 || width < 32 || height % 4 != 0 || width % 4 != 0) {
    throw InvalidArgument("generate_phantom: dims must be >= 32 and divisible by 4, got " +
                          std::to_string(height) + "x" + std::to_string(width));
  }
  std::mt19937_64 rng(derive_seed({seed, 0x50484Eull}));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);

  const double cy = height * (0.5 + 0.08 * (u(rng) - 0.5));
  const double cx = width * (0.5 + 0.08 * (u(rng) - 0.5));
  const double faz = std::min(height, width) * (0.09 + 0.04 * u(rng));

  Canvas vessels{height, width, std::vector<double>(static_cast<std::size_t>(height) * width, 0.0)};
  grow_vessels(vessels, rng, cy, cx, faz);

  // Capillary mesh: short faint segments.
  const int capillaries = height * width / 40;
  for (int i = 0; i < capillaries; ++i) {
    double y = u(rng) * height, x = u(rng) * width;
    double angle = 2.0 * std::numbers::pi * u(rng);
    const int len = 3 + static_cast<int>(u(rng) * 6);
    const double intensity = 0.2 + 0.25 * u(rng);
    for (int s = 0; s < len; ++s) {
      vessels.splat(y, x, 0.45, intensity);
      angle += 0.3 * n(rng);
      y += std::sin(angle);
      x += std::cos(angle);
    }
  }

  Image img(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double r = std::hypot(y - cy, x - cx);
      const double gate = smoothstep(faz, faz + 3.0, r);
      const double background = 0.05 + 0.025 * std::abs(n(rng));
      const double vessel = vessels.v[static_cast<std::size_t>(y) * width + x] * gate;
      img.at(y, x) = std::clamp(background * (gate * 0.7 + 0.3) + vessel * (1.0 - background), 0.0, 1.0);
    }
  }
  return img;
}

Image bicubic_resize(const Image& img, int num, int den) {
  const bool up = num == 2 && den == 1;
  const bool down = num == 1 && den == 2;
  if (!up && !down) throw InvalidArgument("bicubic_resize: scale must be 2 or 1/2");
  if (down && (img.height() % 2 != 0 || img.width() % 2 != 0)) {
    throw InvalidArgument("bicubic_resize: x1/2 of odd dims is not integral");
  }
  const int oh = img.height() * num / den, ow = img.width() * num / den;
  const RowMatrix rows = bicubic_matrix(img.height(), oh);
  const RowMatrix cols = bicubic_matrix(img.width(), ow);
  Eigen::Map<const RowMatrix> src(img.pixels().data(), img.height(), img.width());
  Image out(oh, ow);
  Eigen::Map<RowMatrix>(out.pixels().data(), oh, ow).noalias() = rows * src * cols.transpose();
  return out;
}

Image degrade(const Image& hr, std::uint64_t noise_seed, const DegradeOptions& opts) {
  if (hr.height() % 2 != 0 || hr.width() % 2 != 0) {
    throw InvalidArgument("degrade: dims must be even");
  }
  std::mt19937_64 rng(derive_seed({noise_seed, 0x4E4F49ull}));
  std::normal_distribution<double> n(0.0, 1.0);
  Image low(hr.height() / 2, hr.width() / 2);
  for (int y = 0; y < low.height(); ++y) {
    for (int x = 0; x < low.width(); ++x) {
      const double v = hr.at(2 * y, 2 * x);
      low.at(y, x) = v + opts.noise_amplitude * (0.35 + v) * n(rng);
    }
  }
  return clamp01(bicubic_resize(low, 2, 1));
}

GroupSeeds group_seeds(std::uint64_t seed, int index) {
  const auto i = static_cast<std::uint64_t>(index);
  return {derive_seed({seed, i, 1}), derive_seed({seed, i, 2}), derive_seed({seed, i, 3}),
          derive_seed({seed, i, 4})};
}

std::vector<SampleGroup> make_dataset(int n, std::uint64_t seed, int height, int width) {
  if (n < 1) throw InvalidArgument("make_dataset: n must be >= 1");
  std::vector<SampleGroup> groups;
  groups.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const GroupSeeds s = group_seeds(seed, i);
    SampleGroup g;
    g.hr = generate_phantom(s.hr, height, width);
    g.lr = degrade(g.hr, s.lr_noise);
    g.ref = generate_phantom(s.ref, height, width);
    g.ref_down = degrade(g.ref, s.ref_noise);
    groups.push_back(std::move(g));
  }
  return groups;
}

}  // namespace ltgsr
