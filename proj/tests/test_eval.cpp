#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "ltgsr/errors.hpp"
#include "ltgsr/eval.hpp"
#include "ltgsr/imaging.hpp"
#include "ltgsr/metrics.hpp"

using namespace ltgsr;

namespace {

Image random_image(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(h, w);
  for (double& v : img.pixels()) v = u(rng);
  return img;
}

Image add_noise(const Image& a, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  Image out = a;
  for (double& v : out.pixels()) v += n(rng);
  return out;
}

double psnr_loop(const Image& a, const Image& b) {
  double s = 0.0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      const double d = a.at(y, x) - b.at(y, x);
      s += d * d;
    }
  }
  return 10.0 * std::log10(1.0 / (s / (a.height() * a.width())));
}

double ssim_loop(const Image& a, const Image& b) {
  double g[11][11];
  double total = 0.0;
  for (int i = 0; i < 11; ++i) {
    for (int j = 0; j < 11; ++j) {
      g[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
      total += g[i][j];
    }
  }
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double sum = 0.0;
  int count = 0;
  for (int y = 0; y + 11 <= a.height(); ++y) {
    for (int x = 0; x + 11 <= a.width(); ++x) {
      double ma = 0, mb = 0, aa = 0, bb = 0, ab = 0;
      for (int i = 0; i < 11; ++i) {
        for (int j = 0; j < 11; ++j) {
          const double w = g[i][j] / total, va = a.at(y + i, x + j), vb = b.at(y + i, x + j);
          ma += w * va;
          mb += w * vb;
          aa += w * va * va;
          bb += w * vb * vb;
          ab += w * va * vb;
        }
      }
      const double sa = aa - ma * ma, sb = bb - mb * mb, sab = ab - ma * mb;
      sum += ((2 * ma * mb + c1) * (2 * sab + c2)) / ((ma * ma + mb * mb + c1) * (sa + sb + c2));
      ++count;
    }
  }
  return sum / count;
}

ModelConfig tiny_model() {
  ModelConfig m;
  m.channels = {4, 6, 8};
  m.deep_channels = 8;
  m.msfp_blocks = 1;
  m.decoder_res_blocks = 1;
  m.critic_channels = {4, 8};
  m.critic_input = 32;
  return m;
}

}  // namespace

TEST_CASE("psnr values") {
  const Image a = random_image(24, 20, 1);
  CHECK(psnr(a, a) == std::numeric_limits<double>::infinity());
  CHECK(format_psnr(psnr(a, a)) == "inf");
  Image c(16, 16, 0.3), d(16, 16, 0.4);
  CHECK(std::abs(psnr(c, d) - 20.0) < 1e-9);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Image x = random_image(17, 23, 10 + s), y = random_image(17, 23, 20 + s);
    CHECK(std::abs(psnr(x, y) - psnr_loop(x, y)) < 1e-9);
  }
  double prev = std::numeric_limits<double>::infinity();
  for (double sigma : {0.01, 0.02, 0.05, 0.1, 0.2}) {
    const double p = psnr(a, add_noise(a, sigma, 3));
    CHECK(p < prev);
    prev = p;
  }
  CHECK_THROWS_AS(psnr(a, random_image(24, 21, 1)), InvalidArgument);
}

TEST_CASE("ssim values") {
  const Image a = random_image(32, 28, 4);
  CHECK(ssim(a, a) == 1.0);
  const Image b = random_image(32, 28, 5);
  CHECK(ssim(a, b) == ssim(b, a));
  CHECK(std::abs(ssim(a, b) - ssim_loop(a, b)) < 1e-9);
  const Image smooth = bicubic_resize(random_image(12, 12, 6), 2, 1);
  CHECK(std::abs(ssim(smooth, add_noise(smooth, 0.05, 7)) - ssim_loop(smooth, add_noise(smooth, 0.05, 7))) < 1e-9);
  CHECK(ssim(a, add_noise(a, 1e-4, 8)) > 0.99);

  Image board(16, 16), inverse(16, 16);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      board.at(y, x) = (x + y) % 2;
      inverse.at(y, x) = 1.0 - board.at(y, x);
    }
  }
  CHECK(ssim(board, inverse) < 0.0);
  const double s = ssim(a, b);
  CHECK(s >= -1.0);
  CHECK(s <= 1.0);
  CHECK_THROWS_AS(ssim(Image(10, 20, 0.0), Image(10, 20, 0.0)), InvalidArgument);
  CHECK_THROWS_AS(ssim(a, crop(b, 0, 0, 31, 28)), InvalidArgument);
}

TEST_CASE("perceptual distance is a pseudo-metric") {
  const Image a = generate_phantom(1, 32, 32);
  const Image b = generate_phantom(2, 32, 32);
  CHECK(perceptual_distance(a, a) == 0.0);
  CHECK(perceptual_distance(a, b) > 0.0);
  CHECK(perceptual_distance(a, b) == perceptual_distance(b, a));
  CHECK(perceptual_distance(a, degrade(a, 3)) > perceptual_distance(a, a));
  CHECK_THROWS_AS(perceptual_distance(Image(30, 32, 0.0), Image(30, 32, 0.0)), InvalidArgument);
  CHECK_THROWS_AS(perceptual_distance(a, Image(32, 28, 0.0)), InvalidArgument);
}

TEST_CASE("summaries and report rendering") {
  MetricReport r = summarize({{0, 20.0, 0.5, 0.1}, {1, 30.0, 0.7, 0.3}});
  CHECK(r.psnr == 25.0);
  CHECK(r.ssim == doctest::Approx(0.6));
  CHECK(r.pdist == doctest::Approx(0.2));
  const auto j = to_json(r);
  CHECK(j.at("per_image").size() == 2);
  CHECK(j.at("psnr") == 25.0);
  const MetricReport inf = summarize({{0, std::numeric_limits<double>::infinity(), 1.0, 0.0}});
  CHECK(to_json(inf).at("psnr") == "inf");
  CHECK(to_json(inf).at("per_image")[0].at("psnr") == "inf");
  const std::string csv = to_csv(r);
  CHECK(csv.rfind("index,psnr,ssim,pdist\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

  const std::vector<double> same{0.25, 0.25, 0.25};
  CHECK(stddev(same) == 0.0);
  const std::vector<double> spread{1.0, 3.0};
  CHECK(stddev(spread) == 1.0);
  CHECK(stddev(std::span<const double>{}) == 0.0);
}

TEST_CASE("score_images matches the per-image metrics") {
  const std::vector<Image> out{generate_phantom(4, 32, 32), generate_phantom(5, 32, 32)};
  const std::vector<Image> ref{generate_phantom(6, 32, 32), generate_phantom(5, 32, 32)};
  const MetricReport r = score_images(out, ref);
  REQUIRE(r.per_image.size() == 2);
  CHECK(r.per_image[0].psnr == psnr(out[0], ref[0]));
  CHECK(r.per_image[0].ssim == ssim(out[0], ref[0]));
  CHECK(r.per_image[1].psnr == std::numeric_limits<double>::infinity());
  CHECK(r.per_image[1].pdist == 0.0);
  CHECK_THROWS_AS(score_images(out, std::span<const Image>(ref).first(1)), InvalidArgument);
}

TEST_CASE("reference sensitivity") {
  const auto data = make_dataset(3, 21, 32, 32);
  Model model(tiny_model(), 3);
  TrainState state;
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  CHECK_THROWS_AS(ref_sensitivity(model, state, data, seeds), InvalidState);
  state.global_step = 1;
  const SensitivityReport empty = ref_sensitivity(model, state, data, std::span<const std::uint64_t>{});
  CHECK(empty.rows.empty());

  const SensitivityReport r = ref_sensitivity(model, state, data, seeds);
  REQUIRE(r.rows.size() == 3);
  for (const auto& row : r.rows) {
    auto sorted = row.assignment;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{0, 1, 2});
    for (std::size_t i = 0; i < row.ltg.per_image.size(); ++i) {
      CHECK(row.ltg.per_image[i].psnr == r.rows[0].ltg.per_image[i].psnr);
      CHECK(row.ltg.per_image[i].ssim == r.rows[0].ltg.per_image[i].ssim);
      CHECK(row.ltg.per_image[i].pdist == r.rows[0].ltg.per_image[i].pdist);
    }
  }
  CHECK(r.ltg.psnr_std == 0.0);
  CHECK(r.ltg.ssim_std == 0.0);
  CHECK(r.search.psnr_std >= 0.0);
  const auto j = to_json(r);
  CHECK(j.at("rows").size() == 3);
  CHECK(ref_sensitivity(model, state, data, seeds).rows[1].assignment == r.rows[1].assignment);
}
