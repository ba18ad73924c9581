#include "ltgsr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "ltgsr/errors.hpp"
#include "ltgsr/metrics.hpp"
#include "ltgsr/parallel.hpp"
#include "ltgsr/random.hpp"

namespace ltgsr {

using nlohmann::json;

namespace {

constexpr std::uint64_t kPdistSeed = 0x9D15;

EncoderConfig pdist_encoder() {
  EncoderConfig cfg;
  cfg.channels = {16, 32, 64};
  cfg.deep_channels = 1;
  cfg.trainable = false;
  return cfg;
}

json psnr_json(double v) { return std::isinf(v) ? json(format_psnr(v)) : json(v); }

double mean(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

ModeSummary summarize_mode(const std::vector<const MetricReport*>& reports) {
  std::vector<double> p, s;
  for (const MetricReport* r : reports) {
    p.push_back(r->psnr);
    s.push_back(r->ssim);
  }
  return {mean(p), stddev(p), mean(s), stddev(s)};
}

json summary_json(const ModeSummary& m) {
  return {{"psnr_mean", psnr_json(m.psnr_mean)}, {"psnr_std", m.psnr_std}, {"ssim_mean", m.ssim_mean},
          {"ssim_std", m.ssim_std}};
}

}  // namespace

double stddev(std::span<const double> v) {
  if (v.empty() || std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) return 0.0;
  const double m = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

PerceptualDistance::PerceptualDistance() {
  Rng rng(kPdistSeed);
  encoder_ = Encoder(store_, pdist_encoder(), rng);
}

double PerceptualDistance::operator()(const Image& a, const Image& b) const {
  if (!a.same_dims(b)) throw InvalidArgument("perceptual_distance: image dims differ");
  const FeaturePyramid fa = encode(a, encoder_);
  const FeaturePyramid fb = encode(b, encoder_);
  double total = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Tensor &x = fa[i], &y = fb[i];
    const int C = x.c();
    const std::size_t P = x.shape().plane();
    double acc = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
      double nx = 0.0, ny = 0.0;
      for (int c = 0; c < C; ++c) {
        nx += x.plane(0, c)[p] * x.plane(0, c)[p];
        ny += y.plane(0, c)[p] * y.plane(0, c)[p];
      }
      nx = nx > 0.0 ? 1.0 / std::sqrt(nx) : 0.0;
      ny = ny > 0.0 ? 1.0 / std::sqrt(ny) : 0.0;
      for (int c = 0; c < C; ++c) {
        const double d = x.plane(0, c)[p] * nx - y.plane(0, c)[p] * ny;
        acc += d * d;
      }
    }
    total += acc / static_cast<double>(P);
  }
  return total / 3.0;
}

double perceptual_distance(const Image& a, const Image& b) {
  static const PerceptualDistance metric;
  return metric(a, b);
}

MetricReport summarize(std::vector<ImageScore> scores) {
  MetricReport r;
  for (const ImageScore& s : scores) {
    r.psnr += s.psnr;
    r.ssim += s.ssim;
    r.pdist += s.pdist;
  }
  if (!scores.empty()) {
    const double n = static_cast<double>(scores.size());
    r.psnr /= n;
    r.ssim /= n;
    r.pdist /= n;
  }
  r.per_image = std::move(scores);
  return r;
}

MetricReport score_images(std::span<const Image> outputs, std::span<const Image> targets) {
  if (outputs.size() != targets.size()) throw InvalidArgument("score_images: count mismatch");
  std::vector<ImageScore> scores(outputs.size());
  parallel_for(outputs.size(), [&](std::size_t i) {
    scores[i] = {static_cast<int>(i), psnr(outputs[i], targets[i]), ssim(outputs[i], targets[i]),
                 perceptual_distance(outputs[i], targets[i])};
  });
  return summarize(std::move(scores));
}

MetricReport evaluate(const Model& model, std::span<const SampleGroup> data) {
  std::vector<Image> out(data.size()), hr(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    out[i] = infer(model, data[i].lr);
    hr[i] = data[i].hr;
  });
  return score_images(out, hr);
}

json to_json(const MetricReport& r) {
  json per = json::array();
  for (const ImageScore& s : r.per_image) {
    per.push_back({{"index", s.index}, {"psnr", psnr_json(s.psnr)}, {"ssim", s.ssim}, {"pdist", s.pdist}});
  }
  return {{"psnr", psnr_json(r.psnr)}, {"ssim", r.ssim}, {"pdist", r.pdist}, {"per_image", per}};
}

std::string to_csv(const MetricReport& r) {
  std::ostringstream s;
  s.precision(17);
  s << "index,psnr,ssim,pdist\n";
  for (const ImageScore& x : r.per_image) {
    s << x.index << ',' << format_psnr(x.psnr) << ',' << x.ssim << ',' << x.pdist << '\n';
  }
  return s.str();
}

SensitivityReport ref_sensitivity(const Model& model, const TrainState& state, std::span<const SampleGroup> data,
                                  std::span<const std::uint64_t> seeds) {
  if (state.global_step == 0) throw InvalidState("ref_sensitivity: checkpoint has never been trained");
  SensitivityReport rep;
  if (seeds.empty()) return rep;
  const std::size_t n = data.size();
  std::vector<Image> hr(n);
  for (std::size_t i = 0; i < n; ++i) hr[i] = data[i].hr;
  for (std::uint64_t seed : seeds) {
    SensitivityRow row;
    row.seed = seed;
    row.assignment.resize(n);
    std::iota(row.assignment.begin(), row.assignment.end(), 0);
    std::mt19937_64 rng(derive_seed({seed, 0x5EF}));
    std::shuffle(row.assignment.begin(), row.assignment.end(), rng);
    std::vector<Image> searched(n), refless(n);
    parallel_for(n, [&](std::size_t i) {
      const SampleGroup& donor = data[static_cast<std::size_t>(row.assignment[i])];
      searched[i] = infer_with_ref(model, data[i].lr, donor.ref, donor.ref_down);
      refless[i] = infer(model, data[i].lr);
    });
    row.search = score_images(searched, hr);
    row.ltg = score_images(refless, hr);
    rep.rows.push_back(std::move(row));
  }
  std::vector<const MetricReport*> s, l;
  for (const SensitivityRow& r : rep.rows) {
    s.push_back(&r.search);
    l.push_back(&r.ltg);
  }
  rep.search = summarize_mode(s);
  rep.ltg = summarize_mode(l);
  return rep;
}

json to_json(const SensitivityReport& r) {
  json rows = json::array();
  for (const SensitivityRow& row : r.rows) {
    rows.push_back({{"seed", row.seed}, {"assignment", row.assignment}, {"search", to_json(row.search)},
                    {"ltg", to_json(row.ltg)}});
  }
  return {{"rows", rows}, {"search", summary_json(r.search)}, {"ltg", summary_json(r.ltg)}};
}

}  // namespace ltgsr
