#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ltgsr/checkpoint.hpp"
#include "ltgsr/model.hpp"

namespace ltgsr {

/// Perceptual pseudo-metric on a fixed, seeded encoder (not a learned metric, and not
/// comparable to published LPIPS values): features are unit-normalised across
/// channels at every pixel, squared channel distances are averaged over pixels and
/// then over the three scales.
class PerceptualDistance {
 public:
  PerceptualDistance();
  /// Both images need equal dims divisible by 4.
  double operator()(const Image& a, const Image& b) const;

 private:
  ParamStore store_;
  Encoder encoder_;
};

double perceptual_distance(const Image& a, const Image& b);

struct ImageScore {
  int index = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  double pdist = 0.0;
};

struct MetricReport {
  double psnr = 0.0;
  double ssim = 0.0;
  double pdist = 0.0;
  std::vector<ImageScore> per_image;
};

MetricReport summarize(std::vector<ImageScore> scores);
/// Scores `outputs[i]` against `targets[i]`.
MetricReport score_images(std::span<const Image> outputs, std::span<const Image> targets);
/// Refless inference on every group's LR image against its HR image.
MetricReport evaluate(const Model& model, std::span<const SampleGroup> data);

nlohmann::json to_json(const MetricReport& r);
std::string to_csv(const MetricReport& r);

struct ModeSummary {
  double psnr_mean = 0.0, psnr_std = 0.0;
  double ssim_mean = 0.0, ssim_std = 0.0;
};

struct SensitivityRow {
  std::uint64_t seed = 0;
  /// assignment[i] = group whose Ref pair served group i.
  std::vector<int> assignment;
  MetricReport search;
  MetricReport ltg;
};

struct SensitivityReport {
  std::vector<SensitivityRow> rows;
  ModeSummary search;
  ModeSummary ltg;
};

/// For each seed, shuffles the Ref pairs across groups and scores search-path
/// inference, alongside refless inference. Throws InvalidState for an untrained
/// checkpoint (global_step == 0).
SensitivityReport ref_sensitivity(const Model& model, const TrainState& state, std::span<const SampleGroup> data,
                                  std::span<const std::uint64_t> seeds);

nlohmann::json to_json(const SensitivityReport& r);

/// Population std; exactly 0 when all values coincide.
double stddev(std::span<const double> v);

}  // namespace ltgsr
