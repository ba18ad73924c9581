#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ltgsr/image.hpp"

namespace ltgsr {

/// Synthetic angiogram: branching bright vessels and a capillary mesh on a dark noisy
/// background, with a vessel-free dark disk near the centre. Requires dims >= 32 and
/// divisible by 4.
Image generate_phantom(std::uint64_t seed, int height, int width);

struct DegradeOptions {
  /// Std of the additive noise at zero intensity; grows linearly with intensity.
  double noise_amplitude = 0.06;
};

/// Undersampling proxy: keep every second pixel, add seeded speckle-like noise, then
/// bicubic x2 back to the input grid. Output has the input dims, clamped to [0,1].
Image degrade(const Image& hr, std::uint64_t noise_seed, const DegradeOptions& opts = {});

/// Bicubic resize by num/den, restricted to x2 and x1/2.
Image bicubic_resize(const Image& img, int num, int den);

/// Integer translation maximising the circular cross-correlation: moving(y, x) is
/// approximately fixed(y - dy, x - dx).
Shift phase_correlate(const Image& fixed, const Image& moving);

/// Overlap rectangle of `hr` and `lr` under `shift`, trimmed (top-left anchored) to dims
/// divisible by 4. Throws RegistrationFailed below 32x32.
std::pair<Image, Image> crop_overlap(const Image& hr, const Image& lr, Shift shift);

/// phase_correlate followed by crop_overlap.
std::pair<Image, Image> register_crop(const Image& hr, const Image& lr_full);

struct SampleGroup {
  Image lr;
  Image hr;
  Image ref;
  Image ref_down;
};

struct GroupSeeds {
  std::uint64_t hr;
  std::uint64_t ref;
  std::uint64_t lr_noise;
  std::uint64_t ref_noise;
};

GroupSeeds group_seeds(std::uint64_t seed, int index);

/// n aligned groups: hr and ref are independent phantoms, lr/ref_down their degradations.
std::vector<SampleGroup> make_dataset(int n, std::uint64_t seed, int height, int width);

}  // namespace ltgsr
