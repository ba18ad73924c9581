#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ltgsr/image.hpp"

namespace ltgsr {

/// PSNR in dB with peak 1.0. Identical images give +infinity.
double psnr(const Image& a, const Image& b);

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03,
/// dynamic range 1, averaged over window positions fully inside the image.
double ssim(const Image& a, const Image& b);

/// Formats a PSNR for reports ("inf" for identical images).
std::string format_psnr(double db);

}  // namespace ltgsr
