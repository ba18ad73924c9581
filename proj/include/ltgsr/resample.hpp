#pragma once

#include <Eigen/Dense>

namespace ltgsr {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Keys cubic convolution coefficient.
inline constexpr double kBicubicA = -0.5;

double cubic_kernel(double t, double a = kBicubicA);

/// 1-D bicubic interpolation operator of shape out x in (half-pixel centres,
/// edge-clamped taps). Applying it along rows and columns resizes an image.
RowMatrix bicubic_matrix(int in_size, int out_size);

}  // namespace ltgsr
