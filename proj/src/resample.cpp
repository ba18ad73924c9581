#include "ltgsr/resample.hpp"

#include <algorithm>
#include <cmath>

#include "ltgsr/errors.hpp"

namespace ltgsr {

double cubic_kernel(double t, double a) {
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

RowMatrix bicubic_matrix(int in_size, int out_size) {
  if (in_size < 1 || out_size < 1) throw InvalidArgument("bicubic_matrix: sizes must be positive");
  RowMatrix m = RowMatrix::Zero(out_size, in_size);
  const double ratio = static_cast<double>(in_size) / out_size;
  for (int i = 0; i < out_size; ++i) {
    const double src = (i + 0.5) * ratio - 0.5;
    const int base = static_cast<int>(std::floor(src));
    const double frac = src - base;
    for (int k = -1; k <= 2; ++k) {
      const int tap = std::clamp(base + k, 0, in_size - 1);
      m(i, tap) += cubic_kernel(k - frac);
    }
  }
  return m;
}

}  // namespace ltgsr
