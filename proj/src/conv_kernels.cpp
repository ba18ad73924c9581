#include "conv_kernels.hpp"

#include <algorithm>
#include <vector>

#include "ltgsr/errors.hpp"
#include "ltgsr/parallel.hpp"
#include "ltgsr/resample.hpp"

namespace ltgsr::kernels {
namespace {

using CMap = Eigen::Map<const RowMatrix>;
using Map = Eigen::Map<RowMatrix>;

struct Geom {
  int cin, h, w, kh, kw, stride, pad, out_h, out_w;
  int rows() const { return cin * kh * kw; }
  int cols() const { return out_h * out_w; }
  bool pointwise() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

// Range of output coordinates whose tap (offset k) lands inside [0, size).
void valid_range(int size, int k, const Geom& g, int out, int& lo, int& hi) {
  // o*stride - pad + k in [0, size-1]
  lo = g.pad - k <= 0 ? 0 : (g.pad - k + g.stride - 1) / g.stride;
  const int num = size - 1 + g.pad - k;
  hi = num < 0 ? -1 : std::min(out - 1, num / g.stride);
}

void im2col(const double* x, const Geom& g, double* cols) {
  const int p = g.cols();
  for (int c = 0; c < g.cin; ++c) {
    const double* xc = x + static_cast<std::size_t>(c) * g.h * g.w;
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        double* dst = cols + static_cast<std::size_t>((c * g.kh + ky) * g.kw + kx) * p;
        int x_lo, x_hi;
        valid_range(g.w, kx, g, g.out_w, x_lo, x_hi);
        for (int oy = 0; oy < g.out_h; ++oy) {
          double* row = dst + static_cast<std::size_t>(oy) * g.out_w;
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) {
            std::fill(row, row + g.out_w, 0.0);
            continue;
          }
          if (x_hi < x_lo) {
            std::fill(row, row + g.out_w, 0.0);
            continue;
          }
          const double* src = xc + static_cast<std::size_t>(iy) * g.w;
          std::fill(row, row + x_lo, 0.0);
          for (int ox = x_lo; ox <= x_hi; ++ox) row[ox] = src[ox * g.stride - g.pad + kx];
          std::fill(row + x_hi + 1, row + g.out_w, 0.0);
        }
      }
    }
  }
}

void col2im(const double* cols, const Geom& g, double* x) {
  const int p = g.cols();
  for (int c = 0; c < g.cin; ++c) {
    double* xc = x + static_cast<std::size_t>(c) * g.h * g.w;
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        const double* src = cols + static_cast<std::size_t>((c * g.kh + ky) * g.kw + kx) * p;
        int x_lo, x_hi;
        valid_range(g.w, kx, g, g.out_w, x_lo, x_hi);
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          const double* row = src + static_cast<std::size_t>(oy) * g.out_w;
          double* dst = xc + static_cast<std::size_t>(iy) * g.w;
          for (int ox = x_lo; ox <= x_hi; ++ox) dst[ox * g.stride - g.pad + kx] += row[ox];
        }
      }
    }
  }
}

Geom make_geom(int cin, int h, int w, int kh, int kw, int stride, int pad) {
  if (stride < 1 || pad < 0) throw InvalidArgument("conv2d: bad stride/pad");
  Geom g{cin, h, w, kh, kw, stride, pad, conv_out_size(h, kh, stride, pad),
         conv_out_size(w, kw, stride, pad)};
  if (g.out_h < 1 || g.out_w < 1) throw InvalidArgument("conv2d: kernel larger than padded input");
  return g;
}

}  // namespace

int conv_out_size(int in, int k, int stride, int pad) { return (in + 2 * pad - k) / stride + 1; }

Tensor conv2d(const Tensor& x, const Tensor& w, int stride, int pad) {
  if (x.c() != w.c()) {
    throw InvalidArgument("conv2d: input has " + std::to_string(x.c()) + " channels, weight expects " +
                          std::to_string(w.c()));
  }
  const Geom g = make_geom(x.c(), x.h(), x.w(), w.h(), w.w(), stride, pad);
  const int cout = w.n();
  Tensor y(Shape{x.n(), cout, g.out_h, g.out_w});
  const CMap wm(w.data(), cout, g.rows());
  parallel_for(static_cast<std::size_t>(x.n()), [&](std::size_t n) {
    Map ym(y.plane(static_cast<int>(n), 0), cout, g.cols());
    if (g.pointwise()) {
      ym.noalias() = wm * CMap(x.plane(static_cast<int>(n), 0), g.rows(), g.cols());
      return;
    }
    std::vector<double> cols(static_cast<std::size_t>(g.rows()) * g.cols());
    im2col(x.plane(static_cast<int>(n), 0), g, cols.data());
    ym.noalias() = wm * CMap(cols.data(), g.rows(), g.cols());
  });
  return y;
}

Tensor conv_transpose2d(const Tensor& gout, const Tensor& w, int stride, int pad, int out_h, int out_w) {
  const Geom g = make_geom(w.c(), out_h, out_w, w.h(), w.w(), stride, pad);
  if (gout.c() != w.n() || gout.h() != g.out_h || gout.w() != g.out_w) {
    throw InvalidArgument("conv_transpose2d: gradient shape " + gout.shape().str() +
                          " inconsistent with weight " + w.shape().str());
  }
  const int cout = w.n();
  Tensor x(Shape{gout.n(), w.c(), out_h, out_w});
  const CMap wm(w.data(), cout, g.rows());
  parallel_for(static_cast<std::size_t>(gout.n()), [&](std::size_t n) {
    const CMap gm(gout.plane(static_cast<int>(n), 0), cout, g.cols());
    if (g.pointwise()) {
      Map(x.plane(static_cast<int>(n), 0), g.rows(), g.cols()).noalias() = wm.transpose() * gm;
      return;
    }
    std::vector<double> cols(static_cast<std::size_t>(g.rows()) * g.cols());
    Map(cols.data(), g.rows(), g.cols()).noalias() = wm.transpose() * gm;
    col2im(cols.data(), g, x.plane(static_cast<int>(n), 0));
  });
  return x;
}

Tensor conv2d_weight_grad(const Tensor& x, const Tensor& gout, int stride, int pad, int kh, int kw) {
  const Geom g = make_geom(x.c(), x.h(), x.w(), kh, kw, stride, pad);
  if (gout.n() != x.n() || gout.h() != g.out_h || gout.w() != g.out_w) {
    throw InvalidArgument("conv2d_weight_grad: gradient shape " + gout.shape().str() +
                          " inconsistent with input " + x.shape().str());
  }
  const int cout = gout.c();
  const std::size_t wsize = static_cast<std::size_t>(cout) * g.rows();
  std::vector<std::vector<double>> partial(static_cast<std::size_t>(x.n()));
  parallel_for(static_cast<std::size_t>(x.n()), [&](std::size_t n) {
    partial[n].assign(wsize, 0.0);
    Map dw(partial[n].data(), cout, g.rows());
    const CMap gm(gout.plane(static_cast<int>(n), 0), cout, g.cols());
    if (g.pointwise()) {
      dw.noalias() = gm * CMap(x.plane(static_cast<int>(n), 0), g.rows(), g.cols()).transpose();
      return;
    }
    std::vector<double> cols(static_cast<std::size_t>(g.rows()) * g.cols());
    im2col(x.plane(static_cast<int>(n), 0), g, cols.data());
    dw.noalias() = gm * CMap(cols.data(), g.rows(), g.cols()).transpose();
  });
  Tensor dw(Shape{cout, x.c(), kh, kw});
  for (const auto& part : partial) {
    for (std::size_t i = 0; i < wsize; ++i) dw.data()[i] += part[i];
  }
  return dw;
}

}  // namespace ltgsr::kernels
