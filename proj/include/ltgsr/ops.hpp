#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "ltgsr/autograd.hpp"
#include "ltgsr/resample.hpp"

namespace ltgsr::ag {

// Elementwise, equal shapes.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);

Var scale(const Var& x, double s);
Var add_scalar(const Var& x, double s);
Var square(const Var& x);
Var sqrt(const Var& x);
Var abs(const Var& x);
Var leaky_relu(const Var& x, double slope);
inline Var relu(const Var& x) { return leaky_relu(x, 0.0); }
/// x * mask with a constant mask (the derivative of piecewise-linear maps).
Var mask_mul(const Var& x, std::shared_ptr<const Tensor> mask);

/// Expand size-1 dims of x to `shape`; reduce_to is its adjoint (sum over expanded dims).
Var broadcast_to(const Var& x, Shape shape);
Var reduce_to(const Var& x, Shape shape);
Var sum(const Var& x);
Var mean(const Var& x);
/// Per-sample sum over C,H,W -> [N,1,1,1].
Var sum_per_sample(const Var& x);

/// Cross-correlation with zero padding. Weight layout [Cout, Cin, kh, kw].
Var conv2d(const Var& x, const Var& weight, int stride, int pad);
Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad);
/// Adjoint of conv2d in its input.
Var conv_transpose2d(const Var& g, const Var& weight, int stride, int pad, int out_h, int out_w);
/// Adjoint of conv2d in its weight.
Var conv2d_weight_grad(const Var& x, const Var& g, int stride, int pad, int kh, int kw);

/// Applies rows * plane * cols^T to every plane.
struct Separable {
  RowMatrix rows;
  RowMatrix cols;
};
Var separable(const Var& x, std::shared_ptr<const Separable> op);
Var resize_bicubic(const Var& x, int out_h, int out_w);

/// out.flat[i] = x.flat[index[i]]; scatter_add is the adjoint.
Var gather(const Var& x, std::shared_ptr<const std::vector<std::size_t>> index, Shape out);
Var scatter_add(const Var& g, std::shared_ptr<const std::vector<std::size_t>> index, Shape in);
/// 2x2 max pooling, stride 2. Ties go to the first element in raster order.
Var max_pool2(const Var& x);

/// Sparse linear map between planes, one map per sample, shared across channels.
struct SparsePlaneMap {
  int in_h = 0, in_w = 0, out_h = 0, out_w = 0;
  std::vector<int> row_ptr;  // out_h*out_w + 1
  std::vector<int> src;
  std::vector<double> weight;

  SparsePlaneMap transposed() const;
  void apply(const double* in, double* out) const;
};
struct PlaneMapping {
  std::vector<SparsePlaneMap> forward;
  std::vector<SparsePlaneMap> backward;
  static std::shared_ptr<const PlaneMapping> from(std::vector<SparsePlaneMap> maps);
};
Var plane_map(const Var& x, std::shared_ptr<const PlaneMapping> mapping, bool transpose = false);

Var concat_channels(std::span<const Var> parts);
Var slice_channels(const Var& x, int begin, int count);
/// Places x at channel `offset` of a zero tensor with `total` channels.
Var embed_channels(const Var& x, int total, int offset);

Var detach(const Var& x);
inline Var constant(Tensor t) { return Var(std::move(t), false); }

}  // namespace ltgsr::ag
