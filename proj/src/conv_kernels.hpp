#pragma once

#include "ltgsr/tensor.hpp"

// Raw convolution kernels (im2col + GEMM). The three functions are mutually adjoint.
namespace ltgsr::kernels {

int conv_out_size(int in, int k, int stride, int pad);

Tensor conv2d(const Tensor& x, const Tensor& w, int stride, int pad);
Tensor conv_transpose2d(const Tensor& g, const Tensor& w, int stride, int pad, int out_h, int out_w);
Tensor conv2d_weight_grad(const Tensor& x, const Tensor& g, int stride, int pad, int kh, int kw);

}  // namespace ltgsr::kernels
