#include "ltgsr/ops.hpp"

#include <cmath>
#include <string>

#include "conv_kernels.hpp"
#include "ltgsr/errors.hpp"

namespace ltgsr::ag {
namespace {

void require_same(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw InvalidArgument(std::string(op) + ": shape " + a.shape().str() + " vs " + b.shape().str());
  }
}

template <class F>
Tensor map1(const Tensor& x, F f) {
  Tensor y(x.shape());
  const double* src = x.data();
  double* dst = y.data();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] = f(src[i]);
  return y;
}

template <class F>
Tensor map2(const Tensor& a, const Tensor& b, F f) {
  Tensor y(a.shape());
  const double* pa = a.data();
  const double* pb = b.data();
  double* dst = y.data();
  for (std::size_t i = 0; i < a.size(); ++i) dst[i] = f(pa[i], pb[i]);
  return y;
}

bool broadcastable(const Shape& from, const Shape& to) {
  auto ok = [](int f, int t) { return f == t || f == 1; };
  return ok(from.n, to.n) && ok(from.c, to.c) && ok(from.h, to.h) && ok(from.w, to.w);
}

// Iterates the larger shape, mapping each element to its slot in the smaller one.
template <class F>
void for_each_broadcast(const Shape& small, const Shape& big, F f) {
  std::size_t i = 0;
  for (int n = 0; n < big.n; ++n) {
    const int sn = small.n == 1 ? 0 : n;
    for (int c = 0; c < big.c; ++c) {
      const int sc = small.c == 1 ? 0 : c;
      for (int y = 0; y < big.h; ++y) {
        const int sy = small.h == 1 ? 0 : y;
        const std::size_t base = ((static_cast<std::size_t>(sn) * small.c + sc) * small.h + sy) * small.w;
        for (int x = 0; x < big.w; ++x, ++i) f(i, base + (small.w == 1 ? 0 : x));
      }
    }
  }
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same(a, b, "add");
  return make_result(map2(a.value(), b.value(), [](double u, double v) { return u + v; }), {a, b},
                     [](const Var& g) -> std::vector<Var> { return {g, g}; });
}

Var sub(const Var& a, const Var& b) {
  require_same(a, b, "sub");
  return make_result(map2(a.value(), b.value(), [](double u, double v) { return u - v; }), {a, b},
                     [](const Var& g) -> std::vector<Var> { return {g, scale(g, -1.0)}; });
}

Var mul(const Var& a, const Var& b) {
  require_same(a, b, "mul");
  return make_result(map2(a.value(), b.value(), [](double u, double v) { return u * v; }), {a, b},
                     [a, b](const Var& g) -> std::vector<Var> {
                       return {a.requires_grad() ? mul(g, b) : Var(), b.requires_grad() ? mul(g, a) : Var()};
                     });
}

Var div(const Var& a, const Var& b) {
  require_same(a, b, "div");
  return make_result(map2(a.value(), b.value(), [](double u, double v) { return u / v; }), {a, b},
                     [a, b](const Var& g) -> std::vector<Var> {
                       Var ga = div(g, b);
                       Var gb = b.requires_grad() ? scale(mul(ga, div(a, b)), -1.0) : Var();
                       return {ga, gb};
                     });
}

Var scale(const Var& x, double s) {
  return make_result(map1(x.value(), [s](double v) { return v * s; }), {x},
                     [s](const Var& g) -> std::vector<Var> { return {scale(g, s)}; });
}

Var add_scalar(const Var& x, double s) {
  return make_result(map1(x.value(), [s](double v) { return v + s; }), {x},
                     [](const Var& g) -> std::vector<Var> { return {g}; });
}

Var square(const Var& x) {
  return make_result(map1(x.value(), [](double v) { return v * v; }), {x},
                     [x](const Var& g) -> std::vector<Var> { return {mul(g, scale(x, 2.0))}; });
}

Var sqrt(const Var& x) {
  return make_result(map1(x.value(), [](double v) { return std::sqrt(v); }), {x},
                     [x](const Var& g) -> std::vector<Var> { return {div(g, scale(sqrt(x), 2.0))}; });
}

Var abs(const Var& x) {
  auto sign = std::make_shared<const Tensor>(
      map1(x.value(), [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }));
  return make_result(map1(x.value(), [](double v) { return std::abs(v); }), {x},
                     [sign](const Var& g) -> std::vector<Var> { return {mask_mul(g, sign)}; });
}

Var leaky_relu(const Var& x, double slope) {
  Tensor y = map1(x.value(), [slope](double v) { return v > 0.0 ? v : slope * v; });
  if (!grad_enabled() || !x.requires_grad()) return make_result(std::move(y), {x}, nullptr);
  auto mask = std::make_shared<const Tensor>(map1(x.value(), [slope](double v) { return v > 0.0 ? 1.0 : slope; }));
  return make_result(std::move(y), {x}, [mask](const Var& g) -> std::vector<Var> { return {mask_mul(g, mask)}; });
}

Var mask_mul(const Var& x, std::shared_ptr<const Tensor> mask) {
  if (mask->shape() != x.shape()) throw InvalidArgument("mask_mul: shape mismatch");
  return make_result(map2(x.value(), *mask, [](double u, double m) { return u * m; }), {x},
                     [mask](const Var& g) -> std::vector<Var> { return {mask_mul(g, mask)}; });
}

Var broadcast_to(const Var& x, Shape shape) {
  const Shape from = x.shape();
  if (!broadcastable(from, shape)) {
    throw InvalidArgument("broadcast_to: cannot expand " + from.str() + " to " + shape.str());
  }
  if (from == shape) return x;
  Tensor y(shape);
  const double* src = x.value().data();
  double* dst = y.data();
  for_each_broadcast(from, shape, [&](std::size_t i, std::size_t j) { dst[i] = src[j]; });
  return make_result(std::move(y), {x},
                     [from](const Var& g) -> std::vector<Var> { return {reduce_to(g, from)}; });
}

Var reduce_to(const Var& x, Shape shape) {
  const Shape from = x.shape();
  if (!broadcastable(shape, from)) {
    throw InvalidArgument("reduce_to: cannot reduce " + from.str() + " to " + shape.str());
  }
  if (from == shape) return x;
  Tensor y(shape);
  const double* src = x.value().data();
  double* dst = y.data();
  for_each_broadcast(shape, from, [&](std::size_t i, std::size_t j) { dst[j] += src[i]; });
  return make_result(std::move(y), {x},
                     [from](const Var& g) -> std::vector<Var> { return {broadcast_to(g, from)}; });
}

Var sum(const Var& x) { return reduce_to(x, Shape{}); }

Var mean(const Var& x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var sum_per_sample(const Var& x) { return reduce_to(x, Shape{x.shape().n, 1, 1, 1}); }

Var conv2d(const Var& x, const Var& weight, int stride, int pad) {
  Tensor y = kernels::conv2d(x.value(), weight.value(), stride, pad);
  const int h = x.shape().h, w = x.shape().w, kh = weight.shape().h, kw = weight.shape().w;
  return make_result(std::move(y), {x, weight},
                     [x, weight, stride, pad, h, w, kh, kw](const Var& g) -> std::vector<Var> {
                       Var gx = x.requires_grad() ? conv_transpose2d(g, weight, stride, pad, h, w) : Var();
                       Var gw = weight.requires_grad() ? conv2d_weight_grad(x, g, stride, pad, kh, kw) : Var();
                       return {gx, gw};
                     });
}

Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad) {
  Var y = conv2d(x, weight, stride, pad);
  return add(y, broadcast_to(bias, y.shape()));
}

Var conv_transpose2d(const Var& g, const Var& weight, int stride, int pad, int out_h, int out_w) {
  Tensor x = kernels::conv_transpose2d(g.value(), weight.value(), stride, pad, out_h, out_w);
  const int kh = weight.shape().h, kw = weight.shape().w;
  return make_result(std::move(x), {g, weight}, [g, weight, stride, pad, kh, kw](const Var& dz) -> std::vector<Var> {
    Var dg = g.requires_grad() ? conv2d(dz, weight, stride, pad) : Var();
    Var dw = weight.requires_grad() ? conv2d_weight_grad(dz, g, stride, pad, kh, kw) : Var();
    return {dg, dw};
  });
}

Var conv2d_weight_grad(const Var& x, const Var& g, int stride, int pad, int kh, int kw) {
  Tensor v = kernels::conv2d_weight_grad(x.value(), g.value(), stride, pad, kh, kw);
  const int h = x.shape().h, w = x.shape().w;
  return make_result(std::move(v), {x, g}, [x, g, stride, pad, h, w](const Var& dv) -> std::vector<Var> {
    Var dx = x.requires_grad() ? conv_transpose2d(g, dv, stride, pad, h, w) : Var();
    Var dg = g.requires_grad() ? conv2d(x, dv, stride, pad) : Var();
    return {dx, dg};
  });
}

Var separable(const Var& x, std::shared_ptr<const Separable> op) {
  const Shape in = x.shape();
  if (op->rows.cols() != in.h || op->cols.cols() != in.w) {
    throw InvalidArgument("separable: operator does not match input " + in.str());
  }
  const int oh = static_cast<int>(op->rows.rows());
  const int ow = static_cast<int>(op->cols.rows());
  Tensor y(Shape{in.n, in.c, oh, ow});
  RowMatrix tmp(oh, in.w);
  for (int n = 0; n < in.n; ++n) {
    for (int c = 0; c < in.c; ++c) {
      Eigen::Map<const RowMatrix> src(x.value().plane(n, c), in.h, in.w);
      Eigen::Map<RowMatrix> dst(y.plane(n, c), oh, ow);
      tmp.noalias() = op->rows * src;
      dst.noalias() = tmp * op->cols.transpose();
    }
  }
  return make_result(std::move(y), {x}, [op](const Var& g) -> std::vector<Var> {
    auto t = std::make_shared<Separable>(Separable{op->rows.transpose(), op->cols.transpose()});
    return {separable(g, t)};
  });
}

Var resize_bicubic(const Var& x, int out_h, int out_w) {
  if (out_h == x.shape().h && out_w == x.shape().w) return x;
  auto op = std::make_shared<Separable>(
      Separable{bicubic_matrix(x.shape().h, out_h), bicubic_matrix(x.shape().w, out_w)});
  return separable(x, op);
}

Var gather(const Var& x, std::shared_ptr<const std::vector<std::size_t>> index, Shape out) {
  if (index->size() != out.numel()) throw InvalidArgument("gather: index count does not match output");
  Tensor y(out);
  const double* src = x.value().data();
  for (std::size_t i = 0; i < index->size(); ++i) y.data()[i] = src[(*index)[i]];
  const Shape in = x.shape();
  return make_result(std::move(y), {x},
                     [index, in](const Var& g) -> std::vector<Var> { return {scatter_add(g, index, in)}; });
}

Var scatter_add(const Var& g, std::shared_ptr<const std::vector<std::size_t>> index, Shape in) {
  if (index->size() != g.value().size()) throw InvalidArgument("scatter_add: index count mismatch");
  Tensor y(in);
  const double* src = g.value().data();
  for (std::size_t i = 0; i < index->size(); ++i) y.data()[(*index)[i]] += src[i];
  const Shape out = g.shape();
  return make_result(std::move(y), {g},
                     [index, out](const Var& dy) -> std::vector<Var> { return {gather(dy, index, out)}; });
}

Var max_pool2(const Var& x) {
  const Shape in = x.shape();
  if (in.h % 2 != 0 || in.w % 2 != 0) throw InvalidArgument("max_pool2: odd spatial size " + in.str());
  const Shape out{in.n, in.c, in.h / 2, in.w / 2};
  auto index = std::make_shared<std::vector<std::size_t>>(out.numel());
  const Tensor& v = x.value();
  std::size_t i = 0;
  for (int n = 0; n < in.n; ++n) {
    for (int c = 0; c < in.c; ++c) {
      for (int y = 0; y < out.h; ++y) {
        for (int xo = 0; xo < out.w; ++xo, ++i) {
          std::size_t best = v.offset(n, c, 2 * y, 2 * xo);
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const std::size_t o = v.offset(n, c, 2 * y + dy, 2 * xo + dx);
              if (v.data()[o] > v.data()[best]) best = o;
            }
          }
          (*index)[i] = best;
        }
      }
    }
  }
  return gather(x, std::move(index), out);
}

SparsePlaneMap SparsePlaneMap::transposed() const {
  SparsePlaneMap t;
  t.in_h = out_h;
  t.in_w = out_w;
  t.out_h = in_h;
  t.out_w = in_w;
  const int rows = in_h * in_w;
  t.row_ptr.assign(static_cast<std::size_t>(rows) + 1, 0);
  for (int s : src) ++t.row_ptr[static_cast<std::size_t>(s) + 1];
  for (int r = 0; r < rows; ++r) t.row_ptr[r + 1] += t.row_ptr[r];
  t.src.resize(src.size());
  t.weight.resize(weight.size());
  std::vector<int> fill(t.row_ptr.begin(), t.row_ptr.end() - 1);
  const int out_rows = out_h * out_w;
  for (int r = 0; r < out_rows; ++r) {
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      const int slot = fill[src[k]]++;
      t.src[slot] = r;
      t.weight[slot] = weight[k];
    }
  }
  return t;
}

void SparsePlaneMap::apply(const double* in, double* out) const {
  const int rows = out_h * out_w;
  for (int r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) acc += weight[k] * in[src[k]];
    out[r] = acc;
  }
}

std::shared_ptr<const PlaneMapping> PlaneMapping::from(std::vector<SparsePlaneMap> maps) {
  auto m = std::make_shared<PlaneMapping>();
  m->backward.reserve(maps.size());
  for (const auto& f : maps) m->backward.push_back(f.transposed());
  m->forward = std::move(maps);
  return m;
}

Var plane_map(const Var& x, std::shared_ptr<const PlaneMapping> mapping, bool transpose) {
  const auto& maps = transpose ? mapping->backward : mapping->forward;
  const Shape in = x.shape();
  if (maps.size() != 1 && static_cast<int>(maps.size()) != in.n) {
    throw InvalidArgument("plane_map: need one map per sample");
  }
  const SparsePlaneMap& first = maps.front();
  if (first.in_h != in.h || first.in_w != in.w) throw InvalidArgument("plane_map: input plane mismatch");
  Tensor y(Shape{in.n, in.c, first.out_h, first.out_w});
  for (int n = 0; n < in.n; ++n) {
    const SparsePlaneMap& m = maps.size() == 1 ? first : maps[static_cast<std::size_t>(n)];
    for (int c = 0; c < in.c; ++c) m.apply(x.value().plane(n, c), y.plane(n, c));
  }
  return make_result(std::move(y), {x}, [mapping, transpose](const Var& g) -> std::vector<Var> {
    return {plane_map(g, mapping, !transpose)};
  });
}

Var concat_channels(std::span<const Var> parts) {
  if (parts.empty()) throw InvalidArgument("concat_channels: no inputs");
  Shape s = parts.front().shape();
  int total = 0;
  for (const auto& p : parts) {
    const Shape& ps = p.shape();
    if (ps.n != s.n || ps.h != s.h || ps.w != s.w) {
      throw InvalidArgument("concat_channels: " + ps.str() + " vs " + s.str());
    }
    total += ps.c;
  }
  s.c = total;
  Tensor y(s);
  const std::size_t plane = s.plane();
  for (int n = 0; n < s.n; ++n) {
    int offset = 0;
    for (const auto& p : parts) {
      const int pc = p.shape().c;
      std::copy_n(p.value().plane(n, 0), plane * pc, y.plane(n, offset));
      offset += pc;
    }
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  std::vector<int> widths;
  for (const auto& p : parts) widths.push_back(p.shape().c);
  return make_result(std::move(y), inputs, [widths](const Var& g) -> std::vector<Var> {
    std::vector<Var> out;
    int offset = 0;
    for (int wdt : widths) {
      out.push_back(slice_channels(g, offset, wdt));
      offset += wdt;
    }
    return out;
  });
}

Var slice_channels(const Var& x, int begin, int count) {
  const Shape in = x.shape();
  if (begin < 0 || count < 1 || begin + count > in.c) throw InvalidArgument("slice_channels: out of range");
  if (begin == 0 && count == in.c) return x;
  Tensor y(Shape{in.n, count, in.h, in.w});
  for (int n = 0; n < in.n; ++n) std::copy_n(x.value().plane(n, begin), in.plane() * count, y.plane(n, 0));
  const int total = in.c;
  return make_result(std::move(y), {x}, [total, begin](const Var& g) -> std::vector<Var> {
    return {embed_channels(g, total, begin)};
  });
}

Var embed_channels(const Var& x, int total, int offset) {
  const Shape in = x.shape();
  if (offset < 0 || offset + in.c > total) throw InvalidArgument("embed_channels: out of range");
  if (offset == 0 && in.c == total) return x;
  Tensor y(Shape{in.n, total, in.h, in.w});
  for (int n = 0; n < in.n; ++n) std::copy_n(x.value().plane(n, 0), in.plane() * in.c, y.plane(n, offset));
  const int count = in.c;
  return make_result(std::move(y), {x}, [offset, count](const Var& g) -> std::vector<Var> {
    return {slice_channels(g, offset, count)};
  });
}

Var detach(const Var& x) { return Var(x.value(), false); }

}  // namespace ltgsr::ag
