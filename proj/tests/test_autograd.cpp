#include <vector>

#include "doctest.h"
#include "ltgsr/errors.hpp"
#include "ltgsr/ops.hpp"
#include "test_support.hpp"

using namespace ltgsr;
using namespace ltgsr::ag;
using ltgsr::testing::central_difference;
using ltgsr::testing::random_tensor;
using ltgsr::testing::relative_error;

namespace {

// Checks d sum(f(x)) / dx against central differences for every entry of x.
void check_gradient(const std::function<Var(const Var&)>& f, Shape shape, std::uint64_t seed, double tol = 1e-5) {
  Var x(random_tensor(shape, seed), true);
  Var y = f(x);
  Tensor g = grad(y, std::vector<Var>{x})[0].value();
  for (std::size_t i = 0; i < x.value().size(); ++i) {
    const double fd = central_difference(x.mutable_value(), i, 1e-5, [&] {
      NoGradGuard ng;
      return sum(f(x)).value().item();
    });
    CHECK(relative_error(g.data()[i], fd, 1e-6) < tol);
  }
}

}  // namespace

TEST_CASE("elementwise op gradients") {
  Var w(random_tensor({2, 3, 4, 5}, 99), false);
  check_gradient([&](const Var& x) { return mul(x, w); }, {2, 3, 4, 5}, 1);
  check_gradient([&](const Var& x) { return div(w, add_scalar(square(x), 1.0)); }, {2, 3, 4, 5}, 2);
  check_gradient([&](const Var& x) { return sqrt(add_scalar(square(x), 0.5)); }, {1, 2, 3, 3}, 3);
  check_gradient([&](const Var& x) { return leaky_relu(x, 0.2); }, {1, 2, 3, 3}, 4);
  check_gradient([&](const Var& x) { return abs(sub(x, w)); }, {2, 3, 4, 5}, 5);
}

TEST_CASE("broadcast, reduction and channel plumbing gradients") {
  check_gradient([](const Var& x) { return square(broadcast_to(x, {2, 3, 4, 4})); }, {1, 3, 1, 1}, 6);
  check_gradient([](const Var& x) { return square(sum_per_sample(x)); }, {3, 2, 2, 2}, 7);
  check_gradient([](const Var& x) {
    std::vector<Var> parts{x, square(x)};
    return square(slice_channels(concat_channels(parts), 1, 3));
  }, {2, 2, 3, 3}, 8);
  check_gradient([](const Var& x) { return square(embed_channels(x, 5, 2)); }, {1, 2, 3, 3}, 9);
}

TEST_CASE("conv, pooling and resampling gradients") {
  Var w(random_tensor({4, 3, 3, 3}, 10), false);
  check_gradient([&](const Var& x) { return square(conv2d(x, w, 1, 1)); }, {2, 3, 6, 6}, 11);
  check_gradient([&](const Var& x) { return square(conv2d(x, w, 2, 1)); }, {1, 3, 7, 8}, 12);
  check_gradient([](const Var& x) { return square(max_pool2(x)); }, {2, 2, 4, 6}, 13);
  check_gradient([](const Var& x) { return square(resize_bicubic(x, 8, 12)); }, {1, 2, 4, 6}, 14);
  check_gradient([](const Var& x) { return square(resize_bicubic(x, 3, 2)); }, {1, 2, 6, 4}, 15);

  Var xin(random_tensor({2, 3, 6, 6}, 16), false);
  check_gradient([&](const Var& k) { return square(conv2d(xin, k, 2, 1)); }, {4, 3, 3, 3}, 17);
}

TEST_CASE("conv triad is mutually adjoint") {
  const Tensor x = random_tensor({2, 3, 7, 6}, 20);
  const Tensor w = random_tensor({4, 3, 3, 3}, 21);
  Var y = conv2d(Var(x), Var(w), 2, 1);
  const Tensor g = random_tensor(y.shape(), 22);
  auto dot = [](const Tensor& a, const Tensor& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
    return s;
  };
  const Tensor xt = conv_transpose2d(Var(g), Var(w), 2, 1, 7, 6).value();
  const Tensor wg = conv2d_weight_grad(Var(x), Var(g), 2, 1, 3, 3).value();
  CHECK(dot(y.value(), g) == doctest::Approx(dot(x, xt)).epsilon(1e-12));
  CHECK(dot(y.value(), g) == doctest::Approx(dot(w, wg)).epsilon(1e-12));
}

TEST_CASE("second-order gradients through a conv stack match finite differences") {
  // phi(w) = sum over entries of (d sum(D(x)) / dx)^2 with D = conv -> leaky -> conv.
  Var w1(random_tensor({3, 1, 3, 3}, 30), true);
  Var w2(random_tensor({2, 3, 3, 3}, 31), true);
  const Tensor xv = random_tensor({2, 1, 6, 6}, 32);
  auto phi = [&](bool create) {
    Var x(xv, true);
    Var d = conv2d(leaky_relu(conv2d(x, w1, 1, 1), 0.2), w2, 2, 1);
    Var gx = grad(d, std::vector<Var>{x}, create)[0];
    return sum(square(gx));
  };
  Var p = phi(true);
  auto g = grad(p, std::vector<Var>{w1, w2});
  for (int which = 0; which < 2; ++which) {
    Var& w = which == 0 ? w1 : w2;
    for (std::size_t i = 0; i < w.value().size(); i += 3) {
      const double fd = central_difference(w.mutable_value(), i, 1e-5, [&] { return phi(false).value().item(); });
      CHECK(relative_error(g[which].value().data()[i], fd) < 1e-6);
    }
  }
}

TEST_CASE("plane map applies a sparse operator and its transpose") {
  SparsePlaneMap m;
  m.in_h = 2;
  m.in_w = 2;
  m.out_h = 1;
  m.out_w = 3;
  m.row_ptr = {0, 2, 3, 3};
  m.src = {0, 3, 1};
  m.weight = {0.5, 0.5, 2.0};
  auto mapping = PlaneMapping::from({m});
  check_gradient([&](const Var& x) { return square(plane_map(x, mapping)); }, {2, 2, 2, 2}, 40);
  Var x(Tensor({1, 1, 2, 2}, {1.0, 2.0, 3.0, 4.0}));
  Var y = plane_map(x, mapping);
  CHECK(y.value().at(0, 0, 0, 0) == doctest::Approx(2.5));
  CHECK(y.value().at(0, 0, 0, 1) == doctest::Approx(4.0));
  CHECK(y.value().at(0, 0, 0, 2) == 0.0);
}

TEST_CASE("shape errors are reported") {
  Var a(Tensor({1, 1, 2, 2})), b(Tensor({1, 1, 2, 3}));
  CHECK_THROWS_AS(add(a, b), InvalidArgument);
  CHECK_THROWS_AS(broadcast_to(b, {1, 1, 2, 2}), InvalidArgument);
  CHECK_THROWS_AS(max_pool2(b), InvalidArgument);
}

TEST_CASE("no graph is recorded without grad mode") {
  Var x(Tensor({1, 1, 2, 2}, 1.0), true);
  NoGradGuard guard;
  Var y = square(x);
  CHECK_FALSE(y.requires_grad());
}
