#include "doctest.h"

#include <random>

#include "ltgsr/critic.hpp"
#include "ltgsr/decoder.hpp"
#include "ltgsr/errors.hpp"
#include "ltgsr/ltg.hpp"
#include "ltgsr/ops.hpp"
#include "ltgsr/parallel.hpp"
#include "test_support.hpp"

using namespace ltgsr;
using ltgsr::testing::central_difference;
using ltgsr::testing::random_tensor;
using ltgsr::testing::relative_error;

namespace {

VarPyramid random_pyramid(int n, int h, int w, std::array<int, 3> c, std::uint64_t seed, double lo = -1.0) {
  VarPyramid p;
  for (int i = 0; i < 3; ++i) p[i] = ag::constant(random_tensor(Shape{n, c[i], h >> i, w >> i}, seed + i, lo, 1.0));
  return p;
}

VarPyramid zero_pyramid(int h, int w, std::array<int, 3> c) {
  VarPyramid p;
  for (int i = 0; i < 3; ++i) p[i] = ag::constant(Tensor(Shape{1, c[i], h >> i, w >> i}));
  return p;
}

bool same(const VarPyramid& a, const VarPyramid& b) {
  for (int i = 0; i < 3; ++i) {
    if (max_abs_diff(a[i].value(), b[i].value()) != 0.0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("msfp keeps the pyramid shape") {
  ParamStore store;
  Rng rng(1);
  MsfpBlock block(store, "b", {4, 6, 8}, {0, 1, 2}, rng);
  const VarPyramid in = random_pyramid(2, 16, 12, {4, 6, 8}, 3);
  const auto out = block.forward(in);
  REQUIRE(out.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(out[i].shape() == in[i].shape());
  CHECK(store.count("b.") == MsfpBlock::count_params(std::vector<int>{4, 6, 8}, std::vector<int>{0, 1, 2}));

  const auto zero = block.forward(zero_pyramid(16, 12, {4, 6, 8}));
  for (const auto& z : zero) CHECK(z.value().max_abs() == 0.0);
}

TEST_CASE("msfp is finite for random params and inputs") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    ParamStore store;
    Rng rng(seed);
    MsfpBlock block(store, "b", {3, 4, 5}, {0, 1, 2}, rng);
    for (const auto& o : block.forward(random_pyramid(1, 8, 8, {3, 4, 5}, seed * 7))) REQUIRE(o.value().all_finite());
  }
}

TEST_CASE("default ltg emits textures shaped like the searched ones") {
  ParamStore store;
  Rng rng(2);
  Ltg ltg(store, LTGConfig{}, rng);
  ag::NoGradGuard guard;
  const VarPyramid f = random_pyramid(1, 96, 96, {64, 128, 256}, 4, 0.0);
  const VarPyramid t = ltg.forward(f);
  CHECK(t[0].shape() == Shape{1, 64, 96, 96});
  CHECK(t[1].shape() == Shape{1, 128, 48, 48});
  CHECK(t[2].shape() == Shape{1, 256, 24, 24});
  CHECK(store.count("ltg.", true) == count_params(LTGConfig{}));
}

TEST_CASE("ltg block count changes the output; zero in gives zero out") {
  const std::array<int, 3> ch{4, 6, 8};
  ParamStore s1, s3;
  Rng r1(9), r3(9);
  Ltg one(s1, LTGConfig{1, ch}, r1);
  Ltg three(s3, LTGConfig{3, ch}, r3);
  const VarPyramid f = random_pyramid(1, 16, 16, ch, 10);
  CHECK_FALSE(same(one.forward(f), three.forward(f)));
  for (const auto& t : three.forward(zero_pyramid(16, 16, ch))) CHECK(t.value().max_abs() == 0.0);
  CHECK_THROWS_AS(Ltg(s1, LTGConfig{0, ch}, r1), InvalidArgument);
}

TEST_CASE("ltg parameter count is affine in the block count") {
  const std::array<int, 3> ch{5, 7, 9};
  std::vector<std::size_t> counts;
  for (int m = 1; m <= 5; ++m) {
    ParamStore store;
    Rng rng(1);
    Ltg ltg(store, LTGConfig{m, ch}, rng);
    REQUIRE(store.count("ltg.", true) == count_params(LTGConfig{m, ch}));
    counts.push_back(count_params(LTGConfig{m, ch}));
  }
  for (int m = 0; m + 2 < 5; ++m) {
    CHECK(counts[m + 2] - counts[m + 1] == counts[m + 1] - counts[m]);
    CHECK(counts[m + 1] > counts[m]);
  }
}

TEST_CASE("ltg gradients match central differences") {
  const std::array<int, 3> ch{2, 3, 4};
  ParamStore store;
  Rng rng(21);
  Ltg ltg(store, LTGConfig{2, ch}, rng);
  const VarPyramid f = random_pyramid(1, 8, 8, ch, 22);
  const std::array<Tensor, 3> probe{random_tensor(Shape{1, 2, 8, 8}, 23), random_tensor(Shape{1, 3, 4, 4}, 24),
                                    random_tensor(Shape{1, 4, 2, 2}, 25)};
  auto readout = [&]() {
    const VarPyramid t = ltg.forward(f);
    ag::Var acc = ag::constant(Tensor::scalar(0.0));
    for (int i = 0; i < 3; ++i) acc = ag::add(acc, ag::sum(ag::mul(ag::square(t[i]), ag::constant(probe[i]))));
    return acc;
  };
  const auto params = store.vars("ltg.");
  const auto grads = ag::grad(readout(), params);
  std::mt19937_64 pick(26);
  for (int k = 0; k < 20; ++k) {
    const std::size_t p = std::uniform_int_distribution<std::size_t>(0, params.size() - 1)(pick);
    ag::Var v = params[p];
    const std::size_t i = std::uniform_int_distribution<std::size_t>(0, v.value().size() - 1)(pick);
    const double fd = central_difference(v.mutable_value(), i, 1e-5, [&] { return readout().value().item(); });
    CHECK(relative_error(grads[p].value().data()[i], fd, 1e-6) < 1e-3);
  }
}

TEST_CASE("decoder maps features to an image on the LR grid") {
  const std::array<int, 3> ch{4, 6, 8};
  ParamStore store;
  Rng rng(31);
  Decoder dec(store, DecoderConfig{2, ch, true}, rng);
  const VarPyramid f = random_pyramid(2, 16, 24, ch, 32, 0.0);
  const VarPyramid t = random_pyramid(2, 16, 24, ch, 33, 0.0);
  const VarPyramid r = random_pyramid(2, 16, 24, {1, 1, 1}, 34, 0.0);
  const ag::Var lr = ag::constant(random_tensor(Shape{2, 1, 16, 24}, 35, 0.0, 1.0));
  CHECK(dec.forward(f, t, r, lr).shape() == Shape{2, 1, 16, 24});
  CHECK_THROWS_AS(dec.block(2, f[2], t[1], r[2], {}), InvalidArgument);
  CHECK_THROWS_AS(dec.block(1, f[1], t[1], r[1], {}), InvalidArgument);
  for (int i = 0; i < 3; ++i) {
    std::vector<ag::Var> smaller;
    const VarPyramid d = dec.features(f, t, r);
    smaller.assign(d.begin() + i + 1, d.end());
    CHECK(dec.block(i, f[i], t[i], r[i], smaller).shape() == f[i].shape());
  }
}

TEST_CASE("zero relevance gates textures out") {
  const std::array<int, 3> ch{3, 4, 5};
  ParamStore store;
  Rng rng(41);
  Decoder dec(store, DecoderConfig{2, ch, true}, rng);
  const VarPyramid f = random_pyramid(1, 16, 16, ch, 42, 0.0);
  const VarPyramid zero_r = zero_pyramid(16, 16, {1, 1, 1});
  const ag::Var lr = ag::constant(random_tensor(Shape{1, 1, 16, 16}, 43, 0.0, 1.0));
  const VarPyramid t = random_pyramid(1, 16, 16, ch, 44);
  const Tensor base = dec.forward(f, t, zero_r, lr).value();
  for (int trial = 0; trial < 10; ++trial) {
    VarPyramid tp;
    for (int i = 0; i < 3; ++i) {
      Tensor v = t[i].value();
      const Tensor d = random_tensor(v.shape(), 100 + trial * 3 + i, -0.1, 0.1);
      for (std::size_t k = 0; k < v.size(); ++k) v.data()[k] += d.data()[k];
      tp[i] = ag::constant(v);
    }
    CHECK(max_abs_diff(dec.forward(f, tp, zero_r, lr).value(), base) == 0.0);
  }
  VarPyramid ones;
  for (int i = 0; i < 3; ++i) ones[i] = ag::constant(Tensor(Shape{1, 1, 16 >> i, 16 >> i}, 1.0));
  CHECK(max_abs_diff(dec.forward(f, t, ones, lr).value(), base) > 0.0);
}

TEST_CASE("decoder output is independent of the worker count") {
  const std::array<int, 3> ch{3, 4, 5};
  ParamStore store;
  Rng rng(51);
  Decoder dec(store, DecoderConfig{2, ch, true}, rng);
  const VarPyramid f = random_pyramid(4, 16, 16, ch, 52, 0.0);
  const VarPyramid t = random_pyramid(4, 16, 16, ch, 53);
  const VarPyramid r = random_pyramid(4, 16, 16, {1, 1, 1}, 54, 0.0);
  const ag::Var lr = ag::constant(random_tensor(Shape{4, 1, 16, 16}, 55, 0.0, 1.0));
  const int previous = num_threads();
  set_num_threads(1);
  const Tensor a = dec.forward(f, t, r, lr).value();
  const Tensor a2 = dec.forward(f, t, r, lr).value();
  set_num_threads(4);
  const Tensor b = dec.forward(f, t, r, lr).value();
  set_num_threads(previous);
  CHECK(max_abs_diff(a, a2) == 0.0);
  CHECK(max_abs_diff(a, b) == 0.0);
}

TEST_CASE("critic scores one scalar per sample") {
  ParamStore store;
  Rng rng(61);
  Critic critic(store, CriticConfig{{4, 8, 8, 8, 8}, 0.2, 32}, rng);
  const ag::Var x = ag::constant(random_tensor(Shape{3, 1, 32, 32}, 62, 0.0, 1.0));
  CHECK(critic.forward(x).shape() == Shape{3, 1, 1, 1});
  CHECK_THROWS_AS(critic.forward(ag::constant(Tensor(Shape{1, 1, 16, 16}))), InvalidArgument);
  ParamStore full;
  Critic def(full, CriticConfig{}, rng);
  // Five stride-2 layers take 64 to 2, so the dense head is 2x2.
  CHECK(full.get("critic.dense.weight").shape() == Shape{1, 512, 2, 2});
}
