#include "ltgsr/losses.hpp"

#include <random>

#include "ltgsr/errors.hpp"
#include "ltgsr/ops.hpp"

namespace ltgsr {

namespace {

void require_same(const Shape& a, const Shape& b, const char* what) {
  if (!(a == b)) throw InvalidArgument(std::string(what) + ": shape " + a.str() + " vs " + b.str());
}

// Keeps the norm differentiable at a zero input-gradient.
constexpr double kNormFloor = 1e-12;

}  // namespace

ag::Var rec_loss(const ag::Var& hr, const ag::Var& sr) {
  require_same(hr.shape(), sr.shape(), "rec_loss");
  return ag::mean(ag::abs(ag::sub(hr, sr)));
}

double rec_loss(const Image& hr, const Image& sr) {
  if (!hr.same_dims(sr)) throw InvalidArgument("rec_loss: image dims differ");
  ag::NoGradGuard guard;
  return rec_loss(ag::constant(to_tensor(hr)), ag::constant(to_tensor(sr))).value().item();
}

ag::Var feature_distance(const ag::Var& a, const ag::Var& b) {
  require_same(a.shape(), b.shape(), "feature_distance");
  return ag::mean(ag::square(ag::sub(a, b)));
}

PerceptualTerms perceptual_loss(const Encoder& encoder, const ag::Var& hr, const ag::Var& sr,
                                const std::array<Tensor, 3>* textures, int k) {
  if (k < 0 || k > 3) throw InvalidArgument("perceptual_loss: k must be in [0, 3]");
  if (k > 0 && textures == nullptr) throw InvalidArgument("perceptual_loss: textures required for k > 0");
  require_same(hr.shape(), sr.shape(), "perceptual_loss");
  PerceptualTerms out;
  const VarPyramid g = encoder.forward(sr);
  const ag::Var deep_hr = encoder.deep(hr);
  out.deep = feature_distance(deep_hr, encoder.deep_from(g[2]));
  out.texture = ag::constant(Tensor::scalar(0.0));
  for (int i = 2; i > 2 - k; --i) {
    out.texture = ag::add(out.texture, feature_distance(g[i], ag::constant((*textures)[i])));
  }
  if (k > 0) out.texture = ag::scale(out.texture, 1.0 / k);
  out.total = ag::add(out.deep, out.texture);
  return out;
}

ag::Var critic_loss(const ag::Var& d_real, const ag::Var& d_fake, const ag::Var& gp) {
  if (d_real.shape().numel() != d_fake.shape().numel()) throw InvalidArgument("critic_loss: batch sizes differ");
  return ag::add(ag::sub(ag::mean(d_fake), ag::mean(d_real)), gp);
}

ag::Var gradient_penalty(const CriticFn& critic, const ag::Var& hr, const ag::Var& sr, double gp_lambda,
                         std::uint64_t seed) {
  require_same(hr.shape(), sr.shape(), "gradient_penalty");
  const Shape s = hr.shape();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor mix(s);
  const Tensor& a = hr.value();
  const Tensor& b = sr.value();
  const std::size_t plane = static_cast<std::size_t>(s.c) * s.h * s.w;
  for (int n = 0; n < s.n; ++n) {
    const double eps = u(rng);
    for (std::size_t i = n * plane; i < (n + 1) * plane; ++i) mix.data()[i] = eps * a.data()[i] + (1.0 - eps) * b.data()[i];
  }
  const ag::Var x_hat(std::move(mix), true);
  ag::GradModeGuard on(true);
  const ag::Var d = critic(x_hat);
  const ag::Var g = ag::grad(ag::sum(d), std::span<const ag::Var>(&x_hat, 1), true)[0];
  const ag::Var norm = ag::sqrt(ag::add_scalar(ag::sum_per_sample(ag::square(g)), kNormFloor));
  return ag::scale(ag::mean(ag::square(ag::add_scalar(norm, -1.0))), gp_lambda);
}

ag::Var generator_adv_loss(const ag::Var& d_fake) {
  if (!d_fake.defined() || d_fake.shape().numel() == 0) throw InvalidArgument("generator_adv_loss: empty batch");
  return ag::scale(ag::mean(d_fake), -1.0);
}

ag::Var texture_gen_loss(const std::array<Tensor, 3>& t, const VarPyramid& t_hat, const std::array<Tensor, 3>& r) {
  ag::Var acc = ag::constant(Tensor::scalar(0.0));
  for (int i = 0; i < 3; ++i) {
    require_same(t[i].shape(), t_hat[i].shape(), "texture_gen_loss");
    const Shape& rs = r[i].shape();
    if (rs.n != t[i].n() || rs.c != 1 || rs.h != t[i].h() || rs.w != t[i].w()) {
      throw InvalidArgument("texture_gen_loss: relevance shape " + rs.str() + " vs " + t[i].shape().str());
    }
    const ag::Var diff2 = ag::square(ag::sub(ag::constant(t[i]), t_hat[i]));
    acc = ag::add(acc, ag::mean(ag::mul(diff2, ag::broadcast_to(ag::constant(r[i]), t[i].shape()))));
  }
  return ag::scale(acc, 1.0 / 3.0);
}

double total_loss(const LossParts& p, const LossWeights& w) {
  return p.rec + w.lambda_per * p.per + w.lambda_tg * p.tg + w.lambda_adv * p.adv;
}

ag::Var total_loss(const ag::Var& rec, const ag::Var& per, const ag::Var& tg, const ag::Var& adv,
                   const LossWeights& w) {
  ag::Var out = rec;
  out = ag::add(out, ag::scale(per, w.lambda_per));
  out = ag::add(out, ag::scale(tg, w.lambda_tg));
  return ag::add(out, ag::scale(adv, w.lambda_adv));
}

}  // namespace ltgsr
