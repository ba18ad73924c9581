#pragma once

#include <array>
#include <cstdint>
#include <functional>

#include "ltgsr/encoder.hpp"

namespace ltgsr {

struct LossWeights {
  double lambda_per = 1e-2;
  double lambda_tg = 0.3;
  double lambda_adv = 1e-3;
  double gp_lambda = 10.0;
};

/// Mean absolute difference over all pixels and samples.
ag::Var rec_loss(const ag::Var& hr, const ag::Var& sr);
double rec_loss(const Image& hr, const Image& sr);

/// Squared distance normalised by N*C*H*W.
ag::Var feature_distance(const ag::Var& a, const ag::Var& b);

struct PerceptualTerms {
  ag::Var deep;     // deep_feature(hr) vs deep_feature(sr)
  ag::Var texture;  // encoder(sr) vs searched textures, averaged over k scales
  ag::Var total;
};

/// `textures` (finest first) are treated as fixed targets. The k coarsest scales
/// enter the texture term; k = 0 drops it.
PerceptualTerms perceptual_loss(const Encoder& encoder, const ag::Var& hr, const ag::Var& sr,
                                const std::array<Tensor, 3>* textures, int k = 3);

ag::Var critic_loss(const ag::Var& d_real, const ag::Var& d_fake, const ag::Var& gp);

using CriticFn = std::function<ag::Var(const ag::Var&)>;

/// gp_lambda * mean_n (||grad D(x_hat_n)|| - 1)^2 with x_hat = eps*hr + (1-eps)*sr,
/// eps ~ U(0,1) per sample from `seed`. sr is detached. The result is differentiable
/// w.r.t. the critic's parameters.
ag::Var gradient_penalty(const CriticFn& critic, const ag::Var& hr, const ag::Var& sr, double gp_lambda,
                         std::uint64_t seed);

/// -mean(d_fake); throws on an empty batch.
ag::Var generator_adv_loss(const ag::Var& d_fake);

/// (1/3) sum_i sum((T_i - T_hat_i)^2 * R_i) / (N*C_i*H_i*W_i); T is a fixed target.
ag::Var texture_gen_loss(const std::array<Tensor, 3>& t, const VarPyramid& t_hat, const std::array<Tensor, 3>& r);

struct LossParts {
  double rec = 0.0;
  double per = 0.0;
  double tg = 0.0;
  double adv = 0.0;
};

double total_loss(const LossParts& parts, const LossWeights& w);
ag::Var total_loss(const ag::Var& rec, const ag::Var& per, const ag::Var& tg, const ag::Var& adv,
                   const LossWeights& w);

}  // namespace ltgsr
