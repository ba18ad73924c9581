#include "ltgsr/encoder.hpp"

#include "ltgsr/errors.hpp"
#include "ltgsr/ops.hpp"

namespace ltgsr {

namespace {

void check_input(const ag::Var& x, int multiple) {
  const Shape& s = x.shape();
  if (s.c != 1) throw InvalidArgument("encoder expects single-channel input, got " + s.str());
  if (s.h % multiple != 0 || s.w % multiple != 0 || s.h == 0 || s.w == 0) {
    throw InvalidArgument("image dims " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                          " must be divisible by " + std::to_string(multiple));
  }
}

}  // namespace

Encoder::Encoder(ParamStore& store, const EncoderConfig& cfg, Rng& rng) : cfg_(cfg) {
  for (int c : cfg.channels) {
    if (c < 1) throw InvalidArgument("encoder channels must be >= 1");
  }
  if (cfg.deep_channels < 1) throw InvalidArgument("deep channels must be >= 1");
  int cin = 1;
  for (int s = 0; s < 3; ++s) {
    const int c = cfg.channels[s];
    const std::string base = "encoder.stage" + std::to_string(s + 1);
    stages_[s][0] = Conv::make(store, base + ".conv1", cin, c, 3, 1, rng, 1.0, cfg.trainable);
    stages_[s][1] = Conv::make(store, base + ".conv2", c, c, 3, 1, rng, 1.0, cfg.trainable);
    cin = c;
  }
  // Stand-in for a fixed pretrained layer: never optimised.
  deep_[0] = Conv::make(store, "encoder.deep1", cin, cfg.deep_channels, 3, 1, rng, 1.0, false);
  deep_[1] = Conv::make(store, "encoder.deep2", cfg.deep_channels, cfg.deep_channels, 3, 1, rng, 1.0, false);
}

VarPyramid Encoder::forward(const ag::Var& x) const {
  check_input(x, 4);
  VarPyramid out;
  ag::Var h = x;
  for (int s = 0; s < 3; ++s) {
    if (s > 0) h = ag::max_pool2(h);
    h = ag::relu(stages_[s][0](h));
    h = ag::relu(stages_[s][1](h));
    out[s] = h;
  }
  return out;
}

ag::Var Encoder::deep_from(const ag::Var& f3) const {
  ag::Var h = ag::relu(deep_[0](ag::max_pool2(f3)));
  return ag::relu(deep_[1](ag::max_pool2(h)));
}

ag::Var Encoder::deep(const ag::Var& x) const {
  check_input(x, 16);
  return deep_from(forward(x)[2]);
}

FeaturePyramid to_pyramid(const VarPyramid& p) { return {{p[0].value(), p[1].value(), p[2].value()}}; }

FeaturePyramid encode(const Image& img, const Encoder& encoder) {
  ag::NoGradGuard guard;
  return to_pyramid(encoder.forward(ag::constant(to_tensor(img))));
}

Tensor deep_feature(const Image& img, const Encoder& encoder) {
  ag::NoGradGuard guard;
  return encoder.deep(ag::constant(to_tensor(img))).value();
}

}  // namespace ltgsr
