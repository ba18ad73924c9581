#pragma once

#include <array>
#include <optional>
#include <string>

#include "ltgsr/image.hpp"
#include "ltgsr/params.hpp"

namespace ltgsr {

struct EncoderConfig {
  std::array<int, 3> channels{64, 128, 256};
  /// Width of the two extra pooled stages behind deep_feature.
  int deep_channels = 512;
  /// Checkpoint file whose "encoder." entries replace the random init.
  std::optional<std::string> pretrained_weights_path;
  bool trainable = true;
};

/// Three-scale maps, finest first: H x W, H/2 x W/2, H/4 x W/4.
using VarPyramid = std::array<ag::Var, 3>;

struct FeaturePyramid {
  std::array<Tensor, 3> maps;
  const Tensor& operator[](int i) const { return maps[i]; }
};

class Encoder {
 public:
  Encoder() = default;
  /// Registers "encoder.*" parameters in `store`.
  Encoder(ParamStore& store, const EncoderConfig& cfg, Rng& rng);

  /// x: N x 1 x H x W with H, W divisible by 4.
  VarPyramid forward(const ag::Var& x) const;
  /// x: N x 1 x H x W with H, W divisible by 16. Output H/16 x W/16 x deep_channels.
  ag::Var deep(const ag::Var& x) const;
  /// Continues from an already computed coarsest pyramid level.
  ag::Var deep_from(const ag::Var& f3) const;

  const EncoderConfig& config() const { return cfg_; }

 private:
  EncoderConfig cfg_;
  std::array<std::array<Conv, 2>, 3> stages_;
  std::array<Conv, 2> deep_;
};

FeaturePyramid encode(const Image& img, const Encoder& encoder);
Tensor deep_feature(const Image& img, const Encoder& encoder);
FeaturePyramid to_pyramid(const VarPyramid& p);

}  // namespace ltgsr
