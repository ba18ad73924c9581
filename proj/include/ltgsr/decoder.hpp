#pragma once

#include <array>
#include <span>

#include "ltgsr/encoder.hpp"
#include "ltgsr/ltg.hpp"

namespace ltgsr {

struct DecoderConfig {
  int n_res_blocks = 2;
  std::array<int, 3> channels{64, 128, 256};
  /// The head predicts a residual on top of the LR image.
  bool global_skip = true;
};

/// Coarse-to-fine fusion of LR features with relevance-weighted textures.
/// Scale indices are 0 (finest) .. 2 (coarsest).
class Decoder {
 public:
  Decoder() = default;
  Decoder(ParamStore& store, const DecoderConfig& cfg, Rng& rng);

  /// One building block. `d_smaller` holds the refined features of all coarser scales,
  /// nearest first; it is empty exactly on the coarsest scale.
  ag::Var block(int scale, const ag::Var& f_lr, const ag::Var& t, const ag::Var& r,
                std::span<const ag::Var> d_smaller) const;

  /// Refined features for all scales.
  VarPyramid features(const VarPyramid& f_lr, const VarPyramid& t, const VarPyramid& r) const;

  /// Raw (unclamped) SR batch, N x 1 x H x W. `lr` is the LR image batch.
  ag::Var forward(const VarPyramid& f_lr, const VarPyramid& t, const VarPyramid& r, const ag::Var& lr) const;

  const DecoderConfig& config() const { return cfg_; }

 private:
  struct Scale {
    Conv texture_merge;
    Conv up_merge;
    std::vector<ResBlock> res;
    MsfpBlock fuse;
  };
  DecoderConfig cfg_;
  std::array<Scale, 3> scales_;
  Conv head_;
};

/// Inference helper: SR image clamped to [0,1].
Image decode(const FeaturePyramid& f_lr, const FeaturePyramid& t, const std::array<Tensor, 3>& r, const Image& lr,
             const Decoder& decoder);

}  // namespace ltgsr
