#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "ltgsr/encoder.hpp"
#include "ltgsr/params.hpp"

namespace ltgsr {

/// Multi-scale feature processing: a residual block per input level, then for every
/// requested output level a fusion of all levels resampled to it (stride-2 convs
/// going down, bicubic going up), concatenated and merged by a 3x3 conv.
/// Levels are ordered finest first and halve in size from one to the next.
class MsfpBlock {
 public:
  MsfpBlock() = default;
  MsfpBlock(ParamStore& store, const std::string& name, std::vector<int> channels, std::vector<int> outputs,
            Rng& rng);

  /// One map per level; returns one map per requested output level.
  std::vector<ag::Var> forward(std::span<const ag::Var> levels) const;

  static std::size_t count_params(std::span<const int> channels, std::span<const int> outputs);

 private:
  std::vector<int> channels_;
  std::vector<int> outputs_;
  std::vector<ResBlock> res_;
  // down_[o][s]: chain of stride-2 convs taking level s to output level outputs_[o].
  std::vector<std::vector<std::vector<Conv>>> down_;
  std::vector<Conv> merge_;
};

struct LTGConfig {
  int m = 3;
  std::array<int, 3> channels{64, 128, 256};
};

/// Learnable texture generator: LR pyramid -> generated texture pyramid.
class Ltg {
 public:
  Ltg() = default;
  Ltg(ParamStore& store, const LTGConfig& cfg, Rng& rng);

  VarPyramid forward(const VarPyramid& f_lr) const;
  const LTGConfig& config() const { return cfg_; }

 private:
  LTGConfig cfg_;
  std::array<Conv, 3> entry_;
  std::vector<MsfpBlock> blocks_;
  std::array<Conv, 3> exit_;
};

/// Closed-form trainable scalar count of an Ltg built with `cfg`.
std::size_t count_params(const LTGConfig& cfg);

}  // namespace ltgsr
