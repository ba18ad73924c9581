#pragma once

#include <vector>

#include "ltgsr/params.hpp"

namespace ltgsr {

struct CriticConfig {
  std::vector<int> channels{32, 64, 128, 256, 512};
  double slope = 0.2;
  /// Square input side; fixes the dense head's extent.
  int input_size = 64;
};

/// Stride-2 3x3 conv stack with leaky rectifiers and a dense scalar head.
class Critic {
 public:
  Critic() = default;
  Critic(ParamStore& store, const CriticConfig& cfg, Rng& rng);

  /// x: N x 1 x S x S -> N x 1 x 1 x 1 scores.
  ag::Var forward(const ag::Var& x) const;
  const CriticConfig& config() const { return cfg_; }

 private:
  CriticConfig cfg_;
  std::vector<Conv> convs_;
  Conv head_;
};

}  // namespace ltgsr
