#include "ltgsr/critic.hpp"

#include "ltgsr/errors.hpp"
#include "ltgsr/ops.hpp"

namespace ltgsr {

Critic::Critic(ParamStore& store, const CriticConfig& cfg, Rng& rng) : cfg_(cfg) {
  if (cfg.channels.empty()) throw InvalidArgument("critic: need at least one conv layer");
  int cin = 1;
  int size = cfg.input_size;
  for (std::size_t l = 0; l < cfg.channels.size(); ++l) {
    convs_.push_back(Conv::make(store, "critic.conv" + std::to_string(l + 1), cin, cfg.channels[l], 3, 2, rng));
    cin = cfg.channels[l];
    size = (size + 1) / 2;
  }
  if (size < 1) throw InvalidArgument("critic: input too small");
  head_ = Conv::make_valid(store, "critic.dense", cin, 1, size, size, rng);
}

ag::Var Critic::forward(const ag::Var& x) const {
  const Shape& s = x.shape();
  if (s.c != 1 || s.h != cfg_.input_size || s.w != cfg_.input_size) {
    throw InvalidArgument("critic: expected N x 1 x " + std::to_string(cfg_.input_size) + " x " +
                          std::to_string(cfg_.input_size) + " input, got " + s.str());
  }
  ag::Var h = x;
  for (const Conv& c : convs_) h = ag::leaky_relu(c(h), cfg_.slope);
  return head_(h);
}

}  // namespace ltgsr
