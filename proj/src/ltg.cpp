#include "ltgsr/ltg.hpp"

#include "ltgsr/errors.hpp"
#include "ltgsr/ops.hpp"

namespace ltgsr {

namespace {

std::size_t conv_count(int cin, int cout, int k) { return static_cast<std::size_t>(cin) * cout * k * k + cout; }

}  // namespace

MsfpBlock::MsfpBlock(ParamStore& store, const std::string& name, std::vector<int> channels,
                     std::vector<int> outputs, Rng& rng)
    : channels_(std::move(channels)), outputs_(std::move(outputs)) {
  const int L = static_cast<int>(channels_.size());
  if (L < 1) throw InvalidArgument("msfp: need at least one level");
  for (int l = 0; l < L; ++l) res_.push_back(ResBlock::make(store, name + ".res" + std::to_string(l), channels_[l], rng));
  int total = 0;
  for (int c : channels_) total += c;
  for (int t : outputs_) {
    if (t < 0 || t >= L) throw InvalidArgument("msfp: output level out of range");
    std::vector<std::vector<Conv>> chains(static_cast<std::size_t>(L));
    for (int s = 0; s < t; ++s) {
      for (int k = 0; k < t - s; ++k) {
        chains[s].push_back(Conv::make(store,
                                       name + ".fuse" + std::to_string(t) + ".down" + std::to_string(s) + "_" +
                                           std::to_string(k),
                                       channels_[s], channels_[s], 3, 2, rng));
      }
    }
    down_.push_back(std::move(chains));
    merge_.push_back(Conv::make(store, name + ".fuse" + std::to_string(t) + ".merge", total, channels_[t], 3, 1, rng));
  }
}

std::vector<ag::Var> MsfpBlock::forward(std::span<const ag::Var> levels) const {
  const int L = static_cast<int>(channels_.size());
  if (static_cast<int>(levels.size()) != L) throw InvalidArgument("msfp: level count mismatch");
  for (int l = 0; l < L; ++l) {
    if (levels[l].shape().c != channels_[l]) throw InvalidArgument("msfp: channel mismatch at level " + std::to_string(l));
    if (l > 0 && (levels[l - 1].shape().h != 2 * levels[l].shape().h ||
                  levels[l - 1].shape().w != 2 * levels[l].shape().w)) {
      throw InvalidArgument("msfp: levels must halve in size");
    }
  }
  std::vector<ag::Var> x(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) x[l] = res_[l](levels[l]);

  std::vector<ag::Var> out;
  for (std::size_t o = 0; o < outputs_.size(); ++o) {
    const int t = outputs_[o];
    const Shape& target = x[t].shape();
    std::vector<ag::Var> parts;
    for (int s = 0; s < L; ++s) {
      ag::Var h = x[s];
      if (s < t) {
        for (const Conv& c : down_[o][s]) h = ag::relu(c(h));
      } else if (s > t) {
        h = ag::resize_bicubic(h, target.h, target.w);
      }
      parts.push_back(h);
    }
    out.push_back(ag::relu(merge_[o](ag::concat_channels(parts))));
  }
  return out;
}

std::size_t MsfpBlock::count_params(std::span<const int> channels, std::span<const int> outputs) {
  std::size_t n = 0;
  int total = 0;
  for (int c : channels) {
    n += 2 * conv_count(c, c, 3);
    total += c;
  }
  for (int t : outputs) {
    for (int s = 0; s < t; ++s) n += static_cast<std::size_t>(t - s) * conv_count(channels[s], channels[s], 3);
    n += conv_count(total, channels[t], 3);
  }
  return n;
}

Ltg::Ltg(ParamStore& store, const LTGConfig& cfg, Rng& rng) : cfg_(cfg) {
  if (cfg.m < 1) throw InvalidArgument("ltg: need at least one MSFP block");
  const std::vector<int> ch(cfg.channels.begin(), cfg.channels.end());
  for (int i = 0; i < 3; ++i) {
    entry_[i] = Conv::make(store, "ltg.entry" + std::to_string(i + 1), ch[i], ch[i], 1, 1, rng);
  }
  for (int b = 0; b < cfg.m; ++b) {
    blocks_.emplace_back(store, "ltg.msfp" + std::to_string(b + 1), ch, std::vector<int>{0, 1, 2}, rng);
  }
  for (int i = 0; i < 3; ++i) {
    exit_[i] = Conv::make(store, "ltg.exit" + std::to_string(i + 1), ch[i], ch[i], 1, 1, rng);
  }
}

VarPyramid Ltg::forward(const VarPyramid& f_lr) const {
  std::vector<ag::Var> h(3);
  for (int i = 0; i < 3; ++i) h[i] = entry_[i](f_lr[i]);
  for (const MsfpBlock& b : blocks_) h = b.forward(h);
  VarPyramid out;
  for (int i = 0; i < 3; ++i) out[i] = exit_[i](h[i]);
  return out;
}

std::size_t count_params(const LTGConfig& cfg) {
  const std::array<int, 3> outputs{0, 1, 2};
  std::size_t n = 0;
  for (int c : cfg.channels) n += 2 * conv_count(c, c, 1);
  return n + static_cast<std::size_t>(cfg.m) * MsfpBlock::count_params(cfg.channels, outputs);
}

}  // namespace ltgsr
