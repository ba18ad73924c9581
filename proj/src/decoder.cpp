#include "ltgsr/decoder.hpp"

#include "ltgsr/errors.hpp"
#include "ltgsr/ops.hpp"

namespace ltgsr {

namespace {

void require_same_plane(const ag::Var& a, const ag::Var& b, const char* what) {
  const Shape &x = a.shape(), &y = b.shape();
  if (x.n != y.n || x.h != y.h || x.w != y.w) {
    throw InvalidArgument(std::string("decoder: ") + what + " shape " + y.str() + " does not match " + x.str());
  }
}

}  // namespace

Decoder::Decoder(ParamStore& store, const DecoderConfig& cfg, Rng& rng) : cfg_(cfg) {
  if (cfg.n_res_blocks < 1) throw InvalidArgument("decoder: n_res_blocks must be >= 1");
  const auto& ch = cfg.channels;
  for (int i = 2; i >= 0; --i) {
    const std::string base = "decoder.scale" + std::to_string(i + 1);
    Scale& s = scales_[i];
    s.texture_merge = Conv::make(store, base + ".texture_merge", 2 * ch[i], ch[i], 3, 1, rng);
    if (i < 2) s.up_merge = Conv::make(store, base + ".up_merge", ch[i] + ch[i + 1], ch[i], 3, 1, rng);
    for (int k = 0; k < cfg.n_res_blocks; ++k) {
      s.res.push_back(ResBlock::make(store, base + ".res" + std::to_string(k + 1), ch[i], rng));
    }
    if (i < 2) {
      std::vector<int> levels(ch.begin() + i, ch.end());
      s.fuse = MsfpBlock(store, base + ".msfp", levels, {0}, rng);
    }
  }
  head_ = Conv::make(store, "decoder.head", ch[0] + ch[1] + ch[2], 1, 3, 1, rng, 0.1);
}

ag::Var Decoder::block(int scale, const ag::Var& f_lr, const ag::Var& t, const ag::Var& r,
                       std::span<const ag::Var> d_smaller) const {
  if (scale < 0 || scale > 2) throw InvalidArgument("decoder: scale out of range");
  if (static_cast<int>(d_smaller.size()) != 2 - scale) {
    throw InvalidArgument("decoder: need the refined features of every coarser scale");
  }
  const Scale& s = scales_[scale];
  require_same_plane(f_lr, t, "texture");
  require_same_plane(f_lr, r, "relevance");
  if (t.shape().c != f_lr.shape().c || r.shape().c != 1) throw InvalidArgument("decoder: texture channels");

  const ag::Var weighted = ag::mul(t, ag::broadcast_to(r, t.shape()));
  const std::array<ag::Var, 2> tm{f_lr, weighted};
  ag::Var h = ag::add(s.texture_merge(ag::concat_channels(tm)), f_lr);
  if (!d_smaller.empty()) {
    const ag::Var up = ag::resize_bicubic(d_smaller[0], f_lr.shape().h, f_lr.shape().w);
    const std::array<ag::Var, 2> um{h, up};
    h = s.up_merge(ag::concat_channels(um));
  }
  for (const ResBlock& rb : s.res) h = rb(h);
  if (d_smaller.empty()) return h;
  std::vector<ag::Var> levels{h};
  levels.insert(levels.end(), d_smaller.begin(), d_smaller.end());
  return s.fuse.forward(levels)[0];
}

VarPyramid Decoder::features(const VarPyramid& f_lr, const VarPyramid& t, const VarPyramid& r) const {
  VarPyramid d;
  for (int i = 2; i >= 0; --i) {
    std::vector<ag::Var> smaller(d.begin() + i + 1, d.end());
    d[i] = block(i, f_lr[i], t[i], r[i], smaller);
  }
  return d;
}

ag::Var Decoder::forward(const VarPyramid& f_lr, const VarPyramid& t, const VarPyramid& r, const ag::Var& lr) const {
  const VarPyramid d = features(f_lr, t, r);
  const int H = lr.shape().h, W = lr.shape().w;
  if (d[0].shape().h != H || d[0].shape().w != W || lr.shape().c != 1) {
    throw InvalidArgument("decoder: LR image " + lr.shape().str() + " does not match the feature pyramid");
  }
  const std::array<ag::Var, 3> full{d[0], ag::resize_bicubic(d[1], H, W), ag::resize_bicubic(d[2], H, W)};
  ag::Var out = head_(ag::concat_channels(full));
  return cfg_.global_skip ? ag::add(out, lr) : out;
}

Image decode(const FeaturePyramid& f_lr, const FeaturePyramid& t, const std::array<Tensor, 3>& r, const Image& lr,
             const Decoder& decoder) {
  ag::NoGradGuard guard;
  VarPyramid fv, tv, rv;
  for (int i = 0; i < 3; ++i) {
    fv[i] = ag::constant(f_lr[i]);
    tv[i] = ag::constant(t[i]);
    rv[i] = ag::constant(r[i]);
  }
  return to_image(decoder.forward(fv, tv, rv, ag::constant(to_tensor(lr))).value(), 0, true);
}

}  // namespace ltgsr
