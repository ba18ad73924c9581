#include "ltgsr/model.hpp"

#include <random>

#include "ltgsr/checkpoint.hpp"
#include "ltgsr/errors.hpp"
#include "ltgsr/ops.hpp"
#include "ltgsr/random.hpp"

namespace ltgsr {

namespace {

enum Stream : std::uint64_t { kEncoderInit = 1, kLtgInit, kDecoderInit, kCriticInit };

Rng stream(std::uint64_t seed, Stream s) { return Rng(derive_seed({seed, s})); }

void require_divisible(const Image& img, int k, const char* what) {
  if (img.height() % k != 0 || img.width() % k != 0) {
    throw InvalidArgument(std::string(what) + " dims " + std::to_string(img.height()) + "x" +
                          std::to_string(img.width()) + " must be divisible by " + std::to_string(k));
  }
}

}  // namespace

Model::Model(const ModelConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
  Rng e = stream(init_seed, kEncoderInit);
  encoder = Encoder(params, cfg.encoder(), e);
  if (cfg.encoder_weights) load_encoder_weights(params, *cfg.encoder_weights);
  Rng l = stream(init_seed, kLtgInit);
  ltg = Ltg(params, cfg.ltg(), l);
  Rng d = stream(init_seed, kDecoderInit);
  decoder = Decoder(params, cfg.decoder(), d);
  Rng c = stream(init_seed, kCriticInit);
  critic = Critic(params, cfg.critic(), c);
}

void load_encoder_weights(ParamStore& store, const std::filesystem::path& path) {
  const Checkpoint ck = read_checkpoint(path);
  std::size_t copied = 0;
  for (const ParamBlob& b : ck.params) {
    if (!b.name.starts_with("encoder.")) continue;
    if (!store.contains(b.name)) throw FormatError("encoder weights: unexpected entry " + b.name);
    ag::Var v = store.get(b.name);
    if (!(v.shape() == b.value.shape())) throw FormatError("encoder weights: shape mismatch for " + b.name);
    v.mutable_value() = b.value;
    ++copied;
  }
  if (copied != store.select("encoder.").size()) throw FormatError("encoder weights: incomplete encoder in " + path.string());
}

Batch make_batch(std::span<const SampleGroup> data, std::span<const int> indices, int crop, std::uint64_t seed) {
  if (indices.empty()) throw InvalidArgument("make_batch: empty batch");
  std::vector<Tensor> lr, hr, ref, ref_down;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const SampleGroup& g = data[static_cast<std::size_t>(indices[k])];
    std::mt19937_64 rng(derive_seed({seed, k}));
    auto window = [&](const Image& img) -> std::pair<int, int> {
      if (crop <= 0) return {0, 0};
      if (img.height() < crop || img.width() < crop) {
        throw InvalidArgument("make_batch: image smaller than the crop size");
      }
      return {std::uniform_int_distribution<int>(0, img.height() - crop)(rng),
              std::uniform_int_distribution<int>(0, img.width() - crop)(rng)};
    };
    auto cut = [&](const Image& img, std::pair<int, int> at) {
      return crop <= 0 ? to_tensor(img) : to_tensor(ltgsr::crop(img, at.first, at.second, crop, crop));
    };
    const auto a = window(g.hr);
    const auto b = window(g.ref);
    lr.push_back(cut(g.lr, a));
    hr.push_back(cut(g.hr, a));
    ref.push_back(cut(g.ref, b));
    ref_down.push_back(cut(g.ref_down, b));
  }
  return {stack(lr), stack(hr), stack(ref), stack(ref_down)};
}

GeneratorPass generator_forward(const Model& model, const Batch& batch, const TrainConfig& cfg,
                                const SearchState* frozen, bool with_adv) {
  GeneratorPass pass;
  const ag::Var lr = ag::constant(batch.lr);
  const ag::Var hr = ag::constant(batch.hr);
  const VarPyramid f_lr = model.encoder.forward(lr);
  const VarPyramid f_ref = model.encoder.forward(ag::constant(batch.ref));

  if (frozen != nullptr) {
    pass.search = *frozen;
  } else {
    FeaturePyramid f_refdown;
    {
      ag::NoGradGuard guard;
      f_refdown = to_pyramid(model.encoder.forward(ag::constant(batch.ref_down)));
    }
    pass.search.plan = plan_transfer(to_pyramid(f_lr), f_refdown, model.config().search);
  }
  VarPyramid t, r;
  for (int i = 0; i < 3; ++i) {
    t[i] = transfer(f_ref[i], pass.search.plan, i);
    r[i] = ag::constant(pass.search.plan.relevance[i]);
    if (frozen == nullptr) pass.search.targets[i] = t[i].value();
  }

  pass.t_hat = model.ltg.forward(f_lr);
  pass.sr = model.decoder.forward(f_lr, t, r, lr);

  pass.rec = rec_loss(hr, pass.sr);
  pass.per = perceptual_loss(model.encoder, hr, pass.sr, &pass.search.targets, cfg.perceptual_k).total;
  pass.tg = texture_gen_loss(pass.search.targets, pass.t_hat, pass.search.plan.relevance);
  if (with_adv) add_adversarial(pass, model, cfg);
  return pass;
}

void add_adversarial(GeneratorPass& pass, const Model& model, const TrainConfig& cfg) {
  pass.adv = cfg.weights.lambda_adv > 0 ? generator_adv_loss(model.critic.forward(pass.sr))
                                        : ag::constant(Tensor::scalar(0.0));
  pass.total = total_loss(pass.rec, pass.per, pass.tg, pass.adv, cfg.weights);
}

Image infer(const Model& model, const Image& lr) {
  require_divisible(lr, 16, "infer: LR");
  ag::NoGradGuard guard;
  const ag::Var x = ag::constant(to_tensor(lr));
  const VarPyramid f = model.encoder.forward(x);
  const VarPyramid t = model.ltg.forward(f);
  VarPyramid r;
  for (int i = 0; i < 3; ++i) r[i] = ag::constant(Tensor(Shape{1, 1, f[i].shape().h, f[i].shape().w}, 1.0));
  return to_image(model.decoder.forward(f, t, r, x).value(), 0, true);
}

Image infer_with_ref(const Model& model, const Image& lr, const Image& ref, const Image& ref_down) {
  require_divisible(lr, 16, "infer_with_ref: LR");
  require_divisible(ref, 4, "infer_with_ref: Ref");
  if (!ref.same_dims(ref_down)) throw InvalidArgument("infer_with_ref: Ref and Ref-down dims differ");
  ag::NoGradGuard guard;
  const Encoder& enc = model.encoder;
  const FeaturePyramid f_lr = encode(lr, enc);
  const TextureBundle b = search_textures(f_lr, encode(ref_down, enc), encode(ref, enc), model.config().search);
  return decode(f_lr, FeaturePyramid{b.t}, b.r, lr, model.decoder);
}

}  // namespace ltgsr
