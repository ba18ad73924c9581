#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ltgsr/config.hpp"
#include "ltgsr/imaging.hpp"

namespace ltgsr {

/// Encoder, LTG, decoder and critic sharing one parameter registry. Registration
/// order (and hence checkpoint order) is encoder, ltg, decoder, critic; each part is
/// initialised from its own stream so changing one part leaves the others intact.
class Model {
 public:
  Model(const ModelConfig& cfg, std::uint64_t init_seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return cfg_; }

  ParamStore params;
  Encoder encoder;
  Ltg ltg;
  Decoder decoder;
  Critic critic;

 private:
  ModelConfig cfg_;
};

/// Copies "encoder." entries from a checkpoint file into `store` (names and shapes
/// must match).
void load_encoder_weights(ParamStore& store, const std::filesystem::path& path);

/// N x 1 x H x W tensors. ref/ref_down may differ in size from lr/hr.
struct Batch {
  Tensor lr;
  Tensor hr;
  Tensor ref;
  Tensor ref_down;
  int size() const { return lr.n(); }
};

/// Crops `crop` x `crop` windows (lr/hr aligned, ref/ref_down aligned, independent
/// positions) from the selected groups. crop <= 0 keeps whole images.
Batch make_batch(std::span<const SampleGroup> data, std::span<const int> indices, int crop, std::uint64_t seed);

/// Search outcome that stays fixed while parameters are perturbed: transfer maps,
/// relevance and the texture targets of the losses.
struct SearchState {
  TransferPlan plan;
  std::array<Tensor, 3> targets;
};

/// Differentiable training-path forward.
struct GeneratorPass {
  ag::Var sr;  // raw, unclamped
  VarPyramid t_hat;
  ag::Var rec;
  ag::Var per;
  ag::Var tg;
  ag::Var adv;
  ag::Var total;
  SearchState search;
};

/// encode -> search (or `frozen`) -> LTG -> decode with searched textures -> losses.
/// With `with_adv` false the adversarial term (and total) is left for
/// add_adversarial, so the critic can be updated in between.
GeneratorPass generator_forward(const Model& model, const Batch& batch, const TrainConfig& cfg,
                                const SearchState* frozen = nullptr, bool with_adv = true);
void add_adversarial(GeneratorPass& pass, const Model& model, const TrainConfig& cfg);

/// Refless inference: LTG textures, relevance 1, clamped to [0,1]. Dims divisible by 16.
Image infer(const Model& model, const Image& lr);
/// Search-path inference with a reference pair.
Image infer_with_ref(const Model& model, const Image& lr, const Image& ref, const Image& ref_down);

}  // namespace ltgsr
