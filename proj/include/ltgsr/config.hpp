#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ltgsr/critic.hpp"
#include "ltgsr/decoder.hpp"
#include "ltgsr/losses.hpp"
#include "ltgsr/search.hpp"

#include <json.hpp>

namespace ltgsr {

struct ModelConfig {
  std::array<int, 3> channels{64, 128, 256};
  int deep_channels = 512;
  int msfp_blocks = 3;
  int decoder_res_blocks = 2;
  bool global_skip = true;
  std::vector<int> critic_channels{32, 64, 128, 256, 512};
  /// Critic input side; the training crop.
  int critic_input = 64;
  bool encoder_trainable = true;
  std::optional<std::string> encoder_weights;
  SearchConfig search;

  /// Desk-scale widths used by the overfit and determinism harnesses.
  static ModelConfig reduced();

  EncoderConfig encoder() const;
  LTGConfig ltg() const;
  DecoderConfig decoder() const;
  CriticConfig critic() const;
};

struct Seeds {
  std::uint64_t data = 0;
  std::uint64_t init = 0;
  std::uint64_t gan = 0;
};

struct TrainConfig {
  int epochs = 200;
  int batch = 4;
  int crop = 64;
  double lr_ltg = 1e-4;
  double lr_encoder = 1e-6;
  double lr_rest = 5e-5;
  double decay_factor = 0.7;
  int decay_every = 100;
  int critic_steps = 1;
  LossWeights weights;
  Seeds seeds;
  /// Scales in the texture term of the perceptual loss.
  int perceptual_k = 3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Checkpoint period in epochs (0: only at the end).
  int checkpoint_every = 0;

  /// Throws InvalidArgument when an invariant is violated.
  void validate() const;
};

nlohmann::json to_json(const ModelConfig& c);
nlohmann::json to_json(const TrainConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Applies one `key = value` setting; returns false for an unknown key.
bool apply_setting(std::string_view key, std::string_view value, ModelConfig& model, TrainConfig& train);

/// Reads `key = value` lines ('#' starts a comment). Unknown keys are errors.
void apply_config_file(const std::filesystem::path& path, ModelConfig& model, TrainConfig& train);

}  // namespace ltgsr
