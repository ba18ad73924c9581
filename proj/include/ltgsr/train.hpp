#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ltgsr/checkpoint.hpp"
#include "ltgsr/model.hpp"

namespace ltgsr {

/// Adaptive moment estimation with per-parameter state.
class Adam {
 public:
  struct Slot {
    Tensor m;
    Tensor v;
    std::int64_t t = 0;
  };

  Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void update(const std::string& name, ag::Var& param, const Tensor& grad, double lr);
  std::map<std::string, Slot>& slots() { return slots_; }
  const std::map<std::string, Slot>& slots() const { return slots_; }

 private:
  double beta1_, beta2_, eps_;
  std::map<std::string, Slot> slots_;
};

struct GroupRates {
  double ltg = 0.0;
  double encoder = 0.0;
  double rest = 0.0;
  /// Rate for a parameter by name prefix; the decoder and critic share `rest`.
  double of(const std::string& name) const;
};

/// Base rates times decay_factor^floor(epoch / decay_every).
GroupRates group_rates(const TrainConfig& cfg, int epoch);

struct StepRecord {
  int epoch = 0;
  int step = 0;
  std::uint64_t global_step = 0;
  double rec = 0, per = 0, tg = 0, adv = 0, total = 0;
  /// Last critic update of the step (0 when the critic is idle).
  double critic = 0, gp = 0;
  GroupRates rates;

  bool operator==(const StepRecord&) const;
};

nlohmann::json to_json(const StepRecord& r);

struct FitOptions {
  /// Written every cfg.checkpoint_every epochs and at the end (skipped when empty).
  std::filesystem::path checkpoint;
  /// Receives one JSON line per epoch.
  std::ostream* log = nullptr;
  /// Stop after this many steps of this call (negative: run to the last epoch).
  std::int64_t max_steps = -1;
  std::function<void(const StepRecord&)> on_step;
};

class Trainer {
 public:
  Trainer(Model& model, const TrainConfig& cfg);
  /// Resumes optimizer state and schedule position from `ck` (parameters must
  /// already be restored into `model`).
  Trainer(Model& model, const Checkpoint& ck);

  /// Critic updates, then one generator update on `batch`.
  StepRecord train_step(const Batch& batch);
  std::vector<StepRecord> fit(std::span<const SampleGroup> data, const FitOptions& opts = {});

  /// Batch for (epoch, step) of the fixed data order.
  Batch batch_for(std::span<const SampleGroup> data, int epoch, int step) const;

  Checkpoint snapshot() const;
  void save(const std::filesystem::path& path) const;

  const TrainState& state() const { return state_; }
  const TrainConfig& config() const { return cfg_; }
  const Adam& optimizer() const { return adam_; }

 private:
  Model& model_;
  TrainConfig cfg_;
  TrainState state_;
  Adam adam_;
};

/// Builds a model from a checkpoint and loads its parameters.
std::unique_ptr<Model> restore_model(const Checkpoint& ck);

}  // namespace ltgsr
