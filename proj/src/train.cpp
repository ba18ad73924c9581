#include "ltgsr/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "ltgsr/errors.hpp"
#include "ltgsr/ops.hpp"
#include "ltgsr/random.hpp"

namespace ltgsr {

namespace {

enum Purpose : std::uint64_t { kOrder = 11, kCrop = 12, kPenalty = 13 };

bool finite(double v) { return std::isfinite(v); }

std::string dump(const StepRecord& r, const char* where) {
  std::ostringstream s;
  s << "training diverged (" << where << "): " << to_json(r).dump();
  return s.str();
}

}  // namespace

void Adam::update(const std::string& name, ag::Var& param, const Tensor& grad, double lr) {
  Tensor& p = param.mutable_value();
  Slot& s = slots_[name];
  if (s.m.empty()) {
    s.m = Tensor(p.shape());
    s.v = Tensor(p.shape());
  }
  ++s.t;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(s.t));
  double* pv = p.data();
  double* m = s.m.data();
  double* v = s.v.data();
  const double* g = grad.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
    v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
    pv[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
  }
}

double GroupRates::of(const std::string& name) const {
  if (name.starts_with("ltg.")) return ltg;
  if (name.starts_with("encoder.")) return encoder;
  return rest;
}

GroupRates group_rates(const TrainConfig& cfg, int epoch) {
  const double f = std::pow(cfg.decay_factor, static_cast<double>(epoch / cfg.decay_every));
  return {cfg.lr_ltg * f, cfg.lr_encoder * f, cfg.lr_rest * f};
}

bool StepRecord::operator==(const StepRecord& o) const {
  return epoch == o.epoch && step == o.step && global_step == o.global_step && rec == o.rec && per == o.per &&
         tg == o.tg && adv == o.adv && total == o.total && critic == o.critic && gp == o.gp;
}

nlohmann::json to_json(const StepRecord& r) {
  return {{"epoch", r.epoch}, {"step", r.step}, {"global_step", r.global_step}, {"rec", r.rec},
          {"per", r.per},     {"tg", r.tg},     {"adv", r.adv},                 {"total", r.total},
          {"critic", r.critic}, {"gp", r.gp},
          {"lr", {{"ltg", r.rates.ltg}, {"encoder", r.rates.encoder}, {"rest", r.rates.rest}}}};
}

Trainer::Trainer(Model& model, const TrainConfig& cfg)
    : model_(model), cfg_(cfg), adam_(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps) {
  cfg_.validate();
}

Trainer::Trainer(Model& model, const Checkpoint& ck) : Trainer(model, ck.train) {
  state_ = ck.state;
  for (const ParamBlob& b : ck.params) {
    if (b.m.empty()) continue;
    adam_.slots()[b.name] = {b.m, b.v, b.t};
  }
}

StepRecord Trainer::train_step(const Batch& batch) {
  StepRecord rec;
  rec.epoch = state_.epoch;
  rec.step = state_.step_in_epoch;
  rec.global_step = state_.global_step;
  rec.rates = group_rates(cfg_, state_.epoch);

  GeneratorPass pass = generator_forward(model_, batch, cfg_, nullptr, false);

  if (cfg_.weights.lambda_adv > 0) {
    const ag::Var hr = ag::constant(batch.hr);
    const ag::Var fake = ag::detach(pass.sr);
    const CriticFn fn = [this](const ag::Var& x) { return model_.critic.forward(x); };
    const auto critic_params = model_.params.select("critic.", true);
    std::vector<ag::Var> vars;
    for (const Param* p : critic_params) vars.push_back(p->var);
    for (int k = 0; k < cfg_.critic_steps; ++k) {
      const ag::Var gp = gradient_penalty(fn, hr, fake, cfg_.weights.gp_lambda,
                                          derive_seed({cfg_.seeds.gan, kPenalty, state_.global_step,
                                                       static_cast<std::uint64_t>(k)}));
      const ag::Var loss = critic_loss(model_.critic.forward(hr), model_.critic.forward(fake), gp);
      rec.critic = loss.value().item();
      rec.gp = gp.value().item();
      if (!finite(rec.critic)) throw TrainingDiverged(dump(rec, "critic"));
      const auto grads = ag::grad(loss, vars);
      for (std::size_t i = 0; i < vars.size(); ++i) {
        adam_.update(critic_params[i]->name, vars[i], grads[i].value(), rec.rates.rest);
      }
    }
  }
  add_adversarial(pass, model_, cfg_);

  rec.rec = pass.rec.value().item();
  rec.per = pass.per.value().item();
  rec.tg = pass.tg.value().item();
  rec.adv = pass.adv.value().item();
  rec.total = pass.total.value().item();
  if (!finite(rec.total) || !finite(rec.rec) || !finite(rec.per) || !finite(rec.tg) || !finite(rec.adv)) {
    throw TrainingDiverged(dump(rec, "generator"));
  }

  std::vector<const Param*> gen;
  for (const char* prefix : {"encoder.", "ltg.", "decoder."}) {
    const auto sel = model_.params.select(prefix, true);
    gen.insert(gen.end(), sel.begin(), sel.end());
  }
  std::vector<ag::Var> vars;
  for (const Param* p : gen) vars.push_back(p->var);
  const auto grads = ag::grad(pass.total, vars);
  for (std::size_t i = 0; i < vars.size(); ++i) {
    adam_.update(gen[i]->name, vars[i], grads[i].value(), rec.rates.of(gen[i]->name));
  }

  ++state_.step_in_epoch;
  ++state_.global_step;
  return rec;
}

Batch Trainer::batch_for(std::span<const SampleGroup> data, int epoch, int step) const {
  const int n = static_cast<int>(data.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed({cfg_.seeds.data, kOrder, static_cast<std::uint64_t>(epoch)}));
  std::shuffle(order.begin(), order.end(), rng);
  const int begin = step * cfg_.batch;
  const int end = std::min(n, begin + cfg_.batch);
  const std::span<const int> idx(order.data() + begin, static_cast<std::size_t>(end - begin));
  return make_batch(data, idx, cfg_.crop,
                    derive_seed({cfg_.seeds.data, kCrop, static_cast<std::uint64_t>(epoch),
                                 static_cast<std::uint64_t>(step)}));
}

std::vector<StepRecord> Trainer::fit(std::span<const SampleGroup> data, const FitOptions& opts) {
  if (data.empty()) throw InvalidArgument("fit: empty dataset");
  const int n = static_cast<int>(data.size());
  const int steps_per_epoch = (n + cfg_.batch - 1) / cfg_.batch;
  std::vector<StepRecord> out;
  std::int64_t done = 0;
  while (state_.epoch < cfg_.epochs) {
    while (state_.step_in_epoch < steps_per_epoch) {
      if (opts.max_steps >= 0 && done >= opts.max_steps) return out;
      out.push_back(train_step(batch_for(data, state_.epoch, state_.step_in_epoch)));
      ++done;
      if (opts.on_step) opts.on_step(out.back());
    }
    if (opts.log != nullptr) {
      nlohmann::json line{{"epoch", state_.epoch}};
      const auto first = out.end() - std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(out.size()), state_.step_in_epoch);
      double rec = 0, per = 0, tg = 0, adv = 0, total = 0;
      for (auto it = first; it != out.end(); ++it) {
        rec += it->rec;
        per += it->per;
        tg += it->tg;
        adv += it->adv;
        total += it->total;
      }
      const double k = std::max<std::ptrdiff_t>(1, out.end() - first);
      line["rec"] = rec / k;
      line["per"] = per / k;
      line["tg"] = tg / k;
      line["adv"] = adv / k;
      line["total"] = total / k;
      line["steps"] = state_.global_step;
      *opts.log << line.dump() << '\n' << std::flush;
    }
    ++state_.epoch;
    state_.step_in_epoch = 0;
    if (!opts.checkpoint.empty() && cfg_.checkpoint_every > 0 && state_.epoch % cfg_.checkpoint_every == 0) {
      save(opts.checkpoint);
    }
  }
  if (!opts.checkpoint.empty()) save(opts.checkpoint);
  return out;
}

Checkpoint Trainer::snapshot() const {
  Checkpoint ck;
  ck.model = model_.config();
  ck.train = cfg_;
  ck.state = state_;
  for (const Param& p : model_.params.entries()) {
    ParamBlob b{p.name, p.trainable, p.var.value(), {}, {}, 0};
    if (auto it = adam_.slots().find(p.name); it != adam_.slots().end()) {
      b.m = it->second.m;
      b.v = it->second.v;
      b.t = it->second.t;
    }
    ck.params.push_back(std::move(b));
  }
  return ck;
}

void Trainer::save(const std::filesystem::path& path) const { write_checkpoint(path, snapshot()); }

std::unique_ptr<Model> restore_model(const Checkpoint& ck) {
  ModelConfig cfg = ck.model;
  // Stored values replace any external encoder weights.
  cfg.encoder_weights.reset();
  auto model = std::make_unique<Model>(cfg, 0);
  auto& entries = model->params.entries();
  if (entries.size() != ck.params.size()) throw FormatError("checkpoint: parameter count does not match the model");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const ParamBlob& b = ck.params[i];
    if (entries[i].name != b.name || !(entries[i].var.shape() == b.value.shape())) {
      throw FormatError("checkpoint: parameter mismatch at " + b.name);
    }
    entries[i].var.mutable_value() = b.value;
    entries[i].trainable = b.trainable;
  }
  return model;
}

}  // namespace ltgsr
