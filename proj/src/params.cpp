#include "ltgsr/params.hpp"

#include <cmath>

#include "ltgsr/errors.hpp"
#include "ltgsr/ops.hpp"

namespace ltgsr {

ag::Var ParamStore::add(std::string name, Tensor init, bool trainable) {
  if (index_.contains(name)) throw InvalidArgument("duplicate parameter name " + name);
  index_.emplace(name, entries_.size());
  entries_.push_back({name, ag::Var(std::move(init), true), trainable});
  return entries_.back().var;
}

const ag::Var& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw InvalidArgument("unknown parameter " + name);
  return entries_[it->second].var;
}

std::vector<const Param*> ParamStore::select(std::string_view prefix, bool trainable_only) const {
  std::vector<const Param*> out;
  for (const auto& p : entries_) {
    if (p.name.starts_with(prefix) && (!trainable_only || p.trainable)) out.push_back(&p);
  }
  return out;
}

std::vector<ag::Var> ParamStore::vars(std::string_view prefix, bool trainable_only) const {
  std::vector<ag::Var> out;
  for (const Param* p : select(prefix, trainable_only)) out.push_back(p->var);
  return out;
}

std::size_t ParamStore::count(std::string_view prefix, bool trainable_only) const {
  std::size_t n = 0;
  for (const Param* p : select(prefix, trainable_only)) n += p->var.value().size();
  return n;
}

void ParamStore::set_trainable(std::string_view prefix, bool trainable) {
  for (auto& p : entries_) {
    if (p.name.starts_with(prefix)) p.trainable = trainable;
  }
}

void ParamStore::copy_values_from(const ParamStore& other) {
  if (other.entries_.size() != entries_.size()) throw InvalidArgument("parameter stores differ in size");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const Param& src = other.entries_[i];
    Param& dst = entries_[i];
    if (src.name != dst.name || src.var.shape() != dst.var.shape()) {
      throw InvalidArgument("parameter mismatch at " + dst.name);
    }
    dst.var.mutable_value() = src.var.value();
    dst.trainable = src.trainable;
  }
}

Conv Conv::make(ParamStore& store, const std::string& name, int cin, int cout, int kernel, int stride, Rng& rng,
                double gain, bool trainable) {
  Conv c = make_valid(store, name, cin, cout, kernel, kernel, rng, gain);
  store.set_trainable(name + ".", trainable);
  c.stride = stride;
  c.pad = kernel / 2;
  return c;
}

Conv Conv::make_valid(ParamStore& store, const std::string& name, int cin, int cout, int kh, int kw, Rng& rng,
                      double gain) {
  if (cin < 1 || cout < 1) throw InvalidArgument("conv " + name + ": channel counts must be positive");
  Tensor w(Shape{cout, cin, kh, kw});
  std::normal_distribution<double> normal(0.0, gain * std::sqrt(2.0 / (cin * kh * kw)));
  for (double& v : w.values()) v = normal(rng);
  Conv c;
  c.weight = store.add(name + ".weight", std::move(w));
  c.bias = store.add(name + ".bias", Tensor(Shape{1, cout, 1, 1}));
  return c;
}

ag::Var Conv::operator()(const ag::Var& x) const { return ag::conv2d(x, weight, bias, stride, pad); }

ResBlock ResBlock::make(ParamStore& store, const std::string& name, int channels, Rng& rng) {
  // The second conv starts small so a fresh block is close to the identity.
  return {Conv::make(store, name + ".conv1", channels, channels, 3, 1, rng),
          Conv::make(store, name + ".conv2", channels, channels, 3, 1, rng, 0.1)};
}

ag::Var ResBlock::operator()(const ag::Var& x) const { return ag::add(x, second(ag::relu(first(x)))); }

}  // namespace ltgsr
