#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ltgsr/autograd.hpp"

namespace ltgsr {

struct Param {
  std::string name;
  ag::Var var;
  bool trainable = true;
};

/// All trainable tensors, addressable by hierarchical dotted name
/// ("encoder.", "ltg.", "decoder.", "critic."). Registration order is stable and
/// defines checkpoint order.
class ParamStore {
 public:
  ag::Var add(std::string name, Tensor init, bool trainable = true);
  const ag::Var& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.contains(name); }

  const std::vector<Param>& entries() const { return entries_; }
  std::vector<Param>& entries() { return entries_; }

  std::vector<ag::Var> vars(std::string_view prefix = "", bool trainable_only = false) const;
  std::vector<const Param*> select(std::string_view prefix = "", bool trainable_only = false) const;
  /// Scalar count under `prefix`.
  std::size_t count(std::string_view prefix = "", bool trainable_only = false) const;
  void set_trainable(std::string_view prefix, bool trainable);

  /// Copies values (not handles) from a store with identical names and shapes.
  void copy_values_from(const ParamStore& other);

 private:
  std::vector<Param> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

using Rng = std::mt19937_64;

/// Convolution with a Kaiming-style fan-in initialised weight and a zero bias.
struct Conv {
  ag::Var weight;
  ag::Var bias;
  int stride = 1;
  int pad = 0;

  static Conv make(ParamStore& store, const std::string& name, int cin, int cout, int kernel, int stride,
                   Rng& rng, double gain = 1.0, bool trainable = true);
  /// Valid (unpadded) convolution, used for dense heads.
  static Conv make_valid(ParamStore& store, const std::string& name, int cin, int cout, int kh, int kw, Rng& rng,
                         double gain = 1.0);
  ag::Var operator()(const ag::Var& x) const;
};

/// x + conv(relu(conv(x))).
struct ResBlock {
  Conv first;
  Conv second;

  static ResBlock make(ParamStore& store, const std::string& name, int channels, Rng& rng);
  ag::Var operator()(const ag::Var& x) const;
};

}  // namespace ltgsr
