#pragma once

#include <array>
#include <memory>
#include <vector>

#include "ltgsr/encoder.hpp"
#include "ltgsr/ops.hpp"
#include "ltgsr/resample.hpp"

namespace ltgsr {

/// Sliding-window patches, one row per grid position (row-major), columns ordered
/// channel-major then row then column within the patch.
struct PatchGrid {
  RowMatrix patches;
  int grid_h = 0;
  int grid_w = 0;
  int patch = 0;
  int stride = 0;
};

/// Best source patch for every query position, as a flat index into the source grid.
struct IndexMap {
  std::vector<int> idx;
  int grid_h = 0;
  int grid_w = 0;
  int source_h = 0;
  int source_w = 0;
  int at(int y, int x) const { return idx[static_cast<std::size_t>(y) * grid_w + x]; }
  bool operator==(const IndexMap&) const = default;
};

struct RelevanceMap {
  std::vector<double> r;
  int grid_h = 0;
  int grid_w = 0;
  double at(int y, int x) const { return r[static_cast<std::size_t>(y) * grid_w + x]; }
};

struct SearchConfig {
  int patch = 3;
  /// Cosine matching; false gives the raw inner product.
  bool normalize = true;
  /// Search once on the coarsest scale and reuse the match on the finer ones.
  bool shared_index = true;
};

/// Transferred textures T (1 x C_i x H_i x W_i), relevance R (1 x 1 x H_i x W_i) per
/// scale, finest first, plus the match that produced them (coarsest scale for the
/// shared-index mode, otherwise one per scale).
struct TextureBundle {
  std::array<Tensor, 3> t;
  std::array<Tensor, 3> r;
  std::vector<IndexMap> idx;
  std::vector<RelevanceMap> relevance;
};

/// Zero-padded by (patch-1)/2; grid is ceil(H/stride) x ceil(W/stride). `feat` must be
/// a single sample.
PatchGrid unfold(const Tensor& feat, int patch, int stride);

struct Match {
  IndexMap idx;
  RelevanceMap r;
};

/// Argmax of the (cosine) inner product between every query patch and every key
/// patch, stride 1. Ties and near-ties (1e-12) resolve to the smallest key index.
Match relevance_search(const Tensor& f_lr, const Tensor& f_refdown, int patch, bool normalize = true);

/// Fold map that pastes source patches selected by `idx` and averages overlaps.
/// `factor` scales patch, stride and padding (1 on the matched scale). Padding
/// sources are skipped; the patch centred on each pixel always contributes.
ag::SparsePlaneMap transfer_map(const IndexMap& idx, int patch, int factor, int out_h, int out_w, int src_h,
                            int src_w);

/// Nearest-neighbour upsampling of the relevance grid to out_h x out_w.
Tensor upsample_relevance(const RelevanceMap& r, int out_h, int out_w);

/// Shared-index gather: `idx`/`r` come from the coarsest scale.
TextureBundle gather_textures(const FeaturePyramid& f_ref, const IndexMap& idx, const RelevanceMap& r,
                              const SearchConfig& cfg = {});

/// Search plus gather for one sample, honouring cfg.shared_index.
TextureBundle search_textures(const FeaturePyramid& f_lr, const FeaturePyramid& f_refdown,
                              const FeaturePyramid& f_ref, const SearchConfig& cfg = {});

/// Exhaustive loop implementation of search plus gather (testing oracle). Throws
/// CostGuard if any searched grid exceeds 32 x 32.
TextureBundle brute_force_oracle(const FeaturePyramid& f_lr, const FeaturePyramid& f_refdown,
                                 const FeaturePyramid& f_ref, const SearchConfig& cfg = {});

/// Batched search result in the form the differentiable transfer needs.
struct TransferPlan {
  std::array<std::shared_ptr<const ag::PlaneMapping>, 3> maps;
  std::array<Tensor, 3> relevance;  // N x 1 x H_i x W_i
};

/// Runs the search for every sample of a batch. Pyramids hold N samples each.
TransferPlan plan_transfer(const FeaturePyramid& f_lr, const FeaturePyramid& f_refdown, const SearchConfig& cfg);

/// T_i as a differentiable function of the Ref features (the match itself is fixed).
ag::Var transfer(const ag::Var& f_ref_i, const TransferPlan& plan, int scale);

struct OracleReport {
  int trials = 0;
  bool indices_equal = true;
  double max_relevance_dev = 0.0;
  double max_texture_dev = 0.0;
};

/// Fast path against the oracle on random instances (grids <= 16 x 16, channels <= 8).
OracleReport run_oracle_check(int trials, std::uint64_t seed, const SearchConfig& cfg = {});

}  // namespace ltgsr
