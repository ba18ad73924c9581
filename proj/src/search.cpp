#include "ltgsr/search.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ltgsr/errors.hpp"
#include "ltgsr/parallel.hpp"
#include "ltgsr/random.hpp"

namespace ltgsr {

namespace {

constexpr double kTieTolerance = 1e-12;
constexpr double kZeroNorm = 1e-12;
constexpr int kOracleMaxGrid = 32;
constexpr int kQueryChunk = 256;

// Scale index (0 = finest) to its factor relative to the coarsest scale.
constexpr int factor_of(int scale) { return 1 << (2 - scale); }

void check_single(const Tensor& t, const char* what) {
  if (t.n() != 1) throw InvalidArgument(std::string(what) + ": expected a single sample, got " + t.shape().str());
}

void check_pyramid(const FeaturePyramid& p, const char* what) {
  for (int i = 0; i < 2; ++i) {
    if (p[i].h() != 2 * p[i + 1].h() || p[i].w() != 2 * p[i + 1].w() || p[i].n() != p[i + 1].n()) {
      throw InvalidArgument(std::string(what) + ": pyramid levels do not halve");
    }
  }
}

void normalize_rows(RowMatrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (n <= kZeroNorm) {
      m.row(i).setZero();
    } else {
      m.row(i) /= n;
    }
  }
}

// Smallest index whose score is within the tie tolerance of the maximum.
std::pair<int, double> pick(const double* scores, int count) {
  double best = scores[0];
  for (int j = 1; j < count; ++j) best = std::max(best, scores[j]);
  for (int j = 0; j < count; ++j) {
    if (scores[j] >= best - kTieTolerance) return {j, scores[j]};
  }
  return {0, scores[0]};
}

double bound(double r, bool normalize) { return normalize ? std::clamp(r, -1.0, 1.0) : r; }

Tensor apply_map(const ag::SparsePlaneMap& map, const Tensor& src) {
  Tensor out(Shape{1, src.c(), map.out_h, map.out_w});
  for (int c = 0; c < src.c(); ++c) map.apply(src.plane(0, c), out.plane(0, c));
  return out;
}

void gather_scale(TextureBundle& b, const Tensor& f_ref, const IndexMap& idx, const RelevanceMap& r, int scale,
                  int patch, int factor) {
  check_single(f_ref, "gather_textures");
  if (f_ref.h() != idx.source_h * factor || f_ref.w() != idx.source_w * factor) {
    throw InvalidArgument("gather_textures: ref feature dims " + f_ref.shape().str() +
                          " do not match the index source grid");
  }
  const int out_h = idx.grid_h * factor;
  const int out_w = idx.grid_w * factor;
  b.t[scale] = apply_map(transfer_map(idx, patch, factor, out_h, out_w, f_ref.h(), f_ref.w()), f_ref);
  b.r[scale] = upsample_relevance(r, out_h, out_w);
}

}  // namespace

PatchGrid unfold(const Tensor& feat, int patch, int stride) {
  check_single(feat, "unfold");
  if (patch < 1 || patch % 2 == 0) throw InvalidArgument("unfold: patch must be odd and positive");
  if (stride < 1) throw InvalidArgument("unfold: stride must be >= 1");
  if (patch > std::min(feat.h(), feat.w())) throw InvalidArgument("unfold: patch larger than the map");
  const int pad = (patch - 1) / 2;
  PatchGrid g;
  g.patch = patch;
  g.stride = stride;
  g.grid_h = (feat.h() + stride - 1) / stride;
  g.grid_w = (feat.w() + stride - 1) / stride;
  const int C = feat.c();
  g.patches = RowMatrix::Zero(static_cast<Eigen::Index>(g.grid_h) * g.grid_w, C * patch * patch);
  for (int gy = 0; gy < g.grid_h; ++gy) {
    for (int gx = 0; gx < g.grid_w; ++gx) {
      double* row = g.patches.row(gy * g.grid_w + gx).data();
      for (int c = 0; c < C; ++c) {
        for (int a = 0; a < patch; ++a) {
          const int y = gy * stride - pad + a;
          if (y < 0 || y >= feat.h()) continue;
          for (int b = 0; b < patch; ++b) {
            const int x = gx * stride - pad + b;
            if (x >= 0 && x < feat.w()) row[(c * patch + a) * patch + b] = feat.at(0, c, y, x);
          }
        }
      }
    }
  }
  return g;
}

Match relevance_search(const Tensor& f_lr, const Tensor& f_refdown, int patch, bool normalize) {
  check_single(f_lr, "relevance_search");
  check_single(f_refdown, "relevance_search");
  if (f_lr.c() != f_refdown.c()) {
    throw InvalidArgument("relevance_search: channel mismatch " + f_lr.shape().str() + " vs " +
                          f_refdown.shape().str());
  }
  PatchGrid q = unfold(f_lr, patch, 1);
  PatchGrid k = unfold(f_refdown, patch, 1);
  if (normalize) {
    normalize_rows(q.patches);
    normalize_rows(k.patches);
  }
  const int nq = static_cast<int>(q.patches.rows());
  const int nk = static_cast<int>(k.patches.rows());

  Match m;
  m.idx = {std::vector<int>(nq), q.grid_h, q.grid_w, k.grid_h, k.grid_w};
  m.r = {std::vector<double>(nq), q.grid_h, q.grid_w};
  const int chunks = (nq + kQueryChunk - 1) / kQueryChunk;
  parallel_for(static_cast<std::size_t>(chunks), [&](std::size_t ci) {
    const int begin = static_cast<int>(ci) * kQueryChunk;
    const int rows = std::min(kQueryChunk, nq - begin);
    RowMatrix scores = q.patches.middleRows(begin, rows) * k.patches.transpose();
    for (int i = 0; i < rows; ++i) {
      auto [j, s] = pick(scores.row(i).data(), nk);
      m.idx.idx[begin + i] = j;
      m.r.r[begin + i] = bound(s, normalize);
    }
  });
  return m;
}

ag::SparsePlaneMap transfer_map(const IndexMap& idx, int patch, int factor, int out_h, int out_w, int src_h,
                            int src_w) {
  if (patch < 1 || patch % 2 == 0 || factor < 1) throw InvalidArgument("transfer_map: bad patch geometry");
  const int P = patch * factor;
  const int s = factor;
  const int pad = (patch - 1) / 2 * factor;
  ag::SparsePlaneMap m;
  m.in_h = src_h;
  m.in_w = src_w;
  m.out_h = out_h;
  m.out_w = out_w;

  // Visits every (output pixel, source pixel) pair in a fixed order.
  auto visit = [&](auto&& emit) {
    for (int qy = 0; qy < idx.grid_h; ++qy) {
      for (int qx = 0; qx < idx.grid_w; ++qx) {
        const int j = idx.at(qy, qx);
        const int jy = j / idx.source_w;
        const int jx = j % idx.source_w;
        for (int a = 0; a < P; ++a) {
          const int oy = qy * s - pad + a;
          const int sy = jy * s - pad + a;
          if (oy < 0 || oy >= out_h || sy < 0 || sy >= src_h) continue;
          for (int b = 0; b < P; ++b) {
            const int ox = qx * s - pad + b;
            const int sx = jx * s - pad + b;
            if (ox < 0 || ox >= out_w || sx < 0 || sx >= src_w) continue;
            emit(oy * out_w + ox, sy * src_w + sx);
          }
        }
      }
    }
  };

  const int rows = out_h * out_w;
  m.row_ptr.assign(static_cast<std::size_t>(rows) + 1, 0);
  visit([&](int o, int) { ++m.row_ptr[static_cast<std::size_t>(o) + 1]; });
  for (int r = 0; r < rows; ++r) {
    if (m.row_ptr[r + 1] == 0) throw InvalidArgument("transfer_map: output pixel without a covering patch");
    m.row_ptr[r + 1] += m.row_ptr[r];
  }
  m.src.resize(static_cast<std::size_t>(m.row_ptr[rows]));
  m.weight.resize(m.src.size());
  std::vector<int> fill(m.row_ptr.begin(), m.row_ptr.end() - 1);
  visit([&](int o, int src) {
    m.src[static_cast<std::size_t>(fill[o]++)] = src;
  });
  for (int r = 0; r < rows; ++r) {
    const double w = 1.0 / (m.row_ptr[r + 1] - m.row_ptr[r]);
    std::fill(m.weight.begin() + m.row_ptr[r], m.weight.begin() + m.row_ptr[r + 1], w);
  }
  return m;
}

Tensor upsample_relevance(const RelevanceMap& r, int out_h, int out_w) {
  Tensor out(Shape{1, 1, out_h, out_w});
  for (int y = 0; y < out_h; ++y) {
    const int gy = static_cast<int>(static_cast<long>(y) * r.grid_h / out_h);
    for (int x = 0; x < out_w; ++x) {
      out.at(0, 0, y, x) = r.at(gy, static_cast<int>(static_cast<long>(x) * r.grid_w / out_w));
    }
  }
  return out;
}

TextureBundle gather_textures(const FeaturePyramid& f_ref, const IndexMap& idx, const RelevanceMap& r,
                              const SearchConfig& cfg) {
  check_pyramid(f_ref, "gather_textures");
  if (static_cast<int>(idx.idx.size()) != idx.grid_h * idx.grid_w || r.grid_h != idx.grid_h ||
      r.grid_w != idx.grid_w) {
    throw InvalidArgument("gather_textures: index and relevance grids differ");
  }
  TextureBundle b;
  for (int i = 0; i < 3; ++i) gather_scale(b, f_ref[i], idx, r, i, cfg.patch, factor_of(i));
  b.idx = {idx};
  b.relevance = {r};
  return b;
}

TextureBundle search_textures(const FeaturePyramid& f_lr, const FeaturePyramid& f_refdown,
                              const FeaturePyramid& f_ref, const SearchConfig& cfg) {
  check_pyramid(f_lr, "search_textures");
  check_pyramid(f_refdown, "search_textures");
  check_pyramid(f_ref, "search_textures");
  if (f_ref[0].h() != f_refdown[0].h() || f_ref[0].w() != f_refdown[0].w()) {
    throw InvalidArgument("search_textures: Ref and Ref-down features differ in size");
  }
  if (cfg.shared_index) {
    Match m = relevance_search(f_lr[2], f_refdown[2], cfg.patch, cfg.normalize);
    return gather_textures(f_ref, m.idx, m.r, cfg);
  }
  TextureBundle b;
  for (int i = 0; i < 3; ++i) {
    Match m = relevance_search(f_lr[i], f_refdown[i], cfg.patch, cfg.normalize);
    gather_scale(b, f_ref[i], m.idx, m.r, i, cfg.patch, 1);
    b.idx.push_back(std::move(m.idx));
    b.relevance.push_back(std::move(m.r));
  }
  return b;
}

namespace {

// Loop-only search; reads the feature maps directly with explicit padding checks.
Match oracle_search(const Tensor& lr, const Tensor& key, int patch, bool normalize) {
  check_single(lr, "brute_force_oracle");
  check_single(key, "brute_force_oracle");
  if (lr.c() != key.c()) throw InvalidArgument("brute_force_oracle: channel mismatch");
  if (lr.h() > kOracleMaxGrid || lr.w() > kOracleMaxGrid || key.h() > kOracleMaxGrid ||
      key.w() > kOracleMaxGrid) {
    throw CostGuard("brute_force_oracle: grid exceeds " + std::to_string(kOracleMaxGrid) + "x" +
                    std::to_string(kOracleMaxGrid));
  }
  if (patch < 1 || patch % 2 == 0) throw InvalidArgument("brute_force_oracle: patch must be odd");
  const int pad = (patch - 1) / 2;
  auto value = [&](const Tensor& t, int c, int y, int x) {
    return (y < 0 || y >= t.h() || x < 0 || x >= t.w()) ? 0.0 : t.at(0, c, y, x);
  };
  auto dot = [&](const Tensor& a, int ay, int ax, const Tensor& b, int by, int bx) {
    double acc = 0.0;
    for (int c = 0; c < a.c(); ++c) {
      for (int dy = -pad; dy <= pad; ++dy) {
        for (int dx = -pad; dx <= pad; ++dx) acc += value(a, c, ay + dy, ax + dx) * value(b, c, by + dy, bx + dx);
      }
    }
    return acc;
  };

  Match m;
  m.idx = {std::vector<int>(static_cast<std::size_t>(lr.h()) * lr.w()), lr.h(), lr.w(), key.h(), key.w()};
  m.r = {std::vector<double>(m.idx.idx.size()), lr.h(), lr.w()};
  std::vector<double> scores(static_cast<std::size_t>(key.h()) * key.w());
  for (int qy = 0; qy < lr.h(); ++qy) {
    for (int qx = 0; qx < lr.w(); ++qx) {
      const double qn = std::sqrt(dot(lr, qy, qx, lr, qy, qx));
      for (int ky = 0; ky < key.h(); ++ky) {
        for (int kx = 0; kx < key.w(); ++kx) {
          double s = dot(lr, qy, qx, key, ky, kx);
          if (normalize) {
            const double kn = std::sqrt(dot(key, ky, kx, key, ky, kx));
            s = (qn <= kZeroNorm || kn <= kZeroNorm) ? 0.0 : s / (qn * kn);
          }
          scores[static_cast<std::size_t>(ky) * key.w() + kx] = s;
        }
      }
      double best = scores[0];
      for (double s : scores) best = std::max(best, s);
      std::size_t j = 0;
      while (scores[j] < best - kTieTolerance) ++j;
      const std::size_t q = static_cast<std::size_t>(qy) * lr.w() + qx;
      m.idx.idx[q] = static_cast<int>(j);
      m.r.r[q] = bound(scores[j], normalize);
    }
  }
  return m;
}

// Direct paste with per-pixel sums and counts.
Tensor oracle_fold(const Tensor& ref, const IndexMap& idx, int patch, int factor) {
  const int P = patch * factor;
  const int pad = (patch - 1) / 2 * factor;
  const int out_h = idx.grid_h * factor;
  const int out_w = idx.grid_w * factor;
  if (ref.h() != idx.source_h * factor || ref.w() != idx.source_w * factor) {
    throw InvalidArgument("brute_force_oracle: ref dims do not match the source grid");
  }
  Tensor sum(Shape{1, ref.c(), out_h, out_w});
  std::vector<int> count(static_cast<std::size_t>(out_h) * out_w, 0);
  for (int qy = 0; qy < idx.grid_h; ++qy) {
    for (int qx = 0; qx < idx.grid_w; ++qx) {
      const int jy = idx.at(qy, qx) / idx.source_w;
      const int jx = idx.at(qy, qx) % idx.source_w;
      for (int a = 0; a < P; ++a) {
        for (int b = 0; b < P; ++b) {
          const int oy = qy * factor - pad + a, ox = qx * factor - pad + b;
          const int sy = jy * factor - pad + a, sx = jx * factor - pad + b;
          if (oy < 0 || oy >= out_h || ox < 0 || ox >= out_w) continue;
          if (sy < 0 || sy >= ref.h() || sx < 0 || sx >= ref.w()) continue;
          for (int c = 0; c < ref.c(); ++c) sum.at(0, c, oy, ox) += ref.at(0, c, sy, sx);
          ++count[static_cast<std::size_t>(oy) * out_w + ox];
        }
      }
    }
  }
  for (int c = 0; c < ref.c(); ++c) {
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) sum.at(0, c, y, x) /= count[static_cast<std::size_t>(y) * out_w + x];
    }
  }
  return sum;
}

Tensor oracle_relevance(const RelevanceMap& r, int factor) {
  Tensor out(Shape{1, 1, r.grid_h * factor, r.grid_w * factor});
  for (int y = 0; y < out.h(); ++y) {
    for (int x = 0; x < out.w(); ++x) out.at(0, 0, y, x) = r.at(y / factor, x / factor);
  }
  return out;
}

}  // namespace

TextureBundle brute_force_oracle(const FeaturePyramid& f_lr, const FeaturePyramid& f_refdown,
                                 const FeaturePyramid& f_ref, const SearchConfig& cfg) {
  TextureBundle b;
  if (cfg.shared_index) {
    Match m = oracle_search(f_lr[2], f_refdown[2], cfg.patch, cfg.normalize);
    for (int i = 0; i < 3; ++i) {
      b.t[i] = oracle_fold(f_ref[i], m.idx, cfg.patch, factor_of(i));
      b.r[i] = oracle_relevance(m.r, factor_of(i));
    }
    b.idx = {m.idx};
    b.relevance = {m.r};
    return b;
  }
  for (int i = 0; i < 3; ++i) {
    Match m = oracle_search(f_lr[i], f_refdown[i], cfg.patch, cfg.normalize);
    b.t[i] = oracle_fold(f_ref[i], m.idx, cfg.patch, 1);
    b.r[i] = oracle_relevance(m.r, 1);
    b.idx.push_back(std::move(m.idx));
    b.relevance.push_back(std::move(m.r));
  }
  return b;
}

TransferPlan plan_transfer(const FeaturePyramid& f_lr, const FeaturePyramid& f_refdown, const SearchConfig& cfg) {
  check_pyramid(f_lr, "plan_transfer");
  check_pyramid(f_refdown, "plan_transfer");
  const int N = f_lr[0].n();
  if (f_refdown[0].n() != N) throw InvalidArgument("plan_transfer: batch sizes differ");
  std::array<std::vector<ag::SparsePlaneMap>, 3> maps;
  std::array<std::vector<Tensor>, 3> rel;
  for (int i = 0; i < 3; ++i) {
    maps[i].resize(static_cast<std::size_t>(N));
    rel[i].resize(static_cast<std::size_t>(N));
  }
  parallel_for(static_cast<std::size_t>(N), [&](std::size_t n) {
    const int sn = static_cast<int>(n);
    auto emit = [&](int i, const Match& m, int factor) {
      const int out_h = m.idx.grid_h * factor, out_w = m.idx.grid_w * factor;
      maps[i][n] = transfer_map(m.idx, cfg.patch, factor, out_h, out_w, f_refdown[i].h(), f_refdown[i].w());
      rel[i][n] = upsample_relevance(m.r, out_h, out_w);
    };
    if (cfg.shared_index) {
      Match m = relevance_search(f_lr[2].sample(sn), f_refdown[2].sample(sn), cfg.patch, cfg.normalize);
      for (int i = 0; i < 3; ++i) emit(i, m, factor_of(i));
    } else {
      for (int i = 0; i < 3; ++i) {
        emit(i, relevance_search(f_lr[i].sample(sn), f_refdown[i].sample(sn), cfg.patch, cfg.normalize), 1);
      }
    }
  });
  TransferPlan plan;
  for (int i = 0; i < 3; ++i) {
    plan.maps[i] = ag::PlaneMapping::from(std::move(maps[i]));
    plan.relevance[i] = stack(rel[i]);
  }
  return plan;
}

ag::Var transfer(const ag::Var& f_ref_i, const TransferPlan& plan, int scale) {
  return ag::plane_map(f_ref_i, plan.maps[scale]);
}

OracleReport run_oracle_check(int trials, std::uint64_t seed, const SearchConfig& cfg) {
  OracleReport rep;
  rep.trials = trials;
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(derive_seed({seed, static_cast<std::uint64_t>(t)}));
    // Independent mode searches the finest scale too, which must stay under the oracle's guard.
    std::uniform_int_distribution<int> grid(3, cfg.shared_index ? 16 : 8), chans(1, 8), flavour(0, 2);
    const int gh = grid(rng), gw = grid(rng), rh = grid(rng), rw = grid(rng);
    const int kind = flavour(rng);
    const std::array<int, 3> channels{chans(rng), chans(rng), chans(rng)};
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto make = [&](int h, int w) {
      FeaturePyramid p;
      for (int i = 0; i < 3; ++i) {
        const int f = factor_of(i);
        Tensor x(Shape{1, channels[i], h * f, w * f});
        for (double& v : x.values()) {
          v = u(rng);
          // Rectified maps contain exact zeros and zero-norm patches.
          if (kind == 1) v = std::max(v, 0.0);
          if (kind == 2) v = v > 0.6 ? v : 0.0;
        }
        p.maps[i] = std::move(x);
      }
      return p;
    };
    const FeaturePyramid lr = make(gh, gw);
    const FeaturePyramid refdown = make(rh, rw);
    const FeaturePyramid ref = make(rh, rw);
    const TextureBundle fast = search_textures(lr, refdown, ref, cfg);
    const TextureBundle slow = brute_force_oracle(lr, refdown, ref, cfg);
    for (std::size_t k = 0; k < fast.idx.size(); ++k) {
      if (!(fast.idx[k] == slow.idx[k])) rep.indices_equal = false;
      for (std::size_t q = 0; q < fast.relevance[k].r.size(); ++q) {
        rep.max_relevance_dev =
            std::max(rep.max_relevance_dev, std::abs(fast.relevance[k].r[q] - slow.relevance[k].r[q]));
      }
    }
    for (int i = 0; i < 3; ++i) {
      rep.max_texture_dev = std::max(rep.max_texture_dev, max_abs_diff(fast.t[i], slow.t[i]));
      rep.max_relevance_dev = std::max(rep.max_relevance_dev, max_abs_diff(fast.r[i], slow.r[i]));
    }
  }
  return rep;
}

}  // namespace ltgsr
