// Acceptance harness: one PASS/FAIL line per criterion.
//   acceptance [--criterion N] [--workdir DIR]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ltgsr/errors.hpp"
#include "ltgsr/eval.hpp"
#include "ltgsr/imaging.hpp"
#include "ltgsr/losses.hpp"
#include "ltgsr/metrics.hpp"
#include "ltgsr/ops.hpp"
#include "ltgsr/search.hpp"
#include "ltgsr/train.hpp"

using namespace ltgsr;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  /// Seconds counted against the runtime limit; negative means the whole call.
  double timed = -1.0;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- 1

Outcome search_oracle(const fs::path&) {
  SearchConfig shared;
  SearchConfig per_scale;
  per_scale.shared_index = false;
  const OracleReport a = run_oracle_check(32, 1, shared);
  const OracleReport b = run_oracle_check(32, 2, per_scale);
  const double rel = std::max(a.max_relevance_dev, b.max_relevance_dev);
  const double tex = std::max(a.max_texture_dev, b.max_texture_dev);
  const bool ok = a.trials == 32 && b.trials == 32 && a.indices_equal && b.indices_equal && rel <= 1e-6 && tex <= 1e-6;
  return {ok, fmt("32+32 instances, indices equal=%s, max |dR|=%.2e, max |dT|=%.2e",
                  a.indices_equal && b.indices_equal ? "yes" : "no", rel, tex)};
}

// ---------------------------------------------------------------- 2

Outcome gradient_fidelity(const fs::path&) {
  ModelConfig mc = ModelConfig::reduced();
  TrainConfig tc;
  tc.batch = 2;
  tc.crop = 32;
  mc.critic_input = tc.crop;
  tc.seeds = {21, 22, 23};
  const auto data = make_dataset(2, 20, 48, 48);
  Model model(mc, tc.seeds.init);
  Trainer trainer(model, tc);
  FitOptions warm;
  warm.max_steps = 3;  // leave the initialisation so every loss term is informative
  trainer.fit(data, warm);

  const Batch batch = trainer.batch_for(data, 0, 0);
  const GeneratorPass base = generator_forward(model, batch, tc);
  if (!(base.rec.value().item() > 0 && base.per.value().item() > 0 && base.tg.value().item() > 0 &&
        base.adv.value().item() != 0)) {
    return {false, "a loss term is inactive"};
  }
  const SearchState frozen = base.search;

  std::mt19937_64 pick(24);
  std::vector<std::pair<const Param*, std::size_t>> probes;
  for (const char* prefix : {"encoder.stage", "ltg.", "decoder.", "critic."}) {
    const auto params = model.params.select(prefix);
    std::size_t total = 0;
    for (const Param* p : params) total += p->var.value().size();
    for (int k = 0; k < 5; ++k) {
      std::size_t flat = std::uniform_int_distribution<std::size_t>(0, total - 1)(pick);
      for (const Param* p : params) {
        if (flat < p->var.value().size()) {
          probes.emplace_back(p, flat);
          break;
        }
        flat -= p->var.value().size();
      }
    }
  }
  std::vector<ag::Var> vars;
  for (const auto& pr : probes) vars.push_back(pr.first->var);
  const auto grads = ag::grad(base.total, vars);

  const double h = 1e-4;
  double worst = 0.0;
  std::string worst_name;
  for (std::size_t k = 0; k < probes.size(); ++k) {
    ag::Var v = probes[k].first->var;
    double& slot = v.mutable_value().data()[probes[k].second];
    const double keep = slot;
    auto loss = [&](double x) {
      slot = x;
      ag::NoGradGuard guard;
      return generator_forward(model, batch, tc, &frozen).total.value().item();
    };
    const double fd = (loss(keep + h) - loss(keep - h)) / (2 * h);
    slot = keep;
    const double g = grads[k].value().data()[probes[k].second];
    const double err = std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), 1e-8});
    if (err >= worst) {
      worst = err;
      worst_name = fmt("%s[%zu] analytic %.6e fd %.6e", probes[k].first->name.c_str(), probes[k].second, g, fd);
    }
  }
  return {worst < 1e-3, fmt("%zu probes, step 1e-4, max rel err %.2e (%s)", probes.size(), worst, worst_name.c_str())};
}

// ---------------------------------------------------------------- 3

Outcome analytic_values(const fs::path&) {
  std::vector<std::string> failures;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0), scale(0.1, 5.0);
  auto random = [&](Shape s) {
    Tensor t(s);
    for (double& v : t.values()) v = u(rng);
    return t;
  };
  const Tensor hr = random(Shape{3, 1, 8, 8}), sr = random(Shape{3, 1, 8, 8});
  double gp_dev = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Tensor w = random(Shape{1, 1, 8, 8});
    for (double& v : w.values()) v -= 0.5;
    const double norm = scale(rng), lambda = scale(rng);
    double s = 0.0;
    for (double v : w.values()) s += v * v;
    for (double& v : w.values()) v *= norm / std::sqrt(s);
    const ag::Var wv = ag::constant(w);
    const CriticFn linear = [wv](const ag::Var& x) { return ag::conv2d(x, wv, 1, 0); };
    const double gp =
        gradient_penalty(linear, ag::constant(hr), ag::constant(sr), lambda, trial).value().item();
    gp_dev = std::max(gp_dev, std::abs(gp - lambda * (norm - 1) * (norm - 1)));
  }
  if (!(gp_dev <= 1e-9)) failures.push_back("gradient penalty");

  const double p = psnr(Image(16, 16, 0.3), Image(16, 16, 0.4));
  if (!(std::abs(p - 20.0) <= 1e-9)) failures.push_back("psnr");

  Image a(24, 24);
  for (double& v : a.pixels()) v = u(rng);
  const double s = ssim(a, a);
  if (s != 1.0) failures.push_back("ssim");

  // Dyadic values keep the offset arithmetic exact.
  Tensor base(Shape{2, 1, 8, 8});
  for (std::size_t i = 0; i < base.size(); ++i) base.data()[i] = static_cast<double>(i % 64) / 128.0;
  Tensor offset = base;
  for (double& v : offset.values()) v += 0.25;
  const double rec = rec_loss(ag::constant(base), ag::constant(offset)).value().item();
  if (rec != 0.25) failures.push_back("rec_loss");

  std::string detail = fmt("gp dev %.1e, psnr %.12f dB, ssim(a,a) %.17g, rec offset %.17g", gp_dev, p, s, rec);
  for (const auto& f : failures) detail += "; FAILED " + f;
  return {failures.empty(), detail};
}

// ---------------------------------------------------------------- 4

struct OverfitSetup {
  ModelConfig model;
  TrainConfig train;
  std::vector<SampleGroup> data;
};

OverfitSetup overfit_setup() {
  OverfitSetup s;
  s.model = ModelConfig::reduced();
  s.train.epochs = 300;  // 4 pairs, batch 4: one step per epoch
  s.train.batch = 4;
  s.train.crop = 64;
  // The default rates are sized for long schedules; 300 steps need them scaled up.
  s.train.lr_ltg *= 10;
  s.train.lr_encoder *= 10;
  s.train.lr_rest *= 10;
  s.model.critic_input = s.train.crop;
  s.data = make_dataset(4, 0, 96, 96);
  return s;
}

fs::path overfit_checkpoint(const fs::path& workdir) { return workdir / "overfit.ckpt"; }

struct OverfitRun {
  std::vector<StepRecord> log;
  double lr_psnr = 0.0;
  double sr_psnr = 0.0;
};

OverfitRun run_overfit(const fs::path& workdir) {
  const OverfitSetup s = overfit_setup();
  Model model(s.model, s.train.seeds.init);
  Trainer trainer(model, s.train);
  FitOptions opts;
  opts.checkpoint = overfit_checkpoint(workdir);
  OverfitRun run;
  run.log = trainer.fit(s.data, opts);
  std::vector<double> lr, sr;
  for (const auto& g : s.data) {
    lr.push_back(psnr(g.lr, g.hr));
    sr.push_back(psnr(infer(model, g.lr), g.hr));
  }
  run.lr_psnr = std::accumulate(lr.begin(), lr.end(), 0.0) / lr.size();
  run.sr_psnr = std::accumulate(sr.begin(), sr.end(), 0.0) / sr.size();
  return run;
}

Outcome overfit(const fs::path& workdir) {
  const auto t0 = std::chrono::steady_clock::now();
  const OverfitRun run = run_overfit(workdir);
  const double minutes = seconds_since(t0) / 60.0;
  if (run.log.size() != 300) return {false, fmt("expected 300 steps, ran %zu", run.log.size())};
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 10; ++i) {
    first += run.log[i].tg / 10.0;
    last += run.log[run.log.size() - 10 + i].tg / 10.0;
  }
  const double gain = run.sr_psnr - run.lr_psnr;
  const double drop = 1.0 - last / first;
  const bool ok = gain >= 1.5 && drop >= 0.5;
  return {ok, fmt("PSNR LR %.3f -> SR %.3f dB (gain %+.3f), L_tg %.4f -> %.4f (drop %.1f%%), %.1f min", run.lr_psnr,
                  run.sr_psnr, gain, first, last, 100.0 * drop, minutes)};
}

// ---------------------------------------------------------------- 5

Outcome param_structure(const fs::path&) {
  std::vector<long long> counts;
  bool constructed_match = true;
  for (int m = 1; m <= 5; ++m) {
    LTGConfig cfg;
    cfg.m = m;
    counts.push_back(static_cast<long long>(count_params(cfg)));
    ParamStore store;
    Rng rng(m);
    Ltg ltg(store, cfg, rng);
    constructed_match = constructed_match && store.count("ltg.", true) == count_params(cfg);
  }
  bool flat = true;
  for (int i = 0; i + 2 < 5; ++i) flat = flat && counts[i + 2] - 2 * counts[i + 1] + counts[i] == 0;
  std::string list;
  for (auto c : counts) list += (list.empty() ? "" : ", ") + std::to_string(c);
  return {flat && constructed_match,
          fmt("counts m=1..5: %s; per-block increment %lld; constructed stores %s", list.c_str(),
              counts[1] - counts[0], constructed_match ? "match" : "DIFFER")};
}

// ---------------------------------------------------------------- 6

Outcome refless_robustness(const fs::path& workdir) {
  const fs::path path = overfit_checkpoint(workdir);
  if (!fs::exists(path)) run_overfit(workdir);
  const auto t0 = std::chrono::steady_clock::now();
  const Checkpoint ck = read_checkpoint(path);
  const auto model = restore_model(ck);
  const auto data = overfit_setup().data;
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const SensitivityReport r = ref_sensitivity(*model, ck.state, data, seeds);
  bool ltg_same = r.ltg.psnr_std == 0.0 && r.ltg.ssim_std == 0.0;
  bool search_differs = false;
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.ltg.per_image.size(); ++i) {
      const auto &x = row.ltg.per_image[i], &y = r.rows[0].ltg.per_image[i];
      ltg_same = ltg_same && x.psnr == y.psnr && x.ssim == y.ssim && x.pdist == y.pdist;
      const auto &s = row.search.per_image[i], &t = r.rows[0].search.per_image[i];
      search_differs = search_differs || s.psnr != t.psnr || s.ssim != t.ssim || s.pdist != t.pdist;
    }
  }
  // Supplementary: the search path with each sample's own HR as reference.
  double own = 0.0, refless = 0.0;
  for (const auto& g : data) {
    own += psnr(infer_with_ref(*model, g.lr, g.hr, g.lr), g.hr) / data.size();
    refless += psnr(infer(*model, g.lr), g.hr) / data.size();
  }
  return {ltg_same && search_differs,
          fmt("LTG path psnr std %.3g ssim std %.3g (rows identical: %s); search path psnr std %.4g ssim std %.4g "
              "(rows differ: %s); info: ref = own HR %.3f dB vs refless %.3f dB",
              r.ltg.psnr_std, r.ltg.ssim_std, ltg_same ? "yes" : "no", r.search.psnr_std, r.search.ssim_std,
              search_differs ? "yes" : "no", own, refless),
          seconds_since(t0)};
}

// ---------------------------------------------------------------- 7

Outcome registration(const fs::path&) {
  const Image img = generate_phantom(71, 128, 96);
  std::mt19937_64 rng(72);
  std::uniform_int_distribution<int> dy(-31, 31), dx(-23, 23);
  int recovered = 0;
  for (int t = 0; t < 100; ++t) {
    const Shift s{dy(rng), dx(rng)};
    if (phase_correlate(img, circular_shift(img, s.dy, s.dx)) == s) ++recovered;
  }

  struct Case {
    Shift shift;
    int hr_top, hr_left, lr_top, lr_left, h, w;
  };
  // Overlaps of a 128x128 pair, trimmed to multiples of four.
  const Case cases[] = {
      {{0, 0}, 0, 0, 0, 0, 128, 128},     {{8, 4}, 0, 0, 8, 4, 120, 124},
      {{-3, 6}, 3, 0, 0, 6, 124, 120},    {{5, -5}, 0, 5, 5, 0, 120, 120},
      {{-16, -16}, 16, 16, 0, 0, 112, 112}, {{31, 0}, 0, 0, 31, 0, 96, 128},
      {{0, -33}, 0, 33, 0, 0, 128, 92},   {{-1, -2}, 1, 2, 0, 0, 124, 124},
      {{12, -7}, 0, 7, 12, 0, 116, 120},  {{-20, 9}, 20, 0, 0, 9, 108, 116},
  };
  const Image hr = generate_phantom(73, 128, 128);
  int geometry = 0;
  for (const Case& c : cases) {
    const Image lr = circular_shift(hr, c.shift.dy, c.shift.dx);
    const auto [a, b] = register_crop(hr, lr);
    const auto [d, e] = crop_overlap(hr, lr, c.shift);
    if (a == crop(hr, c.hr_top, c.hr_left, c.h, c.w) && b == crop(lr, c.lr_top, c.lr_left, c.h, c.w) && a == d &&
        b == e) {
      ++geometry;
    }
  }
  return {recovered == 100 && geometry == 10,
          fmt("%d/100 shifts recovered, %d/10 overlap rectangles match", recovered, geometry)};
}

// ---------------------------------------------------------------- 8

Outcome determinism(const fs::path& workdir) {
  ModelConfig mc = ModelConfig::reduced();
  TrainConfig tc;
  tc.batch = 2;
  tc.crop = 32;
  tc.epochs = 25;  // 4 pairs, batch 2: 50 steps
  mc.critic_input = tc.crop;
  tc.seeds = {81, 82, 83};
  const auto data = make_dataset(4, 80, 64, 64);

  auto full_run = [&](std::string& log_text, std::vector<StepRecord>& records) {
    Model model(mc, tc.seeds.init);
    Trainer trainer(model, tc);
    std::ostringstream log;
    FitOptions opts;
    opts.log = &log;
    records = trainer.fit(data, opts);
    log_text = log.str();
    return trainer.snapshot();
  };
  std::string log_a, log_b;
  std::vector<StepRecord> rec_a, rec_b;
  const Checkpoint end_a = full_run(log_a, rec_a);
  full_run(log_b, rec_b);
  const bool logs_equal = rec_a.size() == 50 && log_a == log_b && rec_a == rec_b;

  const fs::path path = workdir / "determinism_resume.ckpt";
  {
    Model model(mc, tc.seeds.init);
    Trainer trainer(model, tc);
    FitOptions head;
    head.max_steps = 47;
    trainer.fit(data, head);
    trainer.save(path);
  }
  const Checkpoint ck = read_checkpoint(path);
  const auto model = restore_model(ck);
  Trainer resumed(*model, ck);
  FitOptions tail;
  tail.max_steps = 3;
  const auto rec_c = resumed.fit(data, tail);
  bool resume_equal = rec_c.size() == 3;
  for (std::size_t i = 0; resume_equal && i < 3; ++i) resume_equal = rec_c[i] == rec_a[47 + i];
  const Checkpoint end_c = resumed.snapshot();
  bool params_equal = end_c.params.size() == end_a.params.size();
  for (std::size_t i = 0; params_equal && i < end_a.params.size(); ++i) {
    params_equal = end_c.params[i].name == end_a.params[i].name &&
                   max_abs_diff(end_c.params[i].value, end_a.params[i].value) == 0.0;
  }
  return {logs_equal && resume_equal && params_equal,
          fmt("50-step logs identical: %s; resume steps 48-50 identical: %s; final params identical: %s",
              logs_equal ? "yes" : "no", resume_equal ? "yes" : "no", params_equal ? "yes" : "no")};
}

// ---------------------------------------------------------------- 9

Outcome texture_gating(const fs::path&) {
  const ModelConfig mc = ModelConfig::reduced();
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto random = [&](Shape s, double lo, double hi) {
    Tensor t(s);
    for (double& v : t.values()) v = lo + (hi - lo) * u(rng);
    return t;
  };
  int identical = 0, responsive = 0;
  for (int trial = 0; trial < 10; ++trial) {
    ParamStore store;
    Rng init(100 + trial);
    Decoder decoder(store, mc.decoder(), init);
    const int h = 32;
    Image lr(h, h);
    for (double& v : lr.pixels()) v = u(rng);
    FeaturePyramid f, t;
    std::array<Tensor, 3> r;
    for (int s = 0; s < 3; ++s) {
      const Shape shape{1, mc.channels[s], h >> s, h >> s};
      f.maps[s] = random(shape, 0.0, 1.0);
      t.maps[s] = random(shape, 0.0, 1.0);
      r[s] = Tensor(Shape{1, 1, h >> s, h >> s});
    }
    const Image base = decode(f, t, r, lr, decoder);
    bool same = true;
    for (double delta : {0.1, -0.1}) {
      FeaturePyramid moved = t;
      for (int s = 0; s < 3; ++s) {
        for (double& v : moved.maps[s].values()) v += delta;
      }
      same = same && decode(f, moved, r, lr, decoder) == base;
    }
    if (same) ++identical;
    // Control: with R = 1 the same perturbation must reach the output.
    std::array<Tensor, 3> ones;
    FeaturePyramid moved = t;
    for (int s = 0; s < 3; ++s) {
      ones[s] = Tensor(r[s].shape(), 1.0);
      for (double& v : moved.maps[s].values()) v += 0.1;
    }
    if (decode(f, moved, ones, lr, decoder) != decode(f, t, ones, lr, decoder)) ++responsive;
  }
  return {identical == 10 && responsive == 10,
          fmt("%d/10 trials bit-identical under T +/- 0.1 with R = 0; control with R = 1 responds in %d/10",
              identical, responsive)};
}

using Criterion = std::function<Outcome(const fs::path&)>;

// Runtime limits in seconds (0: none).
const double limits[] = {60, 300, 0, 1200, 10, 300, 30, 0, 0};

const Criterion criteria[] = {search_oracle, gradient_fidelity, analytic_values, overfit,      param_structure,
                              refless_robustness, registration, determinism,   texture_gating};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  int only = 0;
  std::string workdir = "acceptance_work";
  app.add_option("--criterion", only, "Run a single criterion (1-9)")->check(CLI::Range(1, 9));
  app.add_option("--workdir", workdir, "Directory for checkpoints shared between criteria");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(workdir);

  bool all = true;
  for (int n = 1; n <= 9; ++n) {
    if (only != 0 && n != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[n - 1](workdir);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = o.timed >= 0 ? o.timed : seconds_since(t0);
    const double limit = limits[n - 1];
    if (limit > 0 && elapsed >= limit) {
      o.pass = false;
      o.detail += fmt("; exceeded the %.0f s limit", limit);
    }
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail
              << fmt(" [%.1f s]", elapsed) << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
